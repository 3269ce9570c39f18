/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to procflow.
 *
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Strings returned through `char**` are heap copies owned by
 * the caller and must be released with pf_string_free. Every call returns a
 * pf_status; on failure pf_last_error() describes the problem for the calling
 * thread until its next call.
 */
#ifndef PROCFLOW_H
#define PROCFLOW_H

#include <stddef.h>

#if defined(_WIN32)
#define PF_API __declspec(dllexport)
#else
#define PF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pf_status {
  PF_OK = 0,
  PF_E_SYNTAX,
  PF_E_VALIDATION,
  PF_E_INCONSISTENT_ANCHOR_ORDER,
  PF_E_MISSING_BRANCH_CONDITION,
  PF_E_TOO_LARGE,
  PF_E_UNKNOWN_PROC_TYPE,
  PF_E_ILL_TYPED_PARAMS,
  PF_E_UNKNOWN_STEP,
  PF_E_UNAUTHORIZED,
  PF_E_NOT_EDITABLE,
  PF_E_NOT_CURRENT_STEP,
  PF_E_ILL_TYPED_VALUE,
  PF_E_STALE_VERSION,
  PF_E_ARCHIVED,
  PF_E_NOT_FINISHED,
  PF_E_NOT_FOUND,
  PF_E_VERSION_CONFLICT,
  PF_E_INVALID_QUERY,
  PF_E_UNKNOWN_REPORT,
  PF_E_UNAUTHENTICATED,
  PF_E_INVALID_ARGUMENT,
  PF_E_IO,
  PF_E_INTERNAL = 100
} pf_status;

typedef struct pf_process_set pf_process_set;
typedef struct pf_model pf_model;
typedef struct pf_store pf_store;
typedef struct pf_server pf_server;

PF_API const char* pf_version(void);
/* Stable identifier such as "syntax_error" or "stale_version". */
PF_API const char* pf_status_name(pf_status status);
/* Message for the last failed call on this thread; "" after success. */
PF_API const char* pf_last_error(void);
PF_API void pf_string_free(char* s);

/* Definitions */
PF_API pf_status pf_process_set_parse(const char* text, size_t len, pf_process_set** out);
PF_API pf_status pf_process_set_load(const char* path, pf_process_set** out);
PF_API void pf_process_set_free(pf_process_set* ps);
/* {roles, params, types:[{type, steps}], steps, warnings} */
PF_API pf_status pf_process_set_describe(const pf_process_set* ps, char** json_out);

/* Consolidated models. `strategy` is "by-process" or "round-robin" (NULL: by-process). */
PF_API pf_status pf_model_build(const pf_process_set* ps, const char* strategy, pf_model** out);
/* Graph construction followed by contraction of the OR connectors. */
PF_API pf_status pf_model_build_from_graph(const pf_process_set* ps, const char* strategy, pf_model** out);
/* Adopts a hand-written order; fails with PF_E_VALIDATION if it is incorrect. */
PF_API pf_status pf_model_from_text(const pf_process_set* ps, const char* cm_text, pf_model** out);
PF_API void pf_model_free(pf_model* m);
PF_API pf_status pf_model_serialize(const pf_model* m, char** yaml_out);
PF_API pf_status pf_model_order_json(const pf_model* m, char** json_out);

/* Standard form as "dot" or "json". */
PF_API pf_status pf_graph(const pf_process_set* ps, const char* format, char** out);

/* Checks a CM document. *correct is 1 or 0; the verdict JSON carries the
 * violations and a plain-text "report". */
PF_API pf_status pf_verify(const pf_process_set* ps, const char* cm_text, int* correct, char** verdict_json);
/* JSON array of every valid order (without artificial steps). */
PF_API pf_status pf_enumerate(const pf_process_set* ps, size_t max_steps, char** json_out);

/* Runs a JSON replay script against model `m`, built from `ps`. `proc_type` may
 * be NULL to use the script's own. Result: {trace, finished, instance, audit}. */
PF_API pf_status pf_simulate(const pf_process_set* ps, const pf_model* m, const char* script_json,
                             const char* proc_type, char** json_out);

/* Storage */
PF_API pf_status pf_store_open(const char* dir, pf_store** out);
PF_API void pf_store_free(pf_store* st);
PF_API pf_status pf_store_put_definitions(pf_store* st, const char* text, int* version_out);
/* Builds and stores a model from the current definitions. */
PF_API pf_status pf_store_build_cm(pf_store* st, const char* strategy, char** json_out);
/* `roles` is comma separated. */
PF_API pf_status pf_store_put_user(pf_store* st, const char* name, const char* password, const char* roles);
/* `query` is a URL-style "key=value&key=value" string; `now` is ISO 8601 or NULL. */
PF_API pf_status pf_store_search(pf_store* st, const char* query, const char* now, char** json_out);
/* `format` is "json" or "csv". */
PF_API pf_status pf_store_report(pf_store* st, const char* kind, const char* format, const char* now,
                                 char** out);

/* HTTP service. Port 0 picks a free port, reported through *port_out. */
PF_API pf_status pf_server_start(const char* data_dir, const char* host, int port, pf_server** out,
                                 int* port_out);
PF_API void pf_server_stop(pf_server* srv);
/* Serves on the calling thread until the process is interrupted. */
PF_API pf_status pf_serve(const char* data_dir, const char* host, int port);

#ifdef __cplusplus
}
#endif

#endif /* PROCFLOW_H */
