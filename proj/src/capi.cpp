// SPDX-License-Identifier: Apache-2.0
#include "procflow/procflow.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "procflow/api.hpp"
#include "procflow/store.hpp"
#include "procflow/verify.hpp"

using namespace procflow;

struct pf_process_set {
  std::shared_ptr<const ProcessSet> ps;
};
struct pf_model {
  ConsolidatedModel cm;
  std::optional<Strategy> strategy;
};
struct pf_store {
  FileStore store;
};
struct pf_server {
  Service service;
};

namespace {

thread_local std::string last_error;

pf_status fail(pf_status s, std::string message) {
  last_error = std::move(message);
  return s;
}

// Runs `fn`, translating exceptions to status codes.
template <typename F>
pf_status guard(F&& fn) {
  last_error.clear();
  try {
    fn();
    return PF_OK;
  } catch (const Error& e) {
    std::string msg = e.what();
    for (const auto& d : e.diagnostics()) msg += "\n" + d.str();
    return fail(static_cast<pf_status>(static_cast<int>(e.kind()) + 1), msg);
  } catch (const std::bad_alloc&) {
    return fail(PF_E_INTERNAL, "out of memory");
  } catch (const nlohmann::json::exception& e) {
    return fail(PF_E_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PF_E_INTERNAL, e.what());
  }
}

char* dup(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorKind::invalid_argument, std::string(what) + " must not be null");
}

Strategy strategy_of(const char* name) {
  if (!name || !*name) return Strategy::by_process;
  const auto s = parse_strategy(name);
  if (!s) throw Error(ErrorKind::invalid_argument, std::string("unknown strategy '") + name + "'");
  return *s;
}

Timestamp now_or(const char* text) {
  if (!text || !*text) return std::chrono::floor<Seconds>(std::chrono::system_clock::now());
  const auto t = parse_timestamp(text);
  if (!t) throw Error(ErrorKind::invalid_argument, std::string("bad timestamp '") + text + "'");
  return *t;
}

std::shared_ptr<const ProcessSet> stored_definitions(const FileStore& store) {
  const auto doc = store.definitions();
  if (!doc) throw Error(ErrorKind::not_found, "no definitions stored");
  return std::make_shared<const ProcessSet>(parse_process_set(doc->text));
}

}  // namespace

extern "C" {

const char* pf_version(void) { return "1.0.0"; }

const char* pf_status_name(pf_status status) {
  if (status == PF_OK) return "ok";
  if (status == PF_E_INTERNAL) return "internal_error";
  if (status < PF_E_SYNTAX || status > PF_E_IO) return "unknown";
  return to_string(static_cast<ErrorKind>(status - 1)).data();
}

const char* pf_last_error(void) { return last_error.c_str(); }

void pf_string_free(char* s) { std::free(s); }

pf_status pf_process_set_parse(const char* text, size_t len, pf_process_set** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new pf_process_set{std::make_shared<const ProcessSet>(parse_process_set(std::string_view(text, len)))};
  });
}

pf_status pf_process_set_load(const char* path, pf_process_set** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new pf_process_set{std::make_shared<const ProcessSet>(parse_process_set(read_text_file(path)))};
  });
}

void pf_process_set_free(pf_process_set* ps) { delete ps; }

pf_status pf_process_set_describe(const pf_process_set* ps, char** json_out) {
  return guard([&] {
    need(ps, "ps");
    need(json_out, "json_out");
    const ProcessSet& p = *ps->ps;
    nlohmann::json types = nlohmann::json::array();
    for (const auto& e : p.processes()) types.push_back({{"type", e.type_id}, {"name", e.name}, {"steps", e.step_ids()}});
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, kind] : p.params()) params[name] = kind_name(kind);
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : p.warnings()) warnings.push_back(w.str());
    const nlohmann::json j{{"roles", p.roles()},
                           {"params", params},
                           {"types", types},
                           {"steps", p.steps().size()},
                           {"warnings", warnings}};
    *json_out = dup(j.dump());
  });
}

pf_status pf_model_build(const pf_process_set* ps, const char* strategy, pf_model** out) {
  return guard([&] {
    need(ps, "ps");
    need(out, "out");
    const auto s = strategy_of(strategy);
    *out = new pf_model{consolidate(ps->ps, s), s};
  });
}

pf_status pf_model_build_from_graph(const pf_process_set* ps, const char* strategy, pf_model** out) {
  return guard([&] {
    need(ps, "ps");
    need(out, "out");
    const auto s = strategy_of(strategy);
    *out = new pf_model{attach_conditions(linearize_graph(build_graph_cm(ps->ps), s)), s};
  });
}

pf_status pf_model_from_text(const pf_process_set* ps, const char* cm_text, pf_model** out) {
  return guard([&] {
    need(ps, "ps");
    need(cm_text, "cm_text");
    need(out, "out");
    const auto order = parse_cm_order(cm_text);
    *out = new pf_model{attach_conditions(model_from_order(ps->ps, order)), std::nullopt};
  });
}

void pf_model_free(pf_model* m) { delete m; }

pf_status pf_model_serialize(const pf_model* m, char** yaml_out) {
  return guard([&] {
    need(m, "model");
    need(yaml_out, "yaml_out");
    *yaml_out = dup(serialize_cm(m->cm, m->strategy));
  });
}

pf_status pf_model_order_json(const pf_model* m, char** json_out) {
  return guard([&] {
    need(m, "model");
    need(json_out, "json_out");
    *json_out = dup(nlohmann::json(m->cm.order()).dump());
  });
}

pf_status pf_graph(const pf_process_set* ps, const char* format, char** out) {
  return guard([&] {
    need(ps, "ps");
    need(out, "out");
    const std::string f = format ? format : "dot";
    const auto g = build_graph_cm(ps->ps);
    if (f == "dot") {
      *out = dup(graph_to_dot(g));
    } else if (f == "json") {
      *out = dup(graph_to_json(g).dump(2));
    } else {
      throw Error(ErrorKind::invalid_argument, "graph format must be dot or json");
    }
  });
}

pf_status pf_verify(const pf_process_set* ps, const char* cm_text, int* correct, char** verdict_json) {
  return guard([&] {
    need(ps, "ps");
    need(cm_text, "cm_text");
    const auto verdict = verify_linear_cm(*ps->ps, parse_cm_order(cm_text));
    if (correct) *correct = verdict.correct ? 1 : 0;
    if (verdict_json) {
      auto j = verdict_to_json(verdict);
      j["report"] = explain(verdict);
      *verdict_json = dup(j.dump());
    }
  });
}

pf_status pf_enumerate(const pf_process_set* ps, size_t max_steps, char** json_out) {
  return guard([&] {
    need(ps, "ps");
    need(json_out, "json_out");
    *json_out = dup(nlohmann::json(enumerate_valid_linearizations(*ps->ps, max_steps)).dump());
  });
}

pf_status pf_simulate(const pf_process_set* ps, const pf_model* m, const char* script_json,
                      const char* proc_type, char** json_out) {
  return guard([&] {
    need(ps, "ps");
    need(m, "model");
    need(script_json, "script_json");
    need(json_out, "json_out");
    auto j = nlohmann::json::parse(script_json);
    if (proc_type && *proc_type) j["proc_type"] = proc_type;
    const auto script = parse_replay_script(j, *ps->ps);
    const Engine engine(std::make_shared<const ConsolidatedModel>(m->cm));
    const auto r = replay(engine, script);
    nlohmann::json audit = nlohmann::json::array();
    for (const auto& a : r.audit) audit.push_back(audit_to_json(a));
    *json_out = dup(nlohmann::json{{"trace", r.trace},
                                   {"finished", r.finished},
                                   {"instance", instance_to_json(r.instance)},
                                   {"audit", audit}}
                        .dump());
  });
}

pf_status pf_store_open(const char* dir, pf_store** out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new pf_store{FileStore(dir)};
  });
}

void pf_store_free(pf_store* st) { delete st; }

pf_status pf_store_put_definitions(pf_store* st, const char* text, int* version_out) {
  return guard([&] {
    need(st, "store");
    need(text, "text");
    parse_process_set(text);  // reject invalid documents before storing
    const auto doc = st->store.put_definitions(text);
    if (version_out) *version_out = doc.version;
  });
}

pf_status pf_store_build_cm(pf_store* st, const char* strategy, char** json_out) {
  return guard([&] {
    need(st, "store");
    const auto s = strategy_of(strategy);
    const auto defs = stored_definitions(st->store);
    const auto version = st->store.definitions()->version;
    const auto cm = consolidate(defs, s);
    const auto stored = st->store.put_cm(cm, s, version);
    if (json_out) {
      *json_out = dup(nlohmann::json{{"id", stored.ref.id},
                                     {"version", stored.ref.version},
                                     {"definitions_version", version},
                                     {"order", cm.order()}}
                          .dump());
    }
  });
}

pf_status pf_store_put_user(pf_store* st, const char* name, const char* password, const char* roles) {
  return guard([&] {
    need(st, "store");
    need(name, "name");
    need(password, "password");
    need(roles, "roles");
    std::set<std::string> set;
    std::stringstream in(roles);
    for (std::string r; std::getline(in, r, ',');) {
      if (!r.empty()) set.insert(r);
    }
    if (set.empty()) throw Error(ErrorKind::invalid_argument, "a user needs at least one role");
    st->store.put_user(name, password, set);
  });
}

pf_status pf_store_search(pf_store* st, const char* query, const char* now, char** json_out) {
  return guard([&] {
    need(st, "store");
    need(json_out, "json_out");
    httplib::Params params;
    if (query) httplib::detail::parse_query_text(query, params);
    const std::multimap<std::string, std::string> args(params.begin(), params.end());
    std::shared_ptr<const ProcessSet> defs;
    if (st->store.definitions()) defs = stored_definitions(st->store);
    const auto q = parse_search_query(args, defs ? &defs->params() : nullptr);
    *json_out = dup(page_to_json(search_instances(st->store.load_all(), q, now_or(now))).dump());
  });
}

pf_status pf_store_report(pf_store* st, const char* kind, const char* format, const char* now, char** out) {
  return guard([&] {
    need(st, "store");
    need(kind, "kind");
    need(out, "out");
    std::vector<std::string> types;
    if (st->store.definitions()) types = stored_definitions(st->store)->type_ids();
    const auto r = make_report(kind, st->store.load_all(), st->store.all_audits(), types, now_or(now));
    const std::string f = format ? format : "json";
    if (f == "csv") {
      *out = dup(report_to_csv(r));
    } else if (f == "json") {
      *out = dup(report_to_json(r).dump(2));
    } else {
      throw Error(ErrorKind::invalid_argument, "report format must be json or csv");
    }
  });
}

pf_status pf_server_start(const char* data_dir, const char* host, int port, pf_server** out, int* port_out) {
  return guard([&] {
    need(data_dir, "data_dir");
    need(out, "out");
    std::unique_ptr<pf_server> srv(new pf_server{Service(ServiceOptions{data_dir, {}, {}, Seconds{8 * 3600}})});
    const int bound = srv->service.start(host ? host : "127.0.0.1", port);
    if (port_out) *port_out = bound;
    *out = srv.release();
  });
}

void pf_server_stop(pf_server* srv) { delete srv; }

pf_status pf_serve(const char* data_dir, const char* host, int port) {
  return guard([&] {
    need(data_dir, "data_dir");
    Service service(ServiceOptions{data_dir, {}, {}, Seconds{8 * 3600}});
    service.run(host ? host : "0.0.0.0", port);
  });
}

}  // extern "C"
