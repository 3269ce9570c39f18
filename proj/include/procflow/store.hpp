// SPDX-License-Identifier: Apache-2.0
//
// File-backed persistence. Layout under the root directory:
//
//   definitions/index.json, definitions/v<N>.yaml   content-versioned definitions
//   cms/index.json, cms/v<N>.yaml                   consolidated models
//   instances/<id>.json                             one document per instance
//   audit/<id>.log                                  append-only JSON lines
//   users.json                                      salted password digests
//
// Documents are replaced by write-to-temp then rename, so a crash leaves
// either the old or the new version. Audit records are appended before the
// instance document is replaced.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "procflow/runtime.hpp"

namespace procflow {

struct StoredDocument {
  int version = 0;
  std::string sha256;
  std::string text;
};

struct StoredCm {
  CmRef ref;
  int definitions_version = 0;
  std::string strategy;
  std::string text;
};

struct User {
  std::string name;
  std::set<std::string> roles;
};

struct SearchQuery {
  std::optional<std::string> proc_type;
  std::optional<ProcedureStatus> status;
  std::optional<Timestamp> created_from;  // inclusive
  std::optional<Timestamp> created_to;    // exclusive
  std::vector<std::pair<std::string, StepStatus>> step_status;
  std::vector<std::pair<std::string, std::string>> params;  // name, value as text
  std::optional<bool> overdue;
  std::optional<std::string> text;  // case-insensitive, over field values
  std::string sort = "created_at";  // created_at | id | proc_type | status | version
  bool descending = false;
  std::size_t offset = 0;
  std::size_t limit = 50;
};

/// Builds a query from `key=value` pairs (API query string, CLI flags).
/// Keys: proc_type, status, created_from, created_to, step.<id>, param.<name>,
/// overdue, q, sort (prefix '-' for descending), offset, limit.
/// Throws Error(invalid_query); with `decls` given, parameter names are checked.
SearchQuery parse_search_query(const std::multimap<std::string, std::string>& args,
                               const ParamDecls* decls = nullptr);

struct InstanceSummary {
  std::string id;
  std::string proc_type;
  ProcedureStatus status = ProcedureStatus::current;
  Timestamp created_at{};
  int version = 0;
  std::optional<std::string> current_step;
  std::optional<Timestamp> deadline;
  bool overdue = false;
};

struct SearchPage {
  std::size_t total = 0;
  std::vector<InstanceSummary> items;
};

InstanceSummary summarize(const ProcedureInstance& inst, Timestamp now);

/// Conjunctive filtering; deterministic order (sort key, then id).
SearchPage search_instances(const std::vector<ProcedureInstance>& all, const SearchQuery& q, Timestamp now);

nlohmann::json summary_to_json(const InstanceSummary& s);
nlohmann::json page_to_json(const SearchPage& p);

inline const std::vector<std::string> kReportKinds{"counts_by_type_and_status", "overdue_steps",
                                                   "step_duration_summary", "activity_by_role"};

struct Report {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

/// Throws Error(unknown_report). `types` lists declared procedure types so
/// count tables include zero rows.
Report make_report(std::string_view kind, const std::vector<ProcedureInstance>& instances,
                   const std::map<std::string, std::vector<AuditRecord>>& audits,
                   const std::vector<std::string>& types, Timestamp now);

nlohmann::json report_to_json(const Report& r);
std::string report_to_csv(const Report& r);

class FileStore {
 public:
  explicit FileStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Stores validated definitions; identical content returns the existing version.
  StoredDocument put_definitions(std::string_view text);
  std::optional<StoredDocument> definitions(std::optional<int> version = std::nullopt) const;

  /// The model's id is a digest of its serialized document.
  StoredCm put_cm(const ConsolidatedModel& cm, std::optional<Strategy> strategy, int definitions_version);
  std::optional<StoredCm> cm(std::optional<int> version = std::nullopt) const;
  std::shared_ptr<const ConsolidatedModel> load_cm(const CmRef& ref) const;

  std::string next_instance_id();

  /// Requires inst.version == stored version + 1 (1 for a new instance);
  /// otherwise Error(version_conflict).
  void save(const Transition& t);
  ProcedureInstance load_instance(const std::string& id) const;
  bool has_instance(const std::string& id) const;
  std::vector<std::string> instance_ids() const;
  std::vector<ProcedureInstance> load_all() const;
  std::vector<AuditRecord> audit(const std::string& id) const;
  std::map<std::string, std::vector<AuditRecord>> all_audits() const;

  void put_user(const std::string& name, const std::string& password, const std::set<std::string>& roles);
  std::optional<User> authenticate(const std::string& name, const std::string& password) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
};

/// Replaces `path` atomically with `data`.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace procflow
