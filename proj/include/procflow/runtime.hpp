// SPDX-License-Identifier: Apache-2.0
//
// Procedure instances executed over a consolidated model. Every mutating
// operation is a pure function from an instance to a Transition: the next
// instance plus the single audit record describing the change. Persisting
// both is the caller's job (see store.hpp).
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "procflow/consolidate.hpp"

namespace procflow {

enum class StepStatus { future, current, completed, skipped };
enum class ProcedureStatus { current, archived };

std::string_view to_string(StepStatus s);
std::string_view to_string(ProcedureStatus s);
std::optional<StepStatus> parse_step_status(std::string_view text);
std::optional<ProcedureStatus> parse_procedure_status(std::string_view text);

struct Actor {
  std::string user;
  std::string role;
  bool operator==(const Actor&) const = default;
};

struct StepState {
  StepStatus status = StepStatus::future;
  std::map<std::string, Value> field_values;
  std::optional<Timestamp> completed_at;  // completion or skip time
  std::optional<Actor> completed_by;
  std::optional<Timestamp> deadline;
  std::optional<Timestamp> activated_at;  // first time the step became current
  int closed_seq = 0;                     // 1-based order of completion/skip

  bool operator==(const StepState&) const = default;
};

struct CmRef {
  std::string id;
  int version = 0;
  bool operator==(const CmRef&) const = default;
};

struct ProcedureInstance {
  std::string id;
  std::string proc_type;
  CmRef cm_ref;
  ProcedureStatus status = ProcedureStatus::current;
  ParamEnv env;
  std::map<std::string, StepState> step_states;
  Timestamp created_at{};
  std::optional<Timestamp> archived_at;
  int version = 0;

  /// Id of the step whose status is `current`, if any.
  std::optional<std::string> current_step() const;
  bool operator==(const ProcedureInstance&) const = default;
};

struct AuditRecord {
  std::int64_t seq = 0;
  std::string instance_id;
  std::string user;
  std::string role;
  std::string operation;  // create, submit_edit, amend, expire_deadlines, archive
  std::string step;
  int version_before = 0;
  int version_after = 0;
  Timestamp timestamp{};
  nlohmann::json payload;  // inputs needed to re-run the operation
  std::string digest;      // SHA-256 of the serialized payload, hex

  bool operator==(const AuditRecord&) const = default;
};

struct Transition {
  ProcedureInstance instance;
  AuditRecord audit;
};

enum class StepMode { edit, view, hidden };
std::string_view to_string(StepMode m);

struct FieldView {
  std::string name;
  std::string caption;
  std::string description;
  std::string kind;
  bool mandatory = false;
  std::optional<Value> value;
};

struct StepView {
  std::string id;
  int number = 0;
  StepMode mode = StepMode::hidden;
  // Empty for hidden steps.
  std::string title;
  std::optional<StepStatus> status;
  std::optional<Timestamp> deadline;
  std::vector<FieldView> fields;
};

struct ViewModel {
  std::string instance_id;
  std::string proc_type;
  ProcedureStatus status = ProcedureStatus::current;
  int version = 0;
  std::string role;
  std::optional<std::string> current_step;
  std::vector<StepView> steps;
};

struct RuntimeOptions {
  bool allow_amend = false;  // permit edits of already completed steps
};

/// Stateless executor bound to one consolidated model (with conditions
/// attached). Safe to share between threads.
class Engine {
 public:
  explicit Engine(std::shared_ptr<const ConsolidatedModel> cm, RuntimeOptions options = {});

  const ConsolidatedModel& model() const { return *cm_; }
  const RuntimeOptions& options() const { return options_; }

  Transition create(std::string id, CmRef cm_ref, std::string_view proc_type,
                    const std::map<std::string, Value>& params, const Actor& actor,
                    Timestamp clock) const;

  /// First step in model order that is open and whose condition holds.
  std::optional<std::string> determine_current_step(const ProcedureInstance& inst, Timestamp clock) const;

  /// Errors are checked in this order: archived, stale_version, unknown_step,
  /// unauthorized, not_editable, not_current_step, ill_typed_value.
  Transition submit_edit(const ProcedureInstance& inst, const Actor& actor, std::string_view step_id,
                         const std::map<std::string, Value>& values, int expected_version,
                         Timestamp clock) const;

  /// Skips the current step while its deadline is <= clock, cascading to the
  /// successor. Returns nullopt when nothing expired.
  std::optional<Transition> expire_deadlines(const ProcedureInstance& inst, const Actor& actor,
                                             Timestamp clock) const;

  /// Views the instance as of `clock` (pending expiries applied, not stored).
  ViewModel render_view(const ProcedureInstance& inst, std::string_view role, Timestamp clock) const;

  Transition archive(const ProcedureInstance& inst, const Actor& actor, Timestamp clock,
                     bool override_unfinished = false) const;

  /// Rebuilds an instance by re-running its audit trail.
  ProcedureInstance rebuild(std::span<const AuditRecord> records) const;

  /// Converts wire values for a step's fields; throws Error(ill_typed_value).
  std::map<std::string, Value> values_from_json(std::string_view step_id, const nlohmann::json& j) const;

 private:
  void settle(ProcedureInstance& inst, Timestamp t) const;
  bool expire_in_place(ProcedureInstance& inst, Timestamp clock) const;
  bool step_applies(const StepDef& s, const ProcedureInstance& inst) const;
  AuditRecord audit(const ProcedureInstance& before, const ProcedureInstance& after, const Actor& actor,
                    std::string operation, std::string step, Timestamp clock, nlohmann::json payload) const;

  std::shared_ptr<const ConsolidatedModel> cm_;
  RuntimeOptions options_;
};

// Scripted execution used by tests and the `simulate` command.
struct ScriptedEdit {
  std::string step;
  std::string role;  // empty: first of the step's edit roles
  std::string user = "script";
  std::optional<Timestamp> at;
  std::map<std::string, nlohmann::json> values;
  bool skip = false;  // let the deadline pass instead of editing
};

struct ReplayScript {
  std::string proc_type;
  Timestamp start{};
  std::map<std::string, Value> params;
  std::vector<ScriptedEdit> edits;  // consumed per step, in order
  bool autofill = true;             // fill unscripted current steps with placeholder values
  Seconds step_interval{3600};      // clock advance between automatic edits
};

struct ReplayResult {
  std::vector<std::string> trace;  // closed non-artificial steps, in closing order
  ProcedureInstance instance;
  std::vector<AuditRecord> audit;
  bool finished = false;
};

ReplayResult replay(const Engine& engine, const ReplayScript& script);

/// Parses the JSON script format: {proc_type, start, params, edits:[...], autofill}.
ReplayScript parse_replay_script(const nlohmann::json& j, const ProcessSet& ps);

/// Placeholder value for a kind, used by autofill.
Value placeholder_value(const KindSpec& kind, Timestamp clock);

nlohmann::json instance_to_json(const ProcedureInstance& inst);
ProcedureInstance instance_from_json(const nlohmann::json& j);
nlohmann::json audit_to_json(const AuditRecord& r);
AuditRecord audit_from_json(const nlohmann::json& j);
nlohmann::json view_to_json(const ViewModel& v);

std::string sha256_hex(std::string_view data);

}  // namespace procflow
