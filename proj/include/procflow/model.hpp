// SPDX-License-Identifier: Apache-2.0
//
// Process definitions: steps, fields, roles, parameters and the elementary
// processes that reference them. Definitions are loaded from the YAML
// definition format (see docs/definition-format.md).
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "procflow/conditions.hpp"
#include "procflow/error.hpp"
#include "procflow/value.hpp"

namespace procflow {

/// Ids reserved for the synthetic first and last steps of a consolidated model.
inline constexpr std::string_view kInitialStepId = "init";
inline constexpr std::string_view kFinalStepId = "final";

struct FieldDef {
  std::string name;
  std::string caption;
  std::string description;
  KindSpec kind;
  bool mandatory = false;  // value required for step completion
  bool visible_in_view = true;
  bool visible_in_edit = true;

  bool operator==(const FieldDef&) const = default;
};

enum class CompletionMode { on_mandatory_fields, on_deadline };
enum class DeadlineAnchor { procedure_start, previous_step_completion };

struct CompletionRule {
  CompletionMode mode = CompletionMode::on_mandatory_fields;
  Seconds duration{0};
  DeadlineAnchor anchor = DeadlineAnchor::previous_step_completion;

  bool operator==(const CompletionRule&) const = default;
};

struct OutputAssign {
  std::string param;
  ValueExpr value;

  bool operator==(const OutputAssign&) const = default;
};

struct StepDef {
  std::string id;
  int number = 0;  // position in a linear CM; 0 until consolidated
  std::string title;
  std::set<std::string> owner_types;
  std::vector<FieldDef> fields;
  std::vector<OutputAssign> outputs;
  std::set<std::string> edit_roles;
  std::set<std::string> view_roles;
  bool editable = true;
  bool visible = true;
  Condition impl_condition;
  CompletionRule completion;
  bool artificial = false;

  const FieldDef* field(std::string_view name) const;
  bool operator==(const StepDef&) const = default;
};

struct Branch {
  std::vector<std::string> steps;
  std::optional<Condition> when;  // branch-selection condition

  bool operator==(const Branch&) const = default;
};

struct Segment {
  enum class Kind { single, alternatives };
  Kind kind = Kind::single;
  std::string step;               // single
  std::vector<Branch> branches;   // alternatives

  static Segment single_step(std::string id) { return {Kind::single, std::move(id), {}}; }
  bool operator==(const Segment&) const = default;
};

struct ElementaryProcessDef {
  std::string type_id;
  std::string name;
  std::vector<Segment> segments;

  /// Step ids in declaration order (branches flattened in order).
  std::vector<std::string> step_ids() const;
  bool contains(std::string_view step_id) const;
  bool operator==(const ElementaryProcessDef&) const = default;
};

using StepPath = std::vector<std::string>;

class ProcessSet {
 public:
  ProcessSet() = default;
  /// Builds and validates a set; throws Error(validation) listing every problem.
  ProcessSet(std::vector<std::string> roles, ParamDecls params, std::vector<StepDef> steps,
             std::vector<ElementaryProcessDef> processes);

  const std::vector<std::string>& roles() const { return roles_; }
  const ParamDecls& params() const { return params_; }
  const std::vector<StepDef>& steps() const { return steps_; }
  const std::vector<ElementaryProcessDef>& processes() const { return processes_; }

  const StepDef* step(std::string_view id) const;
  const ElementaryProcessDef* process(std::string_view type_id) const;
  std::vector<std::string> type_ids() const;
  /// Catalog position of a step id, or npos.
  std::size_t step_index(std::string_view id) const;
  /// Catalog steps referenced by at least one process, in catalog order.
  std::vector<std::string> used_step_ids() const;
  /// Non-fatal findings from construction (e.g. unused catalog steps).
  const std::vector<Diagnostic>& warnings() const { return warnings_; }

  bool operator==(const ProcessSet& o) const {
    return roles_ == o.roles_ && params_ == o.params_ && steps_ == o.steps_ &&
           processes_ == o.processes_;
  }

 private:
  friend ProcessSet parse_process_set(std::string_view);
  std::vector<std::string> roles_;
  ParamDecls params_;
  std::vector<StepDef> steps_;
  std::vector<ElementaryProcessDef> processes_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<Diagnostic> warnings_;
};

/// Parses the YAML definition format. All problems are collected and thrown
/// together as Error(syntax) or Error(validation) with line/column positions.
ProcessSet parse_process_set(std::string_view text);

/// Canonical YAML rendering; parse_process_set(serialize_process_set(ps)) == ps.
std::string serialize_process_set(const ProcessSet& ps);

/// Steps occurring in at least two processes, in their shared relative order.
/// Throws InconsistentAnchorOrder when two processes disagree on a pair.
std::vector<std::string> common_steps(const ProcessSet& ps);

/// Cartesian expansion of a process's segments into execution paths.
std::vector<StepPath> paths_of(const ElementaryProcessDef& p);

}  // namespace procflow
