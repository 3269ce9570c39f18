// SPDX-License-Identifier: Apache-2.0
//
// Correctness of linear consolidated models. An order is correct for a
// process set when
//   (a) every step of every process appears exactly once,
//   (b) common steps appear in their shared order, and
//   (c) every execution path of every process is a subsequence of it.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "procflow/consolidate.hpp"
#include "procflow/model.hpp"

namespace procflow {

enum class ViolationKind {
  order,          // two consecutive path steps appear inverted
  missing_step,   // a process step is absent
  duplicate_step, // a step appears more than once
  anchor_order,   // two common steps appear inverted
  boundary,       // a step lies outside the initial/final steps
  extra_step,     // a step that belongs to no source process
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind = ViolationKind::order;
  std::string process;  // empty for kinds not tied to one process
  int path = 0;         // 1-based path index for order violations
  std::string step_a;
  std::string step_b;   // second step of a pair, or the upper boundary
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct Verdict {
  bool correct = true;
  std::vector<Violation> violations;  // sorted by (process, kind, step)
};

Verdict verify_linear_cm(const ProcessSet& ps, std::span<const std::string> order);
Verdict verify_linear_cm(const ProcessSet& ps, const ConsolidatedModel& cm);

inline constexpr std::size_t kDefaultEnumerationBound = 10;

/// Every correct order of the set's process steps (artificial steps
/// excluded), in lexicographic order of catalog indices. Throws
/// Error(too_large) when the set has more than `max_steps` steps.
std::vector<std::vector<std::string>> enumerate_valid_linearizations(
    const ProcessSet& ps, std::size_t max_steps = kDefaultEnumerationBound);

/// "correct", or one line per violation.
std::string explain(const Verdict& verdict);

nlohmann::json verdict_to_json(const Verdict& verdict);

}  // namespace procflow
