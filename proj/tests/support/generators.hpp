// SPDX-License-Identifier: Apache-2.0
// Random inputs for the property suites.
#pragma once

#include <random>

#include "procflow/runtime.hpp"

namespace fixtures {

struct SetShape {
  int max_processes = 5;
  int max_steps_per_process = 8;
  int max_total_steps = 12;   // size of the step pool
  double alternatives = 0.3;  // chance that a process gets a two-way branch
  double deadlines = 0.0;     // chance that a step completes on a deadline
};

/// Processes draw ordered subsets of one hidden global step order, so anchor
/// orders are always consistent. Catalog order is shuffled independently.
/// Branches are chosen by boolean parameters `f1`..`f5`.
procflow::ProcessSet random_process_set(std::mt19937& rng, const SetShape& shape = {});

/// Declarations used by random_condition.
const procflow::ParamDecls& condition_decls();

/// Well-typed condition AST over condition_decls().
procflow::Condition random_condition(std::mt19937& rng, int depth = 4);

/// Script with random parameter values, step intervals and deadline waits.
procflow::ReplayScript random_script(std::mt19937& rng, const procflow::ProcessSet& ps, const std::string& type,
                                     procflow::Timestamp start);

}  // namespace fixtures
