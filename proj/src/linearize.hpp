// SPDX-License-Identifier: Apache-2.0
//
// Precedence constraints shared by the builders and the enumerator. A linear
// order is correct exactly when it is a topological order of this graph:
// consecutive steps of every execution path, plus the chain of common steps.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "procflow/consolidate.hpp"

namespace procflow::detail {

struct ConstraintGraph {
  std::vector<std::string> nodes;  // catalog order, artificial steps first/last
  std::map<std::string, std::set<std::string>> succ;
  std::set<std::string> anchors;   // common steps plus artificial steps
};

/// Edges between consecutive steps of every path of every process, plus the
/// synthetic initial/final steps when requested.
std::map<std::string, std::set<std::string>> flow_edges(const ProcessSet& ps, bool with_initial,
                                                        bool with_final);

ConstraintGraph constraint_graph(const ProcessSet& ps, const std::vector<std::string>& anchors,
                                 bool with_initial, bool with_final);

/// Kahn's algorithm with the strategy deciding among ready process-specific
/// steps; common steps are taken only when nothing else is ready.
std::vector<std::string> schedule(const ConstraintGraph& g, const ProcessSet& ps,
                                  Strategy strategy);

/// Numbered model from a complete order (artificial steps included).
ConsolidatedModel assemble(std::shared_ptr<const ProcessSet> ps, const std::vector<std::string>& order,
                           std::vector<std::string> anchors);

}  // namespace procflow::detail
