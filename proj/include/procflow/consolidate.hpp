// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "procflow/model.hpp"

namespace procflow {

/// How steps specific to different processes are arranged between two
/// consecutive common steps of a linear model.
enum class Strategy {
  by_process,   // all gap steps of the first process, then the second, ...
  round_robin,  // one step per process per round
};

std::optional<Strategy> parse_strategy(std::string_view text);
std::string_view to_string(Strategy s);

/// Linear consolidated model: a total order of every step of every process,
/// numbered 1..n, bracketed by one initial and one final step.
struct ConsolidatedModel {
  std::vector<StepDef> steps;
  std::vector<std::string> anchor_ids;
  std::shared_ptr<const ProcessSet> source;
  std::string initial_id;
  std::string final_id;
  bool conditions_attached = false;

  const StepDef* step(std::string_view id) const;
  std::vector<std::string> order() const;
};

struct GraphNode {
  enum class Kind { step, split, join };
  std::string id;
  Kind kind = Kind::step;
  bool anchor = false;
  bool artificial = false;
};

/// Standard (graph) form: common steps on the trunk, process-specific steps on
/// branches between OR-splits and OR-joins.
struct GraphCM {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::pair<std::string, std::string>> connectors;  // (split, matching join)
  std::string entry;
  std::string exit;
  std::vector<std::string> anchor_ids;
  std::shared_ptr<const ProcessSet> source;

  const GraphNode* node(std::string_view id) const;
};

ConsolidatedModel build_linear_cm(std::shared_ptr<const ProcessSet> ps,
                                  Strategy strategy = Strategy::by_process);

/// Conjoins each step's authored condition with its procedure-type gate and
/// any branch-selection condition. Idempotent: always derived from the source.
ConsolidatedModel attach_conditions(ConsolidatedModel cm);

/// build_linear_cm followed by attach_conditions.
ConsolidatedModel consolidate(std::shared_ptr<const ProcessSet> ps,
                              Strategy strategy = Strategy::by_process);

/// Builds a model with a caller-supplied order (e.g. loaded from a file).
/// Throws Error(validation) carrying the verifier's report if the order is
/// not a correct linearization.
ConsolidatedModel model_from_order(std::shared_ptr<const ProcessSet> ps,
                                   std::span<const std::string> order);

GraphCM build_graph_cm(std::shared_ptr<const ProcessSet> ps);
ConsolidatedModel linearize_graph(const GraphCM& g, Strategy strategy = Strategy::by_process);

std::string graph_to_dot(const GraphCM& g);
nlohmann::json graph_to_json(const GraphCM& g);

/// Definition format extended with step numbers, effective conditions and a
/// `consolidated` section holding the order.
std::string serialize_cm(const ConsolidatedModel& cm, std::optional<Strategy> strategy = {});

/// Reads the step order from a CM document (`consolidated.order` or a
/// top-level `order` list).
std::vector<std::string> parse_cm_order(std::string_view text);

/// Whether the model needs synthetic initial/final steps for this set.
std::pair<bool, bool> needs_artificial_steps(const ProcessSet& ps);

}  // namespace procflow
