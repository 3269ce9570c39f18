// SPDX-License-Identifier: Apache-2.0
#include "procflow/consolidate.hpp"

#include <algorithm>
#include <functional>
#include <iterator>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "linearize.hpp"
#include "procflow/verify.hpp"

namespace procflow {

namespace detail {

namespace {

struct Ownership {
  std::size_t process = 0;
  std::size_t ordinal = 0;
};

std::map<std::string, Ownership> ownership(const ProcessSet& ps) {
  std::map<std::string, Ownership> out;
  const auto& procs = ps.processes();
  for (std::size_t pi = 0; pi < procs.size(); ++pi) {
    const auto ids = procs[pi].step_ids();
    for (std::size_t k = 0; k < ids.size(); ++k) out.emplace(ids[k], Ownership{pi, k});
  }
  return out;
}

StepDef artificial_step(std::string_view id, const ProcessSet& ps) {
  StepDef s;
  s.id = std::string(id);
  s.title = id == kInitialStepId ? "Start" : "End";
  s.artificial = true;
  s.editable = false;
  for (const auto& t : ps.type_ids()) s.owner_types.insert(t);
  return s;
}

}  // namespace

std::map<std::string, std::set<std::string>> flow_edges(const ProcessSet& ps, bool with_initial,
                                                        bool with_final) {
  std::map<std::string, std::set<std::string>> succ;
  const std::string init(kInitialStepId), fin(kFinalStepId);
  for (const auto& p : ps.processes()) {
    std::vector<std::string> prev_lasts;
    if (with_initial) prev_lasts.push_back(init);
    for (const auto& seg : p.segments) {
      std::vector<std::string> firsts, lasts;
      if (seg.kind == Segment::Kind::single) {
        firsts = lasts = {seg.step};
      } else {
        for (const auto& br : seg.branches) {
          if (br.steps.empty()) continue;
          firsts.push_back(br.steps.front());
          lasts.push_back(br.steps.back());
          for (std::size_t k = 0; k + 1 < br.steps.size(); ++k)
            succ[br.steps[k]].insert(br.steps[k + 1]);
        }
      }
      for (const auto& a : prev_lasts) {
        for (const auto& b : firsts) succ[a].insert(b);
      }
      prev_lasts = std::move(lasts);
    }
    if (with_final) {
      for (const auto& a : prev_lasts) succ[a].insert(fin);
    }
  }
  return succ;
}

ConstraintGraph constraint_graph(const ProcessSet& ps, const std::vector<std::string>& anchors,
                                 bool with_initial, bool with_final) {
  ConstraintGraph g;
  if (with_initial) g.nodes.emplace_back(kInitialStepId);
  for (auto& id : ps.used_step_ids()) g.nodes.push_back(std::move(id));
  if (with_final) g.nodes.emplace_back(kFinalStepId);
  g.succ = flow_edges(ps, with_initial, with_final);
  for (std::size_t i = 0; i + 1 < anchors.size(); ++i) g.succ[anchors[i]].insert(anchors[i + 1]);
  g.anchors.insert(anchors.begin(), anchors.end());
  if (with_initial) g.anchors.emplace(kInitialStepId);
  if (with_final) g.anchors.emplace(kFinalStepId);
  return g;
}

std::vector<std::string> schedule(const ConstraintGraph& g, const ProcessSet& ps,
                                  Strategy strategy) {
  const auto owners = ownership(ps);
  const std::size_t nprocs = ps.processes().size();
  std::map<std::string, int> indegree;
  for (const auto& n : g.nodes) indegree[n] = 0;
  for (const auto& [_, succ] : g.succ) {
    for (const auto& b : succ) ++indegree[b];
  }
  std::set<std::string> ready;
  for (const auto& n : g.nodes) {
    if (indegree[n] == 0) ready.insert(n);
  }
  auto catalog_index = [&](const std::string& id) {
    if (id == kInitialStepId) return std::size_t{0};
    if (id == kFinalStepId) return ps.steps().size() + 1;
    return ps.step_index(id) + 1;
  };

  std::vector<std::string> order;
  std::size_t rotation = 0;
  while (!ready.empty()) {
    std::optional<std::string> pick;
    // Process-specific steps first, chosen by strategy.
    std::vector<std::pair<Ownership, std::string>> specific;
    for (const auto& id : ready) {
      if (!g.anchors.contains(id)) specific.emplace_back(owners.at(id), id);
    }
    if (!specific.empty()) {
      auto by_position = [](const auto& a, const auto& b) {
        return std::pair{a.first.process, a.first.ordinal} < std::pair{b.first.process, b.first.ordinal};
      };
      if (strategy == Strategy::by_process) {
        pick = std::min_element(specific.begin(), specific.end(), by_position)->second;
      } else {
        for (std::size_t k = 0; k < nprocs && !pick; ++k) {
          const std::size_t proc = (rotation + k) % nprocs;
          const std::pair<Ownership, std::string>* best = nullptr;
          for (const auto& cand : specific) {
            if (cand.first.process == proc && (!best || cand.first.ordinal < best->first.ordinal))
              best = &cand;
          }
          if (best) {
            pick = best->second;
            rotation = proc + 1;
          }
        }
      }
    } else {
      // Normally exactly one common step is ready thanks to the anchor chain.
      pick = *std::min_element(ready.begin(), ready.end(), [&](const auto& a, const auto& b) {
        return catalog_index(a) < catalog_index(b);
      });
      rotation = 0;
    }
    ready.erase(*pick);
    order.push_back(*pick);
    if (auto it = g.succ.find(*pick); it != g.succ.end()) {
      for (const auto& b : it->second) {
        if (--indegree[b] == 0) ready.insert(b);
      }
    }
  }
  if (order.size() != g.nodes.size())
    throw Error(ErrorKind::inconsistent_anchor_order, "precedence constraints contain a cycle");
  return order;
}

ConsolidatedModel assemble(std::shared_ptr<const ProcessSet> ps, const std::vector<std::string>& order,
                           std::vector<std::string> anchors) {
  ConsolidatedModel cm;
  cm.anchor_ids = std::move(anchors);
  int number = 1;
  for (const auto& id : order) {
    StepDef s = (id == kInitialStepId || id == kFinalStepId) ? artificial_step(id, *ps) : *ps->step(id);
    s.number = number++;
    cm.steps.push_back(std::move(s));
  }
  if (!order.empty()) {
    cm.initial_id = order.front();
    cm.final_id = order.back();
  }
  cm.source = std::move(ps);
  return cm;
}

}  // namespace detail

namespace {

void check_branch_conditions(const ProcessSet& ps) {
  for (const auto& p : ps.processes()) {
    for (std::size_t si = 0; si < p.segments.size(); ++si) {
      const auto& seg = p.segments[si];
      if (seg.kind != Segment::Kind::alternatives) continue;
      std::vector<std::string> seen;
      for (std::size_t bi = 0; bi < seg.branches.size(); ++bi) {
        const auto& br = seg.branches[bi];
        std::optional<Condition> distinguishing;
        if (br.when && !br.when->is_constant_true()) {
          distinguishing = br.when;
        } else if (!br.steps.empty()) {
          const StepDef* first = ps.step(br.steps.front());
          if (first && !first->impl_condition.is_constant_true()) distinguishing = first->impl_condition;
        }
        const std::string where = "process " + p.type_id + ", segment " + std::to_string(si + 1) +
                                  ", branch " + std::to_string(bi + 1);
        if (!distinguishing)
          throw Error(ErrorKind::missing_branch_condition,
                      where + " has no branch-selection condition");
        const std::string text = print_condition(*distinguishing);
        if (std::find(seen.begin(), seen.end(), text) != seen.end())
          throw Error(ErrorKind::missing_branch_condition,
                      where + " repeats the condition of another branch: " + text);
        seen.push_back(text);
      }
    }
  }
}

// Branch-selection condition of `step` within process `p`, if any.
std::optional<Condition> branch_condition(const ElementaryProcessDef& p, std::string_view step) {
  for (const auto& seg : p.segments) {
    if (seg.kind != Segment::Kind::alternatives) continue;
    for (const auto& br : seg.branches) {
      if (std::find(br.steps.begin(), br.steps.end(), step) != br.steps.end()) {
        if (br.when && !br.when->is_constant_true()) return br.when;
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

Condition effective_condition(const ProcessSet& ps, const StepDef& authored) {
  std::vector<std::pair<std::optional<Condition>, std::vector<std::string>>> groups;
  bool any_branch = false;
  for (const auto& p : ps.processes()) {
    if (!authored.owner_types.contains(p.type_id)) continue;
    auto cond = branch_condition(p, authored.id);
    any_branch = any_branch || cond.has_value();
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == cond; });
    if (it == groups.end()) groups.push_back({cond, {p.type_id}});
    else it->second.push_back(p.type_id);
  }
  std::optional<Condition> gate;
  if (!any_branch) {
    if (authored.owner_types.size() != ps.processes().size())
      gate = Condition::proc_type_in(groups.empty() ? std::vector<std::string>{} : groups.front().second);
  } else {
    for (const auto& [cond, types] : groups) {
      Condition clause = Condition::proc_type_in(types);
      if (cond) clause = clause && *cond;
      gate = gate ? (*gate || clause) : clause;
    }
  }
  if (!gate) return authored.impl_condition;
  if (authored.impl_condition.is_constant_true()) return *gate;
  return *gate && authored.impl_condition;
}

}  // namespace

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "by-process") return Strategy::by_process;
  if (text == "round-robin") return Strategy::round_robin;
  return std::nullopt;
}

std::string_view to_string(Strategy s) {
  return s == Strategy::by_process ? "by-process" : "round-robin";
}

const StepDef* ConsolidatedModel::step(std::string_view id) const {
  for (const auto& s : steps) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::vector<std::string> ConsolidatedModel::order() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.id);
  return out;
}

const GraphNode* GraphCM::node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::pair<bool, bool> needs_artificial_steps(const ProcessSet& ps) {
  const auto& procs = ps.processes();
  if (procs.size() < 2) return {true, true};
  std::set<std::string> firsts, lasts;
  for (const auto& p : procs) {
    for (const auto& path : paths_of(p)) {
      if (path.empty()) continue;
      firsts.insert(path.front());
      lasts.insert(path.back());
    }
  }
  return {firsts.size() != 1, lasts.size() != 1};
}

ConsolidatedModel build_linear_cm(std::shared_ptr<const ProcessSet> ps, Strategy strategy) {
  auto anchors = common_steps(*ps);
  const auto [with_initial, with_final] = needs_artificial_steps(*ps);
  const auto g = detail::constraint_graph(*ps, anchors, with_initial, with_final);
  const auto order = detail::schedule(g, *ps, strategy);
  return detail::assemble(std::move(ps), order, std::move(anchors));
}

ConsolidatedModel attach_conditions(ConsolidatedModel cm) {
  const ProcessSet& ps = *cm.source;
  check_branch_conditions(ps);
  for (auto& s : cm.steps) {
    if (s.artificial) continue;
    s.impl_condition = effective_condition(ps, *ps.step(s.id));
  }
  cm.conditions_attached = true;
  return cm;
}

ConsolidatedModel consolidate(std::shared_ptr<const ProcessSet> ps, Strategy strategy) {
  return attach_conditions(build_linear_cm(std::move(ps), strategy));
}

ConsolidatedModel model_from_order(std::shared_ptr<const ProcessSet> ps,
                                   std::span<const std::string> order) {
  const Verdict verdict = verify_linear_cm(*ps, order);
  if (!verdict.correct) {
    std::vector<Diagnostic> diags;
    for (const auto& v : verdict.violations) diags.push_back({0, 0, v.message});
    throw Error(ErrorKind::validation, std::move(diags));
  }
  const auto [with_initial, with_final] = needs_artificial_steps(*ps);
  std::vector<std::string> full(order.begin(), order.end());
  if (with_initial && (full.empty() || full.front() != kInitialStepId))
    full.insert(full.begin(), std::string(kInitialStepId));
  if (with_final && (full.empty() || full.back() != kFinalStepId)) full.emplace_back(kFinalStepId);
  auto anchors = common_steps(*ps);
  return attach_conditions(detail::assemble(std::move(ps), full, std::move(anchors)));
}

GraphCM build_graph_cm(std::shared_ptr<const ProcessSet> ps) {
  GraphCM g;
  g.anchor_ids = common_steps(*ps);
  const auto [with_initial, with_final] = needs_artificial_steps(*ps);
  const std::set<std::string> anchors(g.anchor_ids.begin(), g.anchor_ids.end());

  std::vector<std::string> step_nodes;
  if (with_initial) step_nodes.emplace_back(kInitialStepId);
  for (auto& id : ps->used_step_ids()) step_nodes.push_back(std::move(id));
  if (with_final) step_nodes.emplace_back(kFinalStepId);

  const auto succ = detail::flow_edges(*ps, with_initial, with_final);
  std::map<std::string, int> indeg, outdeg;
  for (const auto& [a, bs] : succ) {
    outdeg[a] += static_cast<int>(bs.size());
    for (const auto& b : bs) ++indeg[b];
  }
  for (const auto& id : step_nodes) {
    const bool artificial = id == kInitialStepId || id == kFinalStepId;
    g.nodes.push_back({id, GraphNode::Kind::step, anchors.contains(id) || artificial, artificial});
    if (indeg[id] == 0) g.entry = id;
    if (outdeg[id] == 0) g.exit = id;
  }
  auto split_of = [](const std::string& id) { return "split_" + id; };
  auto join_of = [](const std::string& id) { return "join_" + id; };
  for (const auto& id : step_nodes) {
    if (indeg[id] >= 2) {
      g.nodes.push_back({join_of(id), GraphNode::Kind::join, false, false});
      g.edges.emplace_back(join_of(id), id);
    }
    if (outdeg[id] >= 2) {
      g.nodes.push_back({split_of(id), GraphNode::Kind::split, false, false});
      g.edges.emplace_back(id, split_of(id));
    }
  }
  for (const auto& [a, bs] : succ) {
    for (const auto& b : bs) {
      g.edges.emplace_back(outdeg[a] >= 2 ? split_of(a) : a, indeg[b] >= 2 ? join_of(b) : b);
    }
  }

  // Each split is matched with its immediate postdominator, which is a join.
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [a, b] : g.edges) out[a].push_back(b);
  std::map<std::string, std::set<std::string>> pdom;
  std::function<const std::set<std::string>&(const std::string&)> postdominators =
      [&](const std::string& n) -> const std::set<std::string>& {
    if (auto it = pdom.find(n); it != pdom.end()) return it->second;
    std::set<std::string> acc;
    bool first = true;
    for (const auto& s : out[n]) {
      const auto& ps_s = postdominators(s);
      if (first) {
        acc = ps_s;
        first = false;
      } else {
        std::set<std::string> meet;
        std::set_intersection(acc.begin(), acc.end(), ps_s.begin(), ps_s.end(),
                              std::inserter(meet, meet.begin()));
        acc = std::move(meet);
      }
    }
    acc.insert(n);
    return pdom.emplace(n, std::move(acc)).first->second;
  };
  for (const auto& n : g.nodes) {
    if (n.kind != GraphNode::Kind::split) continue;
    const auto& doms = postdominators(n.id);
    std::string best;
    std::size_t best_size = 0;
    for (const auto& d : doms) {
      if (d == n.id) continue;
      const std::size_t sz = postdominators(d).size();
      if (sz > best_size) {
        best = d;
        best_size = sz;
      }
    }
    g.connectors.emplace_back(n.id, best);
  }
  g.source = std::move(ps);
  return g;
}

ConsolidatedModel linearize_graph(const GraphCM& g, Strategy strategy) {
  const ProcessSet& ps = *g.source;
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [a, b] : g.edges) out[a].push_back(b);

  detail::ConstraintGraph cg;
  for (const auto& n : g.nodes) {
    if (n.kind == GraphNode::Kind::step) cg.nodes.push_back(n.id);
    if (n.kind == GraphNode::Kind::step && n.anchor) cg.anchors.insert(n.id);
  }
  // Contract connector nodes into direct step-to-step precedences.
  for (const auto& id : cg.nodes) {
    std::vector<std::string> stack = out[id];
    while (!stack.empty()) {
      std::string n = stack.back();
      stack.pop_back();
      const GraphNode* node = g.node(n);
      if (node && node->kind == GraphNode::Kind::step) {
        cg.succ[id].insert(n);
      } else {
        for (const auto& next : out[n]) stack.push_back(next);
      }
    }
  }
  for (std::size_t i = 0; i + 1 < g.anchor_ids.size(); ++i)
    cg.succ[g.anchor_ids[i]].insert(g.anchor_ids[i + 1]);
  const auto order = detail::schedule(cg, ps, strategy);
  return detail::assemble(g.source, order, g.anchor_ids);
}

std::string graph_to_dot(const GraphCM& g) {
  std::ostringstream os;
  os << "digraph CM {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& n : g.nodes) {
    os << "  \"" << n.id << "\"";
    switch (n.kind) {
      case GraphNode::Kind::split: os << " [shape=diamond, label=\"OR\"]"; break;
      case GraphNode::Kind::join: os << " [shape=diamond, label=\"OR\"]"; break;
      case GraphNode::Kind::step:
        if (n.artificial) os << " [shape=ellipse]";
        else if (n.anchor) os << " [style=filled, fillcolor=grey]";
        break;
    }
    os << ";\n";
  }
  for (const auto& [a, b] : g.edges) os << "  \"" << a << "\" -> \"" << b << "\";\n";
  os << "}\n";
  return os.str();
}

nlohmann::json graph_to_json(const GraphCM& g) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["entry"] = g.entry;
  j["exit"] = g.exit;
  j["anchors"] = g.anchor_ids;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    const char* kind = n.kind == GraphNode::Kind::step ? "step"
                       : n.kind == GraphNode::Kind::split ? "or_split"
                                                          : "or_join";
    nodes.push_back({{"id", n.id}, {"kind", kind}, {"anchor", n.anchor}, {"artificial", n.artificial}});
  }
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  auto& conns = j["connectors"] = nlohmann::json::array();
  for (const auto& [s, t] : g.connectors) conns.push_back({{"split", s}, {"join", t}});
  return j;
}

std::string serialize_cm(const ConsolidatedModel& cm, std::optional<Strategy> strategy) {
  YAML::Node doc = YAML::Load(serialize_process_set(*cm.source));
  for (auto step : doc["steps"]) {
    const StepDef* s = cm.step(step["id"].as<std::string>());
    if (!s) continue;
    step["number"] = s->number;
    YAML::Node owners(YAML::NodeType::Sequence);
    for (const auto& t : s->owner_types) owners.push_back(t);
    owners.SetStyle(YAML::EmitterStyle::Flow);
    step["owner_types"] = owners;
    if (cm.conditions_attached) step["effective_condition"] = print_condition(s->impl_condition);
  }
  YAML::Node c;
  if (strategy) c["strategy"] = std::string(to_string(*strategy));
  c["initial"] = cm.initial_id;
  c["final"] = cm.final_id;
  YAML::Node anchors(YAML::NodeType::Sequence);
  for (const auto& a : cm.anchor_ids) anchors.push_back(a);
  anchors.SetStyle(YAML::EmitterStyle::Flow);
  c["anchors"] = anchors;
  YAML::Node order(YAML::NodeType::Sequence);
  for (const auto& s : cm.steps) order.push_back(s.id);
  order.SetStyle(YAML::EmitterStyle::Flow);
  c["order"] = order;
  doc["consolidated"] = c;
  YAML::Emitter out;
  out << doc;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::string> parse_cm_order(std::string_view text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::syntax,
                std::vector<Diagnostic>{{e.mark.line + 1, e.mark.column + 1, e.msg}});
  }
  YAML::Node order;
  if (doc.IsMap() && doc["consolidated"] && doc["consolidated"]["order"]) order = doc["consolidated"]["order"];
  else if (doc.IsMap() && doc["order"]) order = doc["order"];
  else if (doc.IsSequence()) order = doc;
  if (!order || !order.IsSequence())
    throw Error(ErrorKind::syntax, "CM document has no 'order' list");
  std::vector<std::string> out;
  for (const auto& n : order) {
    if (!n.IsScalar()) throw Error(ErrorKind::syntax, "CM order entries must be step ids");
    out.push_back(n.Scalar());
  }
  return out;
}

}  // namespace procflow
