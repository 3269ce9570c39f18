// SPDX-License-Identifier: Apache-2.0
#include "procflow/verify.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "linearize.hpp"

namespace procflow {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::order: return "order";
    case ViolationKind::missing_step: return "missing_step";
    case ViolationKind::duplicate_step: return "duplicate_step";
    case ViolationKind::anchor_order: return "anchor_order";
    case ViolationKind::boundary: return "boundary";
    case ViolationKind::extra_step: return "extra_step";
  }
  return "unknown";
}

namespace {

bool is_artificial(std::string_view id) { return id == kInitialStepId || id == kFinalStepId; }

Violation make(ViolationKind kind, std::string process, int path, std::string a, std::string b,
               std::string message) {
  return {kind, std::move(process), path, std::move(a), std::move(b), std::move(message)};
}

}  // namespace

Verdict verify_linear_cm(const ProcessSet& ps, std::span<const std::string> order) {
  std::vector<Violation> out;
  std::map<std::string, std::size_t> pos;  // first occurrence
  std::map<std::string, int> count;
  for (std::size_t i = 0; i < order.size(); ++i) {
    pos.emplace(order[i], i);
    ++count[order[i]];
  }

  std::set<std::string> owned;
  for (const auto& p : ps.processes()) {
    for (const auto& id : p.step_ids()) owned.insert(id);
  }

  for (const auto& [id, n] : count) {
    if (n > 1)
      out.push_back(make(ViolationKind::duplicate_step, "", 0, id, "",
                         "step " + id + " appears " + std::to_string(n) + " times"));
    if (!is_artificial(id) && !owned.contains(id))
      out.push_back(make(ViolationKind::extra_step, "", 0, id, "",
                         "step " + id + " belongs to no process"));
  }

  // Artificial steps are optional but, when present, bracket everything.
  if (auto it = pos.find(std::string(kInitialStepId)); it != pos.end() && it->second != 0) {
    for (std::size_t i = 0; i < it->second; ++i)
      out.push_back(make(ViolationKind::boundary, "", 0, order[i], it->first,
                         "step " + order[i] + " precedes the initial step"));
  }
  if (auto it = pos.find(std::string(kFinalStepId)); it != pos.end()) {
    for (std::size_t i = it->second + 1; i < order.size(); ++i) {
      if (order[i] == kFinalStepId) continue;
      out.push_back(make(ViolationKind::boundary, "", 0, order[i], it->first,
                         "step " + order[i] + " follows the final step"));
    }
  }

  const auto anchors = common_steps(ps);
  std::vector<std::string> present;
  for (const auto& a : anchors) {
    if (pos.contains(a)) present.push_back(a);
  }
  for (std::size_t i = 0; i + 1 < present.size(); ++i) {
    const auto& a = present[i];
    const auto& b = present[i + 1];
    if (pos[a] > pos[b])
      out.push_back(make(ViolationKind::anchor_order, "", 0, a, b,
                         "common step " + b + " appears before " + a));
  }

  for (const auto& p : ps.processes()) {
    for (const auto& id : p.step_ids()) {
      if (!pos.contains(id))
        out.push_back(make(ViolationKind::missing_step, p.type_id, 0, id, "",
                           "process " + p.type_id + ": step " + id + " is missing"));
    }
    std::set<std::pair<std::string, std::string>> reported;
    const auto paths = paths_of(p);
    for (std::size_t k = 0; k < paths.size(); ++k) {
      const auto& path = paths[k];
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const auto ia = pos.find(path[i]);
        const auto ib = pos.find(path[i + 1]);
        if (ia == pos.end() || ib == pos.end() || ia->second < ib->second) continue;
        if (!reported.emplace(path[i], path[i + 1]).second) continue;
        out.push_back(make(ViolationKind::order, p.type_id, static_cast<int>(k + 1), path[i],
                           path[i + 1],
                           "process " + p.type_id + ", path " + std::to_string(k + 1) + ": " +
                               path[i + 1] + " appears before " + path[i]));
      }
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Violation& x, const Violation& y) {
    return std::tie(x.process, x.kind, x.step_a, x.step_b) <
           std::tie(y.process, y.kind, y.step_a, y.step_b);
  });
  Verdict v;
  v.correct = out.empty();
  v.violations = std::move(out);
  return v;
}

Verdict verify_linear_cm(const ProcessSet& ps, const ConsolidatedModel& cm) {
  const auto order = cm.order();
  return verify_linear_cm(ps, std::span<const std::string>(order));
}

std::vector<std::vector<std::string>> enumerate_valid_linearizations(const ProcessSet& ps,
                                                                     std::size_t max_steps) {
  const auto steps = ps.used_step_ids();
  if (steps.size() > max_steps)
    throw Error(ErrorKind::too_large, "set has " + std::to_string(steps.size()) +
                                          " steps; enumeration bound is " +
                                          std::to_string(max_steps));
  const auto g = detail::constraint_graph(ps, common_steps(ps), false, false);

  std::map<std::string, int> indegree;
  for (const auto& n : g.nodes) indegree[n] = 0;
  for (const auto& [_, succ] : g.succ) {
    for (const auto& b : succ) ++indegree[b];
  }
  std::vector<std::vector<std::string>> result;
  std::vector<std::string> current;
  std::set<std::string> placed;

  // g.nodes is in catalog order, so scanning it yields lexicographic output.
  auto recurse = [&](auto&& self) -> void {
    if (current.size() == g.nodes.size()) {
      result.push_back(current);
      return;
    }
    for (const auto& n : g.nodes) {
      if (placed.contains(n) || indegree[n] != 0) continue;
      const auto it = g.succ.find(n);
      placed.insert(n);
      current.push_back(n);
      if (it != g.succ.end()) {
        for (const auto& b : it->second) --indegree[b];
      }
      self(self);
      if (it != g.succ.end()) {
        for (const auto& b : it->second) ++indegree[b];
      }
      current.pop_back();
      placed.erase(n);
    }
  };
  recurse(recurse);
  return result;
}

std::string explain(const Verdict& verdict) {
  if (verdict.correct) return "correct";
  std::string out;
  for (const auto& v : verdict.violations) {
    if (!out.empty()) out += '\n';
    out += v.message;
  }
  return out;
}

nlohmann::json verdict_to_json(const Verdict& verdict) {
  nlohmann::json j;
  j["correct"] = verdict.correct;
  auto& arr = j["violations"] = nlohmann::json::array();
  for (const auto& v : verdict.violations) {
    nlohmann::json e{{"kind", to_string(v.kind)}, {"step", v.step_a}, {"message", v.message}};
    if (!v.process.empty()) e["process"] = v.process;
    if (v.path) e["path"] = v.path;
    if (!v.step_b.empty()) e["other_step"] = v.step_b;
    arr.push_back(std::move(e));
  }
  return j;
}

}  // namespace procflow
