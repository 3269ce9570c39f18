// SPDX-License-Identifier: Apache-2.0
#include "generators.hpp"

#include <algorithm>
#include <cstdio>

namespace fixtures {

using namespace procflow;

namespace {

int pick(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool coin(std::mt19937& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::string step_name(int i) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "s%02d", i);
  return buf;
}

Condition flag_is(int process, bool value) {
  return Condition::compare(CompareOp::eq, ParamRef{"f" + std::to_string(process)},
                            Literal{LiteralKind::boolean, value});
}

}  // namespace

ProcessSet random_process_set(std::mt19937& rng, const SetShape& shape) {
  const int pool = pick(rng, 2, shape.max_total_steps);
  const int nproc = pick(rng, 1, shape.max_processes);
  std::vector<ElementaryProcessDef> processes;
  std::set<int> used;
  for (int p = 1; p <= nproc; ++p) {
    std::vector<int> all(pool);
    for (int i = 0; i < pool; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    const int k = pick(rng, 1, std::min(pool, shape.max_steps_per_process));
    std::vector<int> chosen(all.begin(), all.begin() + k);
    std::sort(chosen.begin(), chosen.end());
    used.insert(chosen.begin(), chosen.end());

    ElementaryProcessDef def;
    def.type_id = "T" + std::to_string(p);
    std::size_t i = 0;
    const bool branch = k >= 2 && coin(rng, shape.alternatives);
    const std::size_t from = branch ? pick(rng, 0, k - 2) : k;
    const std::size_t to = branch ? pick(rng, from + 2, k) : k;
    for (; i < chosen.size(); ++i) {
      if (i == from) {
        // Split chosen[from, to) into two non-empty order-preserving groups.
        Segment seg;
        seg.kind = Segment::Kind::alternatives;
        Branch yes{{}, flag_is(p, true)}, no{{}, flag_is(p, false)};
        for (std::size_t j = from; j < to; ++j) (coin(rng, 0.5) ? yes : no).steps.push_back(step_name(chosen[j]));
        auto& empty = yes.steps.empty() ? yes : no;
        auto& full = yes.steps.empty() ? no : yes;
        if (empty.steps.empty()) {
          empty.steps.push_back(full.steps.back());
          full.steps.pop_back();
        }
        seg.branches = {yes, no};
        def.segments.push_back(std::move(seg));
        i = to - 1;
      } else {
        def.segments.push_back(Segment::single_step(step_name(chosen[i])));
      }
    }
    processes.push_back(std::move(def));
  }

  std::vector<StepDef> steps;
  for (int i : used) {
    StepDef s;
    s.id = step_name(i);
    s.title = "Step " + s.id;
    s.edit_roles = {coin(rng, 0.5) ? "r1" : "r2"};
    s.view_roles = {"r1", "r2", "obs"};
    FieldDef f;
    f.name = "v";
    f.caption = "Value";
    f.kind = KindSpec{ValueKind::text, {}};
    f.mandatory = true;
    s.fields.push_back(f);
    if (coin(rng, shape.deadlines)) {
      s.completion.mode = CompletionMode::on_deadline;
      s.completion.duration = Seconds(3600 * pick(rng, 1, 72));
      s.completion.anchor = coin(rng, 0.8) ? DeadlineAnchor::previous_step_completion : DeadlineAnchor::procedure_start;
    }
    steps.push_back(std::move(s));
  }
  std::shuffle(steps.begin(), steps.end(), rng);

  ParamDecls params;
  for (int p = 1; p <= nproc; ++p) params["f" + std::to_string(p)] = KindSpec{ValueKind::boolean, {}};
  return ProcessSet({"r1", "r2", "obs"}, params, std::move(steps), std::move(processes));
}

const ParamDecls& condition_decls() {
  static const ParamDecls decls{
      {"a", {ValueKind::boolean, {}}},      {"b", {ValueKind::boolean, {}}},
      {"n", {ValueKind::integer, {}}},      {"m", {ValueKind::integer, {}}},
      {"ratio", {ValueKind::decimal, {}}},  {"due", {ValueKind::date, {}}},
      {"name", {ValueKind::text, {}}},      {"color", {ValueKind::enumeration, {"red", "green", "blue"}}},
  };
  return decls;
}

Condition random_condition(std::mt19937& rng, int depth) {
  const int choice = depth <= 0 ? pick(rng, 0, 5) : pick(rng, 0, 8);
  static const CompareOp all_ops[] = {CompareOp::eq, CompareOp::ne, CompareOp::lt,
                                      CompareOp::le, CompareOp::gt, CompareOp::ge};
  const auto any_op = [&] { return all_ops[pick(rng, 0, 5)]; };
  const auto eq_op = [&] { return coin(rng, 0.5) ? CompareOp::eq : CompareOp::ne; };
  const auto oriented = [&](CompareOp op, Operand param, Operand lit) {
    return coin(rng, 0.8) ? Condition::compare(op, std::move(param), std::move(lit))
                          : Condition::compare(op, std::move(lit), std::move(param));
  };
  switch (choice) {
    case 0:
      return Condition::constant(coin(rng, 0.5));
    case 1:
      return Condition::param(coin(rng, 0.5) ? "a" : "b");
    case 2: {
      std::vector<std::string> types;
      for (const char* t : {"PEA", "IA", "T3"}) {
        if (coin(rng, 0.5)) types.push_back(t);
      }
      if (types.empty()) types.push_back("IA");
      return Condition::proc_type_in(types);
    }
    case 3: {
      switch (pick(rng, 0, 6)) {
        case 0: return oriented(eq_op(), ParamRef{"a"}, Literal{LiteralKind::boolean, coin(rng, 0.5)});
        case 1:
          return oriented(any_op(), ParamRef{"n"}, Literal{LiteralKind::integer, std::int64_t{pick(rng, 0, 5000)}});
        case 2: return Condition::compare(any_op(), ParamRef{"n"}, ParamRef{"m"});
        case 3:
          return oriented(any_op(), ParamRef{"ratio"}, Literal{LiteralKind::decimal, pick(rng, 0, 4000) / 16.0});
        case 4: {
          const Date d = std::chrono::sys_days(std::chrono::year(2026) / 1 / 1) + std::chrono::days(pick(rng, -800, 800));
          return oriented(any_op(), ParamRef{"due"}, Literal{LiteralKind::date, d});
        }
        case 5: {
          static const char* words[] = {"x", "hello world", "a \"quoted\" word", "back\\slash", ""};
          return oriented(eq_op(), ParamRef{"name"}, Literal{LiteralKind::string, std::string(words[pick(rng, 0, 4)])});
        }
        default: {
          static const char* labels[] = {"red", "green", "blue"};
          return oriented(eq_op(), ParamRef{"color"},
                          Literal{LiteralKind::enum_label, std::string(labels[pick(rng, 0, 2)])});
        }
      }
    }
    case 4:
      return Condition::elapsed(Seconds(86400 * pick(rng, 1, 40)), coin(rng, 0.5) ? "start" : "C2");
    case 5:
      return Condition::compare(CompareOp::ge, ParamRef{"n"}, Literal{LiteralKind::integer, std::int64_t{0}});
    case 6:
      return random_condition(rng, depth - 1) && random_condition(rng, depth - 1);
    case 7:
      return random_condition(rng, depth - 1) || random_condition(rng, depth - 1);
    default:
      return !random_condition(rng, depth - 1);
  }
}

ReplayScript random_script(std::mt19937& rng, const ProcessSet& ps, const std::string& type, Timestamp start) {
  ReplayScript s;
  s.proc_type = type;
  s.start = start;
  for (const auto& [name, kind] : ps.params()) {
    if (kind.kind == ValueKind::boolean) s.params[name] = coin(rng, 0.5);
  }
  s.step_interval = Seconds(60 * pick(rng, 1, 60 * 24));
  for (const auto& id : ps.process(type)->step_ids()) {
    const StepDef& st = *ps.step(id);
    if (st.completion.mode == CompletionMode::on_deadline && coin(rng, 0.4)) {
      ScriptedEdit e;
      e.step = id;
      e.skip = true;
      s.edits.push_back(std::move(e));
    }
  }
  return s;
}

}  // namespace fixtures
