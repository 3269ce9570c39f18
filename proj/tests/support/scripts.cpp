// SPDX-License-Identifier: Apache-2.0
#include "scripts.hpp"

#include <algorithm>

namespace fixtures {

using namespace procflow;

namespace {

using Domains = std::map<std::string, std::vector<Value>>;

void add(std::vector<Value>& dom, Value v) {
  if (std::find(dom.begin(), dom.end(), v) == dom.end()) dom.push_back(std::move(v));
}

void literal_candidates(const Literal& lit, const KindSpec& kind, std::vector<Value>& dom) {
  const auto v = literal_as(lit, kind);
  if (!v) return;
  add(dom, *v);
  if (const auto* i = std::get_if<std::int64_t>(&*v)) {
    add(dom, *i - 1);
    add(dom, *i + 1);
  } else if (const auto* d = std::get_if<double>(&*v)) {
    add(dom, *d - 0.5);
    add(dom, *d + 0.5);
  } else if (const auto* day = std::get_if<Date>(&*v)) {
    add(dom, *day - std::chrono::days(1));
    add(dom, *day + std::chrono::days(1));
  } else if (const auto* m = std::get_if<Money>(&*v)) {
    add(dom, Money{m->cents - 1});
    add(dom, Money{m->cents + 1});
  }
}

void collect(const Expr& e, const ParamDecls& decls, Domains& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ParamRef>) {
          out[n.name];
        } else if constexpr (std::is_same_v<T, ast::Comparison>) {
          const auto side = [&](const Operand& a, const Operand& b) {
            const auto* p = std::get_if<ParamRef>(&a);
            if (!p) return;
            auto& dom = out[p->name];
            const auto decl = decls.find(p->name);
            if (const auto* lit = std::get_if<Literal>(&b); lit && decl != decls.end())
              literal_candidates(*lit, decl->second, dom);
          };
          side(n.lhs, n.rhs);
          side(n.rhs, n.lhs);
        } else if constexpr (std::is_same_v<T, ast::And> || std::is_same_v<T, ast::Or>) {
          collect(*n.lhs, decls, out);
          collect(*n.rhs, decls, out);
        } else if constexpr (std::is_same_v<T, ast::Not>) {
          collect(*n.operand, decls, out);
        }
      },
      e.node);
}

}  // namespace

std::vector<ReplayScript> candidate_scripts(const ProcessSet& ps, const std::string& type, Timestamp start,
                                            std::size_t limit) {
  const auto* proc = ps.process(type);
  if (!proc) throw Error(ErrorKind::unknown_proc_type, type);
  Domains domains;
  for (const auto& seg : proc->segments) {
    for (const auto& b : seg.branches) {
      if (b.when) collect(b.when->expr(), ps.params(), domains);
    }
  }
  for (const auto& id : proc->step_ids()) collect(ps.step(id)->impl_condition.expr(), ps.params(), domains);

  for (auto& [name, dom] : domains) {
    const auto decl = ps.params().find(name);
    if (decl == ps.params().end()) continue;
    const KindSpec& k = decl->second;
    if (k.kind == ValueKind::boolean) {
      add(dom, true);
      add(dom, false);
    } else if (k.kind == ValueKind::enumeration) {
      for (const auto& label : k.enum_values) add(dom, label);
    }
    if (dom.empty()) add(dom, placeholder_value(k, start));
  }

  std::vector<std::string> names;
  for (const auto& [name, dom] : domains) {
    if (!dom.empty()) names.push_back(name);
  }
  std::vector<ReplayScript> out;
  std::vector<std::size_t> idx(names.size(), 0);
  while (out.size() < limit) {
    ReplayScript s;
    s.proc_type = type;
    s.start = start;
    std::map<std::string, Value> chosen;
    for (std::size_t i = 0; i < names.size(); ++i) chosen.emplace(names[i], domains[names[i]][idx[i]]);
    s.params = chosen;
    for (const auto& id : proc->step_ids()) {
      ScriptedEdit edit;
      edit.step = id;
      for (const auto& o : ps.step(id)->outputs) {
        const auto* f = std::get_if<FieldRef>(&o.value);
        if (f && chosen.contains(o.param)) edit.values[f->name] = value_to_json(chosen.at(o.param));
      }
      if (!edit.values.empty()) s.edits.push_back(std::move(edit));
    }
    out.push_back(std::move(s));
    // Odometer step over the cartesian product.
    std::size_t i = 0;
    for (; i < names.size(); ++i) {
      if (++idx[i] < domains[names[i]].size()) break;
      idx[i] = 0;
    }
    if (i == names.size()) break;
  }
  return out;
}

}  // namespace fixtures
