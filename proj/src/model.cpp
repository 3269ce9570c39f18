// SPDX-License-Identifier: Apache-2.0
#include "procflow/model.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include <yaml-cpp/yaml.h>

namespace procflow {

namespace {

// Maps an entity key ("step:C1", "process:A.segment:2", ...) to a position in
// the source document. Empty when the set was built programmatically.
using Locations = std::map<std::string, Diagnostic, std::less<>>;

class Collector {
 public:
  explicit Collector(const Locations* locs) : locs_(locs) {}

  void error(std::string_view key, std::string message) {
    errors_.push_back(at(key, std::move(message)));
  }
  void warning(std::string_view key, std::string message) {
    warnings_.push_back(at(key, std::move(message)));
  }
  bool ok() const { return errors_.empty(); }
  std::vector<Diagnostic>& errors() { return errors_; }
  std::vector<Diagnostic>& warnings() { return warnings_; }

 private:
  Diagnostic at(std::string_view key, std::string message) const {
    Diagnostic d{0, 0, std::move(message)};
    if (locs_) {
      // Fall back to the nearest enclosing entity that has a location.
      std::string k(key);
      while (!k.empty()) {
        if (auto it = locs_->find(k); it != locs_->end()) {
          d.line = it->second.line;
          d.column = it->second.column;
          break;
        }
        auto dot = k.rfind('.');
        if (dot == std::string::npos) break;
        k.resize(dot);
      }
    }
    return d;
  }

  const Locations* locs_;
  std::vector<Diagnostic> errors_;
  std::vector<Diagnostic> warnings_;
};

bool valid_id(std::string_view id) { return is_identifier(id) && !is_reserved_word(id); }

void check_output(const StepDef& step, const OutputAssign& out, const ParamDecls& params,
                  const std::string& key, Collector& diag) {
  auto pit = params.find(out.param);
  if (pit == params.end()) {
    diag.error(key, "unknown parameter '" + out.param + "' in outputs of step '" + step.id + "'");
    return;
  }
  if (const auto* ref = std::get_if<FieldRef>(&out.value)) {
    const FieldDef* f = step.field(ref->name);
    if (!f) {
      diag.error(key, "output of step '" + step.id + "' references unknown field '" + ref->name + "'");
    } else if (!(f->kind == pit->second)) {
      diag.error(key, "field '" + ref->name + "' of kind " + kind_name(f->kind) +
                          " cannot be assigned to parameter '" + out.param + "' of kind " +
                          kind_name(pit->second));
    }
  } else if (!literal_as(std::get<Literal>(out.value), pit->second)) {
    diag.error(key, "value " + print_value_expr(out.value) + " does not fit parameter '" +
                        out.param + "' of kind " + kind_name(pit->second));
  }
}

void check_condition(const Condition& c, const ParamDecls& params,
                     const std::set<std::string>& types, const std::set<std::string>& step_ids,
                     const std::string& key, const std::string& what, Collector& diag) {
  try {
    typecheck_condition(c, params);
  } catch (const Error& e) {
    diag.error(key, what + ": " + e.what());
  }
  for (const auto& t : referenced_types(c)) {
    if (!types.contains(t)) diag.error(key, what + ": unknown procedure type '" + t + "'");
  }
  for (const auto& a : referenced_anchors(c)) {
    if (a != "start" && !step_ids.contains(a))
      diag.error(key, what + ": elapsed anchor '" + a + "' is neither start nor a step id");
  }
}

// Validates and completes a set in place (owner types, index). Diagnostics are
// positioned through `locs` when available.
void validate(std::vector<std::string>& roles, ParamDecls& params, std::vector<StepDef>& steps,
              std::vector<ElementaryProcessDef>& processes,
              std::map<std::string, std::size_t, std::less<>>& index,
              std::vector<Diagnostic>& warnings, const Locations* locs) {
  Collector diag(locs);

  std::set<std::string> role_set;
  for (const auto& r : roles) {
    if (!valid_id(r)) diag.error("role:" + r, "invalid role id '" + r + "'");
    if (!role_set.insert(r).second) diag.error("role:" + r, "duplicate role '" + r + "'");
  }

  std::set<std::string> labels;
  for (const auto& [name, kind] : params) {
    if (!valid_id(name)) diag.error("param:" + name, "invalid parameter name '" + name + "'");
    for (const auto& v : kind.enum_values) labels.insert(v);
  }
  for (const auto& l : labels) {
    if (params.contains(l))
      diag.error("param:" + l, "enum label '" + l + "' collides with a parameter name");
  }

  index.clear();
  std::set<std::string> step_ids;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const std::string key = "step:" + s.id;
    if (!valid_id(s.id)) diag.error(key, "invalid step id '" + s.id + "'");
    if (s.id == kInitialStepId || s.id == kFinalStepId)
      diag.error(key, "step id '" + s.id + "' is reserved for artificial steps");
    if (!index.emplace(s.id, i).second) diag.error(key, "duplicate step id '" + s.id + "'");
    step_ids.insert(s.id);
  }

  std::set<std::string> type_ids;
  for (const auto& p : processes) {
    const std::string key = "process:" + p.type_id;
    if (!valid_id(p.type_id)) diag.error(key, "invalid procedure type id '" + p.type_id + "'");
    if (!type_ids.insert(p.type_id).second)
      diag.error(key, "duplicate procedure type '" + p.type_id + "'");
  }

  for (auto& s : steps) {
    const std::string key = "step:" + s.id;
    if (s.artificial) diag.error(key, "catalog step '" + s.id + "' cannot be artificial");
    std::set<std::string> names;
    for (const auto& f : s.fields) {
      const std::string fkey = key + ".field:" + f.name;
      if (!is_identifier(f.name)) diag.error(fkey, "invalid field name '" + f.name + "'");
      if (!names.insert(f.name).second)
        diag.error(fkey, "duplicate field '" + f.name + "' in step '" + s.id + "'");
      if (f.kind.kind == ValueKind::enumeration && f.kind.enum_values.empty())
        diag.error(fkey, "enum field '" + f.name + "' has no values");
    }
    for (const auto* set : {&s.edit_roles, &s.view_roles}) {
      for (const auto& r : *set) {
        if (!role_set.contains(r))
          diag.error(key + ".roles", "unknown role '" + r + "' in step '" + s.id + "'");
      }
    }
    check_condition(s.impl_condition, params, type_ids, step_ids, key + ".condition",
                    "condition of step '" + s.id + "'", diag);
    for (const auto& out : s.outputs) check_output(s, out, params, key + ".outputs", diag);
    if (s.completion.mode == CompletionMode::on_deadline && s.completion.duration <= Seconds{0})
      diag.error(key + ".completion", "deadline of step '" + s.id + "' must be strictly positive");
  }

  std::map<std::string, std::set<std::string>> owners;
  for (const auto& p : processes) {
    const std::string key = "process:" + p.type_id;
    std::set<std::string> seen;
    auto use = [&](const std::string& id, const std::string& where) {
      if (!index.contains(id)) {
        diag.error(where, "dangling step reference '" + id + "' in process '" + p.type_id + "'");
      } else {
        owners[id].insert(p.type_id);
      }
      if (!seen.insert(id).second)
        diag.error(where, "step '" + id + "' appears more than once in process '" + p.type_id + "'");
    };
    if (p.segments.empty()) diag.error(key, "process '" + p.type_id + "' has no steps");
    for (std::size_t si = 0; si < p.segments.size(); ++si) {
      const auto& seg = p.segments[si];
      const std::string skey = key + ".segment:" + std::to_string(si);
      if (seg.kind == Segment::Kind::single) {
        use(seg.step, skey);
        continue;
      }
      if (seg.branches.size() < 2)
        diag.error(skey, "alternatives in process '" + p.type_id + "' need at least 2 branches");
      for (const auto& br : seg.branches) {
        if (br.steps.empty()) diag.error(skey, "empty branch in process '" + p.type_id + "'");
        for (const auto& id : br.steps) use(id, skey);
        if (br.when)
          check_condition(*br.when, params, type_ids, step_ids, skey,
                          "branch condition in process '" + p.type_id + "'", diag);
      }
    }
  }

  for (auto& s : steps) {
    std::set<std::string> derived = owners.contains(s.id) ? owners[s.id] : std::set<std::string>{};
    if (!s.owner_types.empty() && s.owner_types != derived)
      diag.error("step:" + s.id, "owner_types of step '" + s.id +
                                     "' do not match the processes referencing it");
    s.owner_types = std::move(derived);
    if (s.owner_types.empty())
      diag.warning("step:" + s.id, "step '" + s.id + "' is not used by any process");
  }

  warnings = std::move(diag.warnings());
  if (!diag.ok()) throw Error(ErrorKind::validation, std::move(diag.errors()));
}

// ---------------------------------------------------------------------------
// YAML reading

Diagnostic mark_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  if (m.is_null()) return {};
  return {m.line + 1, m.column + 1, {}};
}

class DocReader {
 public:
  std::vector<Diagnostic> errors;
  Locations locs;

  void fail(const YAML::Node& n, std::string message) {
    Diagnostic d = mark_of(n);
    d.message = std::move(message);
    errors.push_back(std::move(d));
  }

  void remember(const std::string& key, const YAML::Node& n) {
    if (!locs.contains(key)) locs.emplace(key, mark_of(n));
  }

  void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                  std::string_view what) {
    for (const auto& kv : map) {
      const std::string k = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        fail(kv.first, "unknown key '" + k + "' in " + std::string(what));
    }
  }

  std::optional<std::string> scalar(const YAML::Node& n, std::string_view what) {
    if (!n || !n.IsScalar()) {
      fail(n, "expected " + std::string(what));
      return std::nullopt;
    }
    return n.Scalar();
  }

  bool flag(const YAML::Node& parent, const char* key, bool fallback) {
    const YAML::Node n = parent[key];
    if (!n) return fallback;
    bool value = fallback;
    if (!n.IsScalar() || !YAML::convert<bool>::decode(n, value)) {
      fail(n, std::string("expected boolean for '") + key + "'");
      return fallback;
    }
    return value;
  }

  std::vector<std::string> id_list(const YAML::Node& n, std::string_view what) {
    std::vector<std::string> out;
    if (!n) return out;
    if (!n.IsSequence()) {
      fail(n, "expected a list of " + std::string(what));
      return out;
    }
    for (const auto& item : n) {
      if (auto s = scalar(item, what)) out.push_back(*s);
    }
    return out;
  }

  std::optional<Condition> condition(const YAML::Node& n, const ParamDecls& params,
                                     std::string_view what) {
    auto text = scalar(n, std::string(what) + " text");
    if (!text) return std::nullopt;
    try {
      // Typing is checked by the validator so that all problems are reported.
      return parse_condition_unchecked(*text, params);
    } catch (const Error& e) {
      Diagnostic d = mark_of(n);
      const auto& inner = e.diagnostics();
      d.message = std::string(what) + ": " + (inner.empty() ? e.what() : inner.front().message);
      if (!inner.empty() && inner.front().column > 0)
        d.message += " (at offset " + std::to_string(inner.front().column) + ")";
      errors.push_back(std::move(d));
      return std::nullopt;
    }
  }
};

FieldDef read_field(DocReader& r, const YAML::Node& n, const std::string& step_key) {
  FieldDef f;
  if (!n.IsMap()) {
    r.fail(n, "expected a field mapping");
    return f;
  }
  r.check_keys(n, {"name", "caption", "description", "kind", "mandatory", "visible_in_view",
                   "visible_in_edit"},
               "field");
  if (auto s = r.scalar(n["name"], "field name")) f.name = *s;
  r.remember(step_key + ".field:" + f.name, n);
  if (n["caption"]) f.caption = r.scalar(n["caption"], "caption").value_or("");
  if (n["description"]) f.description = r.scalar(n["description"], "description").value_or("");
  if (auto k = r.scalar(n["kind"], "field kind")) {
    if (auto spec = parse_kind(*k)) f.kind = *spec;
    else r.fail(n["kind"], "unknown value kind '" + *k + "'");
  }
  f.mandatory = r.flag(n, "mandatory", false);
  f.visible_in_view = r.flag(n, "visible_in_view", true);
  f.visible_in_edit = r.flag(n, "visible_in_edit", true);
  return f;
}

StepDef read_step(DocReader& r, const YAML::Node& n, const ParamDecls& params) {
  StepDef s;
  if (!n.IsMap()) {
    r.fail(n, "expected a step mapping");
    return s;
  }
  r.check_keys(n, {"id", "title", "fields", "outputs", "edit_roles", "view_roles", "editable",
                   "visible", "condition", "completion", "number", "owner_types",
                   "effective_condition"},
               "step");
  if (auto id = r.scalar(n["id"], "step id")) s.id = *id;
  const std::string key = "step:" + s.id;
  r.remember(key, n);
  if (n["title"]) s.title = r.scalar(n["title"], "title").value_or("");
  if (const auto fields = n["fields"]) {
    if (!fields.IsSequence()) r.fail(fields, "expected a list of fields");
    else
      for (const auto& f : fields) s.fields.push_back(read_field(r, f, key));
  }
  if (const auto outputs = n["outputs"]) {
    r.remember(key + ".outputs", outputs);
    if (!outputs.IsSequence()) {
      r.fail(outputs, "expected a list of outputs");
    } else {
      for (const auto& o : outputs) {
        if (!o.IsMap()) {
          r.fail(o, "expected an output mapping with 'param' and 'value'");
          continue;
        }
        r.check_keys(o, {"param", "value"}, "output");
        auto param = r.scalar(o["param"], "output parameter");
        auto value = r.scalar(o["value"], "output value");
        if (!param || !value) continue;
        try {
          s.outputs.push_back({*param, parse_value_expr(*value)});
        } catch (const Error& e) {
          r.fail(o["value"], "output value: " + std::string(e.what()));
        }
      }
    }
  }
  r.remember(key + ".roles", n["edit_roles"] ? n["edit_roles"] : n);
  for (auto& id : r.id_list(n["edit_roles"], "role ids")) s.edit_roles.insert(std::move(id));
  for (auto& id : r.id_list(n["view_roles"], "role ids")) s.view_roles.insert(std::move(id));
  s.editable = r.flag(n, "editable", true);
  s.visible = r.flag(n, "visible", true);
  if (const auto c = n["condition"]) {
    r.remember(key + ".condition", c);
    if (auto cond = r.condition(c, params, "condition of step '" + s.id + "'"))
      s.impl_condition = *cond;
  }
  if (const auto c = n["completion"]) {
    r.remember(key + ".completion", c);
    if (!c.IsMap()) {
      r.fail(c, "expected a completion mapping");
    } else {
      r.check_keys(c, {"mode", "duration", "anchor"}, "completion");
      const std::string mode = r.scalar(c["mode"], "completion mode").value_or("");
      if (mode == "on_deadline") {
        s.completion.mode = CompletionMode::on_deadline;
        if (auto d = r.scalar(c["duration"], "ISO-8601 duration")) {
          if (auto dur = parse_duration(*d)) s.completion.duration = *dur;
          else r.fail(c["duration"], "invalid duration '" + *d + "'");
        }
        const std::string anchor = c["anchor"] ? r.scalar(c["anchor"], "anchor").value_or("")
                                               : "previous_step_completion";
        if (anchor == "procedure_start") s.completion.anchor = DeadlineAnchor::procedure_start;
        else if (anchor == "previous_step_completion")
          s.completion.anchor = DeadlineAnchor::previous_step_completion;
        else r.fail(c["anchor"], "unknown deadline anchor '" + anchor + "'");
      } else if (mode != "on_mandatory_fields") {
        r.fail(c["mode"] ? c["mode"] : c, "unknown completion mode '" + mode + "'");
      }
    }
  }
  for (auto& t : r.id_list(n["owner_types"], "procedure type ids")) s.owner_types.insert(std::move(t));
  return s;
}

Branch read_branch(DocReader& r, const YAML::Node& n, const ParamDecls& params) {
  Branch b;
  if (n.IsSequence()) {
    b.steps = r.id_list(n, "step ids");
    return b;
  }
  if (!n.IsMap()) {
    r.fail(n, "expected a branch (list of step ids or mapping with 'steps')");
    return b;
  }
  r.check_keys(n, {"when", "steps"}, "branch");
  b.steps = r.id_list(n["steps"], "step ids");
  if (!n["steps"]) r.fail(n, "branch needs 'steps'");
  if (n["when"]) b.when = r.condition(n["when"], params, "branch condition");
  return b;
}

ElementaryProcessDef read_process(DocReader& r, const YAML::Node& n, const ParamDecls& params) {
  ElementaryProcessDef p;
  if (!n.IsMap()) {
    r.fail(n, "expected a process mapping");
    return p;
  }
  r.check_keys(n, {"type", "name", "segments"}, "process");
  if (auto t = r.scalar(n["type"], "procedure type id")) p.type_id = *t;
  const std::string key = "process:" + p.type_id;
  r.remember(key, n);
  if (n["name"]) p.name = r.scalar(n["name"], "name").value_or("");
  const YAML::Node segs = n["segments"];
  if (!segs || !segs.IsSequence()) {
    r.fail(segs ? segs : n, "process needs a 'segments' list");
    return p;
  }
  std::size_t si = 0;
  for (const auto& seg : segs) {
    r.remember(key + ".segment:" + std::to_string(si++), seg);
    if (seg.IsScalar()) {
      p.segments.push_back(Segment::single_step(seg.Scalar()));
      continue;
    }
    if (seg.IsMap() && seg["alternatives"]) {
      r.check_keys(seg, {"alternatives"}, "segment");
      Segment s;
      s.kind = Segment::Kind::alternatives;
      if (!seg["alternatives"].IsSequence()) {
        r.fail(seg["alternatives"], "expected a list of branches");
      } else {
        for (const auto& br : seg["alternatives"]) s.branches.push_back(read_branch(r, br, params));
      }
      p.segments.push_back(std::move(s));
      continue;
    }
    r.fail(seg, "expected a step id or an 'alternatives' mapping");
  }
  return p;
}

void emit_condition(YAML::Emitter& out, const char* key, const Condition& c) {
  out << YAML::Key << key << YAML::Value << YAML::DoubleQuoted << print_condition(c);
}

}  // namespace

const FieldDef* StepDef::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::vector<std::string> ElementaryProcessDef::step_ids() const {
  std::vector<std::string> out;
  for (const auto& seg : segments) {
    if (seg.kind == Segment::Kind::single) {
      out.push_back(seg.step);
    } else {
      for (const auto& br : seg.branches) out.insert(out.end(), br.steps.begin(), br.steps.end());
    }
  }
  return out;
}

bool ElementaryProcessDef::contains(std::string_view step_id) const {
  const auto ids = step_ids();
  return std::find(ids.begin(), ids.end(), step_id) != ids.end();
}

ProcessSet::ProcessSet(std::vector<std::string> roles, ParamDecls params, std::vector<StepDef> steps,
                       std::vector<ElementaryProcessDef> processes)
    : roles_(std::move(roles)),
      params_(std::move(params)),
      steps_(std::move(steps)),
      processes_(std::move(processes)) {
  validate(roles_, params_, steps_, processes_, index_, warnings_, nullptr);
}

const StepDef* ProcessSet::step(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &steps_[it->second];
}

const ElementaryProcessDef* ProcessSet::process(std::string_view type_id) const {
  for (const auto& p : processes_) {
    if (p.type_id == type_id) return &p;
  }
  return nullptr;
}

std::vector<std::string> ProcessSet::type_ids() const {
  std::vector<std::string> out;
  for (const auto& p : processes_) out.push_back(p.type_id);
  return out;
}

std::size_t ProcessSet::step_index(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? std::string::npos : it->second;
}

std::vector<std::string> ProcessSet::used_step_ids() const {
  std::vector<std::string> out;
  for (const auto& s : steps_) {
    if (!s.owner_types.empty()) out.push_back(s.id);
  }
  return out;
}

ProcessSet parse_process_set(std::string_view text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::syntax,
                std::vector<Diagnostic>{{e.mark.is_null() ? 0 : e.mark.line + 1,
                                         e.mark.is_null() ? 0 : e.mark.column + 1, e.msg}});
  }
  DocReader r;
  if (!doc.IsMap()) {
    throw Error(ErrorKind::syntax,
                std::vector<Diagnostic>{{1, 1, "definition document must be a mapping"}});
  }
  r.check_keys(doc, {"format_version", "roles", "params", "steps", "processes", "consolidated"},
               "definition document");
  const YAML::Node version = doc["format_version"];
  if (!version) r.fail(doc, "missing 'format_version'");
  else if (!version.IsScalar() || version.Scalar() != "1")
    r.fail(version, "unsupported format_version '" + (version.IsScalar() ? version.Scalar() : "") + "'");

  std::vector<std::string> roles = r.id_list(doc["roles"], "role ids");
  for (std::size_t i = 0; doc["roles"] && doc["roles"].IsSequence() && i < doc["roles"].size(); ++i)
    r.remember("role:" + roles.at(std::min(i, roles.size() - 1)), doc["roles"][i]);

  ParamDecls params;
  if (const auto p = doc["params"]) {
    if (!p.IsMap()) {
      r.fail(p, "expected 'params' to map parameter names to kinds");
    } else {
      for (const auto& kv : p) {
        const std::string name = kv.first.as<std::string>();
        r.remember("param:" + name, kv.first);
        auto k = r.scalar(kv.second, "parameter kind");
        if (!k) continue;
        auto spec = parse_kind(*k);
        if (!spec) {
          r.fail(kv.second, "unknown value kind '" + *k + "'");
          continue;
        }
        if (!params.emplace(name, *spec).second) r.fail(kv.first, "duplicate parameter '" + name + "'");
      }
    }
  }

  std::vector<StepDef> steps;
  if (const auto s = doc["steps"]) {
    if (!s.IsSequence()) r.fail(s, "expected 'steps' to be a list");
    else
      for (const auto& item : s) steps.push_back(read_step(r, item, params));
  }
  std::vector<ElementaryProcessDef> processes;
  if (const auto p = doc["processes"]) {
    if (!p.IsSequence()) r.fail(p, "expected 'processes' to be a list");
    else
      for (const auto& item : p) processes.push_back(read_process(r, item, params));
  } else {
    r.fail(doc, "missing 'processes'");
  }
  if (!r.errors.empty()) throw Error(ErrorKind::syntax, std::move(r.errors));

  ProcessSet ps;
  ps.roles_ = std::move(roles);
  ps.params_ = std::move(params);
  ps.steps_ = std::move(steps);
  ps.processes_ = std::move(processes);
  validate(ps.roles_, ps.params_, ps.steps_, ps.processes_, ps.index_, ps.warnings_, &r.locs);
  return ps;
}

std::string serialize_process_set(const ProcessSet& ps) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format_version" << YAML::Value << 1;
  out << YAML::Key << "roles" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& r : ps.roles()) out << r;
  out << YAML::EndSeq;
  if (!ps.params().empty()) {
    out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, kind] : ps.params()) out << YAML::Key << name << YAML::Value << kind_name(kind);
    out << YAML::EndMap;
  }
  out << YAML::Key << "steps" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : ps.steps()) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << s.id;
    out << YAML::Key << "title" << YAML::Value << YAML::DoubleQuoted << s.title;
    if (!s.fields.empty()) {
      out << YAML::Key << "fields" << YAML::Value << YAML::BeginSeq;
      for (const auto& f : s.fields) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << f.name;
        out << YAML::Key << "caption" << YAML::Value << YAML::DoubleQuoted << f.caption;
        if (!f.description.empty())
          out << YAML::Key << "description" << YAML::Value << YAML::DoubleQuoted << f.description;
        out << YAML::Key << "kind" << YAML::Value << kind_name(f.kind);
        if (f.mandatory) out << YAML::Key << "mandatory" << YAML::Value << true;
        if (!f.visible_in_view) out << YAML::Key << "visible_in_view" << YAML::Value << false;
        if (!f.visible_in_edit) out << YAML::Key << "visible_in_edit" << YAML::Value << false;
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    if (!s.outputs.empty()) {
      out << YAML::Key << "outputs" << YAML::Value << YAML::BeginSeq;
      for (const auto& o : s.outputs) {
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "param" << YAML::Value << o.param
            << YAML::Key << "value" << YAML::Value << YAML::SingleQuoted
            << print_value_expr(o.value) << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    out << YAML::Key << "edit_roles" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& r : s.edit_roles) out << r;
    out << YAML::EndSeq;
    out << YAML::Key << "view_roles" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& r : s.view_roles) out << r;
    out << YAML::EndSeq;
    if (!s.editable) out << YAML::Key << "editable" << YAML::Value << false;
    if (!s.visible) out << YAML::Key << "visible" << YAML::Value << false;
    if (!s.impl_condition.is_constant_true()) emit_condition(out, "condition", s.impl_condition);
    if (s.completion.mode == CompletionMode::on_deadline) {
      out << YAML::Key << "completion" << YAML::Value << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "mode" << YAML::Value << "on_deadline";
      out << YAML::Key << "duration" << YAML::Value << format_duration(s.completion.duration);
      out << YAML::Key << "anchor" << YAML::Value
          << (s.completion.anchor == DeadlineAnchor::procedure_start ? "procedure_start"
                                                                     : "previous_step_completion");
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "processes" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : ps.processes()) {
    out << YAML::BeginMap;
    out << YAML::Key << "type" << YAML::Value << p.type_id;
    out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << p.name;
    out << YAML::Key << "segments" << YAML::Value << YAML::BeginSeq;
    for (const auto& seg : p.segments) {
      if (seg.kind == Segment::Kind::single) {
        out << seg.step;
        continue;
      }
      out << YAML::BeginMap << YAML::Key << "alternatives" << YAML::Value << YAML::BeginSeq;
      for (const auto& br : seg.branches) {
        out << YAML::BeginMap;
        if (br.when) emit_condition(out, "when", *br.when);
        out << YAML::Key << "steps" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& id : br.steps) out << id;
        out << YAML::EndSeq << YAML::EndMap;
      }
      out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

struct Position {
  std::size_t segment = 0;
  std::size_t branch = 0;  // 0 for single segments
  std::size_t offset = 0;
  std::size_t ordinal = 0;  // declaration order within the process
};

std::map<std::string, Position> positions(const ElementaryProcessDef& p) {
  std::map<std::string, Position> out;
  std::size_t ordinal = 0;
  for (std::size_t si = 0; si < p.segments.size(); ++si) {
    const auto& seg = p.segments[si];
    if (seg.kind == Segment::Kind::single) {
      out[seg.step] = {si, 0, 0, ordinal++};
      continue;
    }
    for (std::size_t bi = 0; bi < seg.branches.size(); ++bi) {
      for (std::size_t k = 0; k < seg.branches[bi].steps.size(); ++k)
        out[seg.branches[bi].steps[k]] = {si, bi + 1, k, ordinal++};
    }
  }
  return out;
}

// -1: a before b; 1: b before a; 0: incomparable (different branches).
int relative_order(const Position& a, const Position& b) {
  if (a.segment != b.segment) return a.segment < b.segment ? -1 : 1;
  if (a.branch != b.branch) return 0;
  return a.offset < b.offset ? -1 : 1;
}

}  // namespace

std::vector<std::string> common_steps(const ProcessSet& ps) {
  const auto& procs = ps.processes();
  std::vector<std::map<std::string, Position>> pos;
  pos.reserve(procs.size());
  std::map<std::string, std::size_t> count;
  for (const auto& p : procs) {
    pos.push_back(positions(p));
    for (const auto& [id, _] : pos.back()) ++count[id];
  }
  std::vector<std::string> common;
  for (const auto& s : ps.steps()) {
    if (count[s.id] >= 2) common.push_back(s.id);
  }

  // asserted[a][b] = index of the first process ordering a before b
  std::map<std::string, std::map<std::string, std::size_t>> asserted;
  for (std::size_t pi = 0; pi < procs.size(); ++pi) {
    for (const auto& a : common) {
      auto ia = pos[pi].find(a);
      if (ia == pos[pi].end()) continue;
      for (const auto& b : common) {
        if (a == b) continue;
        auto ib = pos[pi].find(b);
        if (ib == pos[pi].end() || relative_order(ia->second, ib->second) != -1) continue;
        if (auto rev = asserted[b].find(a); rev != asserted[b].end()) {
          throw InconsistentAnchorOrder(b, a, procs[rev->second].type_id, procs[pi].type_id);
        }
        asserted[a].emplace(b, pi);
      }
    }
  }

  // Kahn's algorithm; ties go to the step declared first by the earliest process.
  auto priority = [&](const std::string& id) {
    for (std::size_t pi = 0; pi < procs.size(); ++pi) {
      if (auto it = pos[pi].find(id); it != pos[pi].end())
        return std::pair{pi, it->second.ordinal};
    }
    return std::pair{procs.size(), std::size_t{0}};
  };
  std::map<std::string, int> indegree;
  for (const auto& c : common) indegree[c] = 0;
  for (const auto& [a, succ] : asserted) {
    for (const auto& [b, _] : succ) ++indegree[b];
  }
  using Item = std::pair<std::pair<std::size_t, std::size_t>, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (const auto& c : common) {
    if (indegree[c] == 0) ready.push({priority(c), c});
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto [_, id] = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& [b, __] : asserted[id]) {
      if (--indegree[b] == 0) ready.push({priority(b), b});
    }
  }
  if (order.size() != common.size()) {
    // A cycle spread over three or more processes; report one edge on it.
    for (const auto& [a, succ] : asserted) {
      if (indegree[a] == 0) continue;
      for (const auto& [b, pa] : succ) {
        if (indegree[b] == 0) continue;
        for (const auto& [c, pc] : asserted) {
          if (auto it = pc.find(a); it != pc.end() && indegree[c] > 0)
            throw InconsistentAnchorOrder(a, b, procs[pa].type_id, procs[it->second].type_id);
        }
      }
    }
    throw Error(ErrorKind::inconsistent_anchor_order, "common steps are cyclically ordered");
  }
  return order;
}

std::vector<StepPath> paths_of(const ElementaryProcessDef& p) {
  std::vector<StepPath> paths{{}};
  for (const auto& seg : p.segments) {
    if (seg.kind == Segment::Kind::single) {
      for (auto& path : paths) path.push_back(seg.step);
      continue;
    }
    std::vector<StepPath> next;
    next.reserve(paths.size() * seg.branches.size());
    for (const auto& path : paths) {
      for (const auto& br : seg.branches) {
        StepPath extended = path;
        extended.insert(extended.end(), br.steps.begin(), br.steps.end());
        next.push_back(std::move(extended));
      }
    }
    paths = std::move(next);
  }
  return paths;
}

}  // namespace procflow
