// SPDX-License-Identifier: Apache-2.0
#include "procflow/runtime.hpp"

#include <algorithm>
#include <deque>

#include <openssl/evp.h>

namespace procflow {

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::future: return "future";
    case StepStatus::current: return "current";
    case StepStatus::completed: return "completed";
    case StepStatus::skipped: return "skipped";
  }
  return "future";
}

std::string_view to_string(ProcedureStatus s) { return s == ProcedureStatus::current ? "current" : "archived"; }

std::string_view to_string(StepMode m) {
  switch (m) {
    case StepMode::edit: return "edit";
    case StepMode::view: return "view";
    case StepMode::hidden: return "hidden";
  }
  return "hidden";
}

std::optional<StepStatus> parse_step_status(std::string_view text) {
  for (auto s : {StepStatus::future, StepStatus::current, StepStatus::completed, StepStatus::skipped}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<ProcedureStatus> parse_procedure_status(std::string_view text) {
  if (text == "current") return ProcedureStatus::current;
  if (text == "archived") return ProcedureStatus::archived;
  return std::nullopt;
}

std::optional<std::string> ProcedureInstance::current_step() const {
  for (const auto& [id, st] : step_states) {
    if (st.status == StepStatus::current) return id;
  }
  return std::nullopt;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::io, "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

namespace {

bool is_open(const StepState& st) {
  return st.status == StepStatus::future || st.status == StepStatus::current;
}

int next_seq(const ProcedureInstance& inst) {
  int seq = 0;
  for (const auto& [_, st] : inst.step_states) seq = std::max(seq, st.closed_seq);
  return seq + 1;
}

void close_step(ProcedureInstance& inst, const std::string& id, StepStatus status, Timestamp t,
                std::optional<Actor> by) {
  const int seq = next_seq(inst);
  auto& st = inst.step_states.at(id);
  st.status = status;
  st.completed_at = t;
  st.completed_by = std::move(by);
  st.closed_seq = seq;
  inst.env.timeline[id] = t;
}

nlohmann::json encode_values(const std::map<std::string, Value>& values) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values) j[k] = encode_value(v);
  return j;
}

std::map<std::string, Value> decode_values(const nlohmann::json& j) {
  std::map<std::string, Value> out;
  for (const auto& [k, v] : j.items()) out.emplace(k, decode_value(v));
  return out;
}

nlohmann::json opt_time(const std::optional<Timestamp>& t) {
  return t ? nlohmann::json(format_timestamp(*t)) : nlohmann::json(nullptr);
}

std::optional<Timestamp> time_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  auto t = parse_timestamp(j[key].get<std::string>());
  if (!t) throw Error(ErrorKind::syntax, std::string("invalid timestamp in '") + key + "'");
  return t;
}

Timestamp required_time(const nlohmann::json& j, const char* key) {
  auto t = time_from(j, key);
  if (!t) throw Error(ErrorKind::syntax, std::string("missing timestamp '") + key + "'");
  return *t;
}

}  // namespace

Engine::Engine(std::shared_ptr<const ConsolidatedModel> cm, RuntimeOptions options)
    : cm_(std::move(cm)), options_(options) {
  if (!cm_ || !cm_->source) throw Error(ErrorKind::invalid_argument, "engine needs a consolidated model");
  if (!cm_->conditions_attached)
    throw Error(ErrorKind::invalid_argument, "consolidated model has no implementation conditions attached");
}

bool Engine::step_applies(const StepDef& s, const ProcedureInstance& inst) const {
  return s.artificial || s.owner_types.contains(inst.proc_type);
}

std::optional<std::string> Engine::determine_current_step(const ProcedureInstance& inst,
                                                          Timestamp clock) const {
  ParamEnv env = inst.env;
  env.clock = clock;
  for (const auto& s : cm_->steps) {
    const auto it = inst.step_states.find(s.id);
    if (it == inst.step_states.end() || !is_open(it->second)) continue;
    if (eval_condition(s.impl_condition, env)) return s.id;
  }
  return std::nullopt;
}

void Engine::settle(ProcedureInstance& inst, Timestamp t) const {
  for (;;) {
    const auto cur = determine_current_step(inst, t);
    for (auto& [id, st] : inst.step_states) {
      if (st.status == StepStatus::current && (!cur || id != *cur)) st.status = StepStatus::future;
    }
    if (!cur) return;
    const StepDef& s = *cm_->step(*cur);
    if (s.artificial) {
      close_step(inst, *cur, StepStatus::completed, t, Actor{"system", "system"});
      continue;
    }
    auto& st = inst.step_states.at(*cur);
    st.status = StepStatus::current;
    if (!st.activated_at) st.activated_at = t;
    if (!st.deadline && s.completion.mode == CompletionMode::on_deadline &&
        s.completion.anchor == DeadlineAnchor::previous_step_completion)
      st.deadline = *st.activated_at + s.completion.duration;
    return;
  }
}

bool Engine::expire_in_place(ProcedureInstance& inst, Timestamp clock) const {
  bool changed = false;
  for (;;) {
    const auto cur = inst.current_step();
    if (!cur) break;
    const auto& st = inst.step_states.at(*cur);
    if (!st.deadline || *st.deadline > clock) break;
    const Timestamp at = std::max(*st.deadline, st.activated_at.value_or(*st.deadline));
    close_step(inst, *cur, StepStatus::skipped, at, std::nullopt);
    settle(inst, at);
    changed = true;
  }
  if (changed) settle(inst, clock);
  return changed;
}

AuditRecord Engine::audit(const ProcedureInstance& before, const ProcedureInstance& after, const Actor& actor,
                          std::string operation, std::string step, Timestamp clock,
                          nlohmann::json payload) const {
  AuditRecord r;
  r.seq = after.version;
  r.instance_id = after.id;
  r.user = actor.user;
  r.role = actor.role;
  r.operation = std::move(operation);
  r.step = std::move(step);
  r.version_before = before.version;
  r.version_after = after.version;
  r.timestamp = clock;
  r.digest = sha256_hex(payload.dump());
  r.payload = std::move(payload);
  return r;
}

Transition Engine::create(std::string id, CmRef cm_ref, std::string_view proc_type,
                          const std::map<std::string, Value>& params, const Actor& actor,
                          Timestamp clock) const {
  const ProcessSet& ps = *cm_->source;
  if (!ps.process(proc_type))
    throw Error(ErrorKind::unknown_proc_type, "unknown procedure type '" + std::string(proc_type) + "'");
  for (const auto& [name, value] : params) {
    const auto decl = ps.params().find(name);
    if (decl == ps.params().end())
      throw Error(ErrorKind::ill_typed_params, "undeclared parameter '" + name + "'");
    if (!value_matches(value, decl->second))
      throw Error(ErrorKind::ill_typed_params,
                  "parameter '" + name + "' expects " + kind_name(decl->second));
  }
  ProcedureInstance inst;
  inst.id = std::move(id);
  inst.proc_type = std::string(proc_type);
  inst.cm_ref = std::move(cm_ref);
  inst.env.values = params;
  inst.env.proc_type = inst.proc_type;
  inst.env.started_at = clock;
  inst.created_at = clock;
  for (const auto& s : cm_->steps) {
    if (!step_applies(s, inst)) continue;
    StepState st;
    if (s.completion.mode == CompletionMode::on_deadline &&
        s.completion.anchor == DeadlineAnchor::procedure_start)
      st.deadline = clock + s.completion.duration;
    inst.step_states.emplace(s.id, std::move(st));
  }
  const ProcedureInstance before = inst;
  settle(inst, clock);
  inst.version = 1;
  nlohmann::json payload{{"id", inst.id},
                         {"cm", {{"id", inst.cm_ref.id}, {"version", inst.cm_ref.version}}},
                         {"proc_type", inst.proc_type},
                         {"params", encode_values(params)}};
  auto rec = audit(before, inst, actor, "create", "", clock, std::move(payload));
  return {std::move(inst), std::move(rec)};
}

Transition Engine::submit_edit(const ProcedureInstance& inst, const Actor& actor, std::string_view step_id,
                               const std::map<std::string, Value>& values, int expected_version,
                               Timestamp clock) const {
  const std::string id(step_id);
  if (inst.status == ProcedureStatus::archived)
    throw Error(ErrorKind::archived, "procedure " + inst.id + " is archived");
  if (expected_version != inst.version)
    throw Error(ErrorKind::stale_version, "version " + std::to_string(expected_version) +
                                              " is stale; current version is " +
                                              std::to_string(inst.version));
  const StepDef* s = cm_->step(id);
  if (!s || s->artificial || !inst.step_states.contains(id))
    throw Error(ErrorKind::unknown_step, "step '" + id + "' is not part of procedure type " + inst.proc_type);

  ProcedureInstance next = inst;
  expire_in_place(next, clock);
  if (!s->edit_roles.contains(actor.role))
    throw Error(ErrorKind::unauthorized, "role '" + actor.role + "' may not edit step " + id);
  if (!s->editable || !s->visible) throw Error(ErrorKind::not_editable, "step " + id + " is not editable");
  auto& st = next.step_states.at(id);
  bool amend = false;
  if (st.status == StepStatus::completed && options_.allow_amend) {
    amend = true;
  } else if (st.status != StepStatus::current) {
    throw Error(ErrorKind::not_current_step, "step " + id + " is " + std::string(to_string(st.status)) +
                                                 ", not the current step");
  }
  for (const auto& [name, value] : values) {
    const FieldDef* f = s->field(name);
    if (!f) throw Error(ErrorKind::ill_typed_value, "step " + id + " has no field '" + name + "'");
    if (!value_matches(value, f->kind))
      throw Error(ErrorKind::ill_typed_value, "field '" + name + "' expects " + kind_name(f->kind));
  }
  for (const auto& [name, value] : values) st.field_values[name] = value;

  const bool complete = std::all_of(s->fields.begin(), s->fields.end(), [&](const FieldDef& f) {
    return !f.mandatory || st.field_values.contains(f.name);
  });
  if (amend || complete) {
    if (!amend) close_step(next, id, StepStatus::completed, clock, actor);
    // Outputs become visible to later conditions only once the step is done.
    const auto& fv = next.step_states.at(id).field_values;
    for (const auto& o : s->outputs) {
      const KindSpec& kind = cm_->source->params().at(o.param);
      if (const auto* lit = std::get_if<Literal>(&o.value)) {
        if (auto v = literal_as(*lit, kind)) next.env.values[o.param] = *v;
      } else if (auto it = fv.find(std::get<FieldRef>(o.value).name); it != fv.end()) {
        next.env.values[o.param] = it->second;
      }
    }
    settle(next, clock);
  }
  next.version = inst.version + 1;
  nlohmann::json payload{{"values", encode_values(values)}, {"expected_version", expected_version}};
  auto rec = audit(inst, next, actor, amend ? "amend" : "submit_edit", id, clock, std::move(payload));
  return {std::move(next), std::move(rec)};
}

std::optional<Transition> Engine::expire_deadlines(const ProcedureInstance& inst, const Actor& actor,
                                                   Timestamp clock) const {
  if (inst.status == ProcedureStatus::archived) return std::nullopt;
  ProcedureInstance next = inst;
  if (!expire_in_place(next, clock)) return std::nullopt;
  next.version = inst.version + 1;
  auto rec = audit(inst, next, actor, "expire_deadlines", "", clock, nlohmann::json::object());
  return Transition{std::move(next), std::move(rec)};
}

Transition Engine::archive(const ProcedureInstance& inst, const Actor& actor, Timestamp clock,
                           bool override_unfinished) const {
  if (inst.status == ProcedureStatus::archived)
    throw Error(ErrorKind::archived, "procedure " + inst.id + " is already archived");
  ProcedureInstance next = inst;
  expire_in_place(next, clock);
  if (const auto cur = next.current_step(); cur && !override_unfinished)
    throw Error(ErrorKind::not_finished, "procedure " + inst.id + " is still at step " + *cur);
  next.status = ProcedureStatus::archived;
  next.archived_at = clock;
  next.version = inst.version + 1;
  auto rec = audit(inst, next, actor, "archive", "", clock, {{"override", override_unfinished}});
  return {std::move(next), std::move(rec)};
}

ProcedureInstance Engine::rebuild(std::span<const AuditRecord> records) const {
  std::optional<ProcedureInstance> inst;
  for (const auto& r : records) {
    const Actor actor{r.user, r.role};
    if (r.operation == "create") {
      const auto& p = r.payload;
      inst = create(p.at("id").get<std::string>(),
                    CmRef{p.at("cm").at("id").get<std::string>(), p.at("cm").at("version").get<int>()},
                    p.at("proc_type").get<std::string>(), decode_values(p.at("params")), actor, r.timestamp)
                 .instance;
      continue;
    }
    if (!inst) throw Error(ErrorKind::invalid_argument, "audit trail does not start with 'create'");
    if (r.operation == "submit_edit" || r.operation == "amend") {
      inst = submit_edit(*inst, actor, r.step, decode_values(r.payload.at("values")), r.version_before,
                         r.timestamp)
                 .instance;
    } else if (r.operation == "expire_deadlines") {
      auto t = expire_deadlines(*inst, actor, r.timestamp);
      if (!t) throw Error(ErrorKind::invalid_argument, "audit record " + std::to_string(r.seq) + " does not reproduce");
      inst = std::move(t->instance);
    } else if (r.operation == "archive") {
      inst = archive(*inst, actor, r.timestamp, r.payload.value("override", false)).instance;
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown audit operation '" + r.operation + "'");
    }
  }
  if (!inst) throw Error(ErrorKind::invalid_argument, "empty audit trail");
  return *inst;
}

ViewModel Engine::render_view(const ProcedureInstance& inst, std::string_view role, Timestamp clock) const {
  ProcedureInstance now = inst;
  if (now.status == ProcedureStatus::current) {
    expire_in_place(now, clock);
    settle(now, clock);
  }
  ViewModel v;
  v.instance_id = now.id;
  v.proc_type = now.proc_type;
  v.status = now.status;
  v.version = now.version;
  v.role = std::string(role);
  if (now.status == ProcedureStatus::current) v.current_step = now.current_step();
  const std::string r(role);
  for (const auto& s : cm_->steps) {
    if (s.artificial) continue;
    const auto it = now.step_states.find(s.id);
    if (it == now.step_states.end()) continue;
    const StepState& st = it->second;
    StepView sv;
    sv.id = s.id;
    sv.number = s.number;
    const bool may_see = s.visible && (s.view_roles.contains(r) || s.edit_roles.contains(r));
    if (!may_see) {
      v.steps.push_back(std::move(sv));
      continue;
    }
    const bool edit = now.status == ProcedureStatus::current && st.status == StepStatus::current &&
                      s.edit_roles.contains(r) && s.editable;
    sv.mode = edit ? StepMode::edit : StepMode::view;
    sv.title = s.title;
    sv.status = st.status;
    sv.deadline = st.deadline;
    for (const auto& f : s.fields) {
      if (!(edit ? f.visible_in_edit : f.visible_in_view)) continue;
      FieldView fv{f.name, f.caption, f.description, kind_name(f.kind), f.mandatory, std::nullopt};
      if (auto vit = st.field_values.find(f.name); vit != st.field_values.end()) fv.value = vit->second;
      sv.fields.push_back(std::move(fv));
    }
    v.steps.push_back(std::move(sv));
  }
  return v;
}

std::map<std::string, Value> Engine::values_from_json(std::string_view step_id, const nlohmann::json& j) const {
  const StepDef* s = cm_->step(step_id);
  if (!s || s->artificial) throw Error(ErrorKind::unknown_step, "unknown step '" + std::string(step_id) + "'");
  if (!j.is_object()) throw Error(ErrorKind::ill_typed_value, "field values must be an object");
  std::map<std::string, Value> out;
  for (const auto& [name, raw] : j.items()) {
    const FieldDef* f = s->field(name);
    if (!f) throw Error(ErrorKind::ill_typed_value, "step " + s->id + " has no field '" + name + "'");
    auto v = value_from_json(raw, f->kind);
    if (!v) throw Error(ErrorKind::ill_typed_value, "field '" + name + "' expects " + kind_name(f->kind));
    out.emplace(name, std::move(*v));
  }
  return out;
}

Value placeholder_value(const KindSpec& kind, Timestamp clock) {
  switch (kind.kind) {
    case ValueKind::boolean: return false;
    case ValueKind::integer: return std::int64_t{1};
    case ValueKind::decimal: return 1.0;
    case ValueKind::date: return std::chrono::floor<std::chrono::days>(clock);
    case ValueKind::enumeration: return kind.enum_values.empty() ? std::string() : kind.enum_values.front();
    case ValueKind::money: return Money{100};
    case ValueKind::reference: return std::string("ref-1");
    case ValueKind::text: break;
  }
  return std::string("n/a");
}

ReplayResult replay(const Engine& engine, const ReplayScript& script) {
  const Actor system{"script", "system"};
  std::map<std::string, std::deque<const ScriptedEdit*>> pending;
  for (const auto& e : script.edits) pending[e.step].push_back(&e);

  ReplayResult out;
  auto t = engine.create("replay", {}, script.proc_type, script.params, system, script.start);
  out.instance = std::move(t.instance);
  out.audit.push_back(std::move(t.audit));
  Timestamp clock = script.start;
  auto apply = [&](Transition tr) {
    out.instance = std::move(tr.instance);
    out.audit.push_back(std::move(tr.audit));
  };

  const std::size_t guard = 4 * engine.model().steps.size() + script.edits.size() + 4;
  for (std::size_t round = 0; round < guard; ++round) {
    const auto cur = out.instance.current_step();
    if (!cur) {
      out.finished = true;
      break;
    }
    const StepDef& s = *engine.model().step(*cur);
    const StepState& st = out.instance.step_states.at(*cur);
    const ScriptedEdit* edit = nullptr;
    if (auto it = pending.find(*cur); it != pending.end() && !it->second.empty()) {
      edit = it->second.front();
      it->second.pop_front();
    }
    if (!edit && !script.autofill) break;

    clock = edit && edit->at ? std::max(clock, *edit->at) : clock + script.step_interval;
    if (edit && edit->skip) {
      if (!st.deadline) throw Error(ErrorKind::invalid_argument, "step " + *cur + " has no deadline to wait for");
      clock = std::max(clock, *st.deadline);
    }
    if (st.deadline && *st.deadline <= clock) {
      if (auto tr = engine.expire_deadlines(out.instance, system, clock)) apply(std::move(*tr));
      continue;
    }

    std::map<std::string, Value> values;
    if (edit) values = engine.values_from_json(*cur, nlohmann::json(edit->values));
    if (script.autofill) {
      for (const auto& f : s.fields) values.emplace(f.name, placeholder_value(f.kind, clock));
    }
    Actor actor{edit ? edit->user : "script", edit ? edit->role : ""};
    if (actor.role.empty() && !s.edit_roles.empty()) actor.role = *s.edit_roles.begin();
    apply(engine.submit_edit(out.instance, actor, *cur, values, out.instance.version, clock));
  }

  std::vector<std::pair<int, std::string>> closed;
  for (const auto& [id, st] : out.instance.step_states) {
    if (st.closed_seq > 0 && !engine.model().step(id)->artificial) closed.emplace_back(st.closed_seq, id);
  }
  std::sort(closed.begin(), closed.end());
  for (auto& [_, id] : closed) out.trace.push_back(std::move(id));
  return out;
}

ReplayScript parse_replay_script(const nlohmann::json& j, const ProcessSet& ps) {
  if (!j.is_object()) throw Error(ErrorKind::syntax, "replay script must be a JSON object");
  ReplayScript s;
  s.proc_type = j.value("proc_type", "");
  if (auto t = time_from(j, "start")) s.start = *t;
  if (j.contains("params")) {
    for (const auto& [name, raw] : j["params"].items()) {
      const auto decl = ps.params().find(name);
      if (decl == ps.params().end())
        throw Error(ErrorKind::ill_typed_params, "undeclared parameter '" + name + "'");
      auto v = value_from_json(raw, decl->second);
      if (!v) throw Error(ErrorKind::ill_typed_params, "parameter '" + name + "' expects " + kind_name(decl->second));
      s.params.emplace(name, std::move(*v));
    }
  }
  for (const auto& e : j.value("edits", nlohmann::json::array())) {
    ScriptedEdit edit;
    edit.step = e.at("step").get<std::string>();
    edit.role = e.value("role", "");
    edit.user = e.value("user", "script");
    edit.at = time_from(e, "at");
    edit.skip = e.value("skip", false);
    if (e.contains("values")) {
      for (const auto& [k, v] : e["values"].items()) edit.values.emplace(k, v);
    }
    s.edits.push_back(std::move(edit));
  }
  s.autofill = j.value("autofill", true);
  if (j.contains("step_interval")) {
    auto d = parse_duration(j["step_interval"].get<std::string>());
    if (!d) throw Error(ErrorKind::syntax, "invalid step_interval");
    s.step_interval = *d;
  }
  return s;
}

nlohmann::json instance_to_json(const ProcedureInstance& inst) {
  nlohmann::json steps = nlohmann::json::object();
  for (const auto& [id, st] : inst.step_states) {
    nlohmann::json s{{"status", to_string(st.status)}, {"values", encode_values(st.field_values)}};
    if (st.completed_at) s["completed_at"] = format_timestamp(*st.completed_at);
    if (st.completed_by) s["completed_by"] = {{"user", st.completed_by->user}, {"role", st.completed_by->role}};
    if (st.deadline) s["deadline"] = format_timestamp(*st.deadline);
    if (st.activated_at) s["activated_at"] = format_timestamp(*st.activated_at);
    if (st.closed_seq) s["closed_seq"] = st.closed_seq;
    steps[id] = std::move(s);
  }
  nlohmann::json timeline = nlohmann::json::object();
  for (const auto& [id, t] : inst.env.timeline) timeline[id] = format_timestamp(t);
  return {{"format_version", 1},
          {"id", inst.id},
          {"proc_type", inst.proc_type},
          {"cm", {{"id", inst.cm_ref.id}, {"version", inst.cm_ref.version}}},
          {"status", to_string(inst.status)},
          {"created_at", format_timestamp(inst.created_at)},
          {"archived_at", opt_time(inst.archived_at)},
          {"version", inst.version},
          {"params", encode_values(inst.env.values)},
          {"timeline", std::move(timeline)},
          {"steps", std::move(steps)}};
}

ProcedureInstance instance_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format_version", 0) != 1) throw Error(ErrorKind::syntax, "unsupported instance format_version");
    ProcedureInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.proc_type = j.at("proc_type").get<std::string>();
    inst.cm_ref = {j.at("cm").at("id").get<std::string>(), j.at("cm").at("version").get<int>()};
    const auto status = parse_procedure_status(j.at("status").get<std::string>());
    if (!status) throw Error(ErrorKind::syntax, "invalid procedure status");
    inst.status = *status;
    inst.created_at = required_time(j, "created_at");
    inst.archived_at = time_from(j, "archived_at");
    inst.version = j.at("version").get<int>();
    inst.env.values = decode_values(j.at("params"));
    inst.env.proc_type = inst.proc_type;
    inst.env.started_at = inst.created_at;
    for (const auto& [id, t] : j.at("timeline").items()) {
      auto ts = parse_timestamp(t.get<std::string>());
      if (!ts) throw Error(ErrorKind::syntax, "invalid timeline entry for " + id);
      inst.env.timeline[id] = *ts;
    }
    for (const auto& [id, s] : j.at("steps").items()) {
      StepState st;
      const auto ss = parse_step_status(s.at("status").get<std::string>());
      if (!ss) throw Error(ErrorKind::syntax, "invalid step status for " + id);
      st.status = *ss;
      st.field_values = decode_values(s.at("values"));
      st.completed_at = time_from(s, "completed_at");
      if (s.contains("completed_by"))
        st.completed_by = Actor{s["completed_by"].at("user").get<std::string>(),
                                s["completed_by"].at("role").get<std::string>()};
      st.deadline = time_from(s, "deadline");
      st.activated_at = time_from(s, "activated_at");
      st.closed_seq = s.value("closed_seq", 0);
      inst.step_states.emplace(id, std::move(st));
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::syntax, std::string("malformed instance document: ") + e.what());
  }
}

nlohmann::json audit_to_json(const AuditRecord& r) {
  return {{"seq", r.seq},
          {"instance", r.instance_id},
          {"user", r.user},
          {"role", r.role},
          {"operation", r.operation},
          {"step", r.step},
          {"version_before", r.version_before},
          {"version_after", r.version_after},
          {"timestamp", format_timestamp(r.timestamp)},
          {"payload", r.payload},
          {"digest", r.digest}};
}

AuditRecord audit_from_json(const nlohmann::json& j) {
  try {
    AuditRecord r;
    r.seq = j.at("seq").get<std::int64_t>();
    r.instance_id = j.at("instance").get<std::string>();
    r.user = j.at("user").get<std::string>();
    r.role = j.at("role").get<std::string>();
    r.operation = j.at("operation").get<std::string>();
    r.step = j.at("step").get<std::string>();
    r.version_before = j.at("version_before").get<int>();
    r.version_after = j.at("version_after").get<int>();
    r.timestamp = required_time(j, "timestamp");
    r.payload = j.at("payload");
    r.digest = j.at("digest").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::syntax, std::string("malformed audit record: ") + e.what());
  }
}

nlohmann::json view_to_json(const ViewModel& v) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : v.steps) {
    nlohmann::json js{{"id", s.id}, {"number", s.number}, {"mode", to_string(s.mode)}};
    if (s.mode != StepMode::hidden) {
      js["title"] = s.title;
      if (s.status) js["status"] = to_string(*s.status);
      if (s.deadline) js["deadline"] = format_timestamp(*s.deadline);
      auto& fields = js["fields"] = nlohmann::json::array();
      for (const auto& f : s.fields) {
        fields.push_back({{"name", f.name},
                          {"caption", f.caption},
                          {"description", f.description},
                          {"kind", f.kind},
                          {"mandatory", f.mandatory},
                          {"value", f.value ? value_to_json(*f.value) : nlohmann::json(nullptr)}});
      }
    }
    steps.push_back(std::move(js));
  }
  return {{"instance", v.instance_id},
          {"proc_type", v.proc_type},
          {"status", to_string(v.status)},
          {"version", v.version},
          {"role", v.role},
          {"current_step", v.current_step ? nlohmann::json(*v.current_step) : nlohmann::json(nullptr)},
          {"steps", std::move(steps)}};
}

}  // namespace procflow
