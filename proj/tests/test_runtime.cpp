// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "procflow/runtime.hpp"

using namespace procflow;
using namespace std::chrono;

namespace {

const Timestamp t0 = sys_days(2026y / March / 2);

Engine engine_for(const std::string& name, Strategy strategy = Strategy::by_process, RuntimeOptions opts = {}) {
  return Engine(std::make_shared<const ConsolidatedModel>(consolidate(fixtures::load(name), strategy)), opts);
}

ErrorKind error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io;
}

int count_current(const ProcedureInstance& inst) {
  return static_cast<int>(std::count_if(inst.step_states.begin(), inst.step_states.end(),
                                        [](const auto& kv) { return kv.second.status == StepStatus::current; }));
}

const Actor clerk{"ann", "clerk"};
const Actor inspector{"ivo", "inspector"};
const Actor manager{"max", "manager"};

}  // namespace

TEST_CASE("creation") {
  const auto engine = engine_for("fig1.yaml");
  const auto t = engine.create("p1", {"cm", 1}, "A", {}, clerk, t0);
  CHECK(t.instance.version == 1);
  CHECK(t.instance.current_step() == "C1");
  CHECK(t.audit.operation == "create");
  CHECK(t.audit.version_before == 0);
  CHECK(t.audit.version_after == 1);
  CHECK(t.audit.digest.size() == 64);
  CHECK(error_of([&] { engine.create("p2", {}, "Z", {}, clerk, t0); }) == ErrorKind::unknown_proc_type);
  CHECK(error_of([&] { engine.create("p2", {}, "A", {{"site_visit", std::int64_t{1}}}, clerk, t0); }) ==
        ErrorKind::ill_typed_params);
  CHECK(error_of([&] { engine.create("p2", {}, "A", {{"nope", true}}, clerk, t0); }) ==
        ErrorKind::ill_typed_params);
}

TEST_CASE("scan skips steps owned by other types") {
  // Round-robin puts A3 right after C1; for type B the scan must pass it.
  const auto engine = engine_for("fig1.yaml", Strategy::round_robin);
  auto inst = engine.create("p", {}, "B", {}, clerk, t0).instance;
  inst = engine.submit_edit(inst, clerk, "C1", {{"site_visit", false}}, 1, t0 + hours(1)).instance;
  CHECK(inst.current_step() == "B1");
  CHECK_FALSE(inst.step_states.contains("A3"));
}

TEST_CASE("outputs drive later conditions") {
  const auto engine = engine_for("fig1.yaml");
  auto inst = engine.create("p", {}, "A", {}, clerk, t0).instance;
  // Before C1 completes, site_visit is unset: neither branch is eligible.
  CHECK(engine.determine_current_step(inst, t0) == "C1");
  inst = engine.submit_edit(inst, clerk, "C1", {{"site_visit", true}}, 1, t0 + hours(1)).instance;
  CHECK(inst.current_step() == "C2");
  CHECK(std::get<bool>(inst.env.values.at("site_visit")));

  auto other = engine.create("q", {}, "A", {}, clerk, t0).instance;
  other = engine.submit_edit(other, clerk, "C1", {{"site_visit", false}}, 1, t0 + hours(1)).instance;
  CHECK(other.current_step() == "A3");
}

TEST_CASE("edit rejections in order") {
  const auto engine = engine_for("fig1.yaml");
  const auto inst = engine.create("p", {}, "A", {}, clerk, t0).instance;
  const Actor observer{"olga", "observer"};
  CHECK(error_of([&] { engine.submit_edit(inst, observer, "C1", {}, 1, t0); }) == ErrorKind::unauthorized);
  CHECK(error_of([&] { engine.submit_edit(inst, clerk, "C1", {}, 7, t0); }) == ErrorKind::stale_version);
  CHECK(error_of([&] { engine.submit_edit(inst, clerk, "B1", {}, 1, t0); }) == ErrorKind::unknown_step);
  CHECK(error_of([&] { engine.submit_edit(inst, clerk, "init", {}, 1, t0); }) == ErrorKind::unknown_step);
  CHECK(error_of([&] { engine.submit_edit(inst, clerk, "A5", {}, 1, t0); }) == ErrorKind::not_current_step);
  CHECK(error_of([&] { engine.submit_edit(inst, clerk, "C1", {{"site_visit", std::string("yes")}}, 1, t0); }) ==
        ErrorKind::ill_typed_value);
  CHECK(error_of([&] { engine.submit_edit(inst, clerk, "C1", {{"ghost", true}}, 1, t0); }) ==
        ErrorKind::ill_typed_value);
  // Stale beats everything else.
  CHECK(error_of([&] { engine.submit_edit(inst, observer, "C1", {}, 2, t0); }) == ErrorKind::stale_version);
}

TEST_CASE("partial edits keep the step current") {
  const auto engine = engine_for("deadlines.yaml");
  auto inst = engine.create("p", {}, "P", {}, clerk, t0).instance;
  inst = engine.submit_edit(inst, clerk, "s1", {}, 1, t0).instance;
  CHECK(inst.version == 2);
  CHECK(inst.current_step() == "s1");
  inst = engine.submit_edit(inst, clerk, "s1", {{"note", std::string("x")}}, 2, t0).instance;
  CHECK(inst.current_step() == "s2");
}

TEST_CASE("deadlines") {
  const auto engine = engine_for("deadlines.yaml");
  auto inst = engine.create("p", {}, "P", {}, clerk, t0).instance;
  CHECK(inst.step_states.at("s3").deadline == t0 + days(30));
  const Timestamp t1 = t0 + days(1);
  inst = engine.submit_edit(inst, clerk, "s1", {{"note", std::string("x")}}, 1, t1).instance;
  REQUIRE(inst.current_step() == "s2");
  const Timestamp deadline = t1 + days(10);
  CHECK(inst.step_states.at("s2").deadline == deadline);

  CHECK_FALSE(engine.expire_deadlines(inst, clerk, deadline - seconds(1)).has_value());
  const auto at = engine.expire_deadlines(inst, clerk, deadline);  // closed boundary
  REQUIRE(at.has_value());
  CHECK(at->instance.step_states.at("s2").status == StepStatus::skipped);
  CHECK(at->instance.step_states.at("s2").completed_at == deadline);
  CHECK(at->instance.current_step() == "s3");
  CHECK(at->instance.version == inst.version + 1);
  // Idempotent for a fixed clock.
  CHECK_FALSE(engine.expire_deadlines(at->instance, clerk, deadline).has_value());

  // Far in the future both deadlines cascade.
  const auto late = engine.expire_deadlines(inst, clerk, t0 + days(60));
  REQUIRE(late.has_value());
  CHECK(late->instance.step_states.at("s3").status == StepStatus::skipped);
  CHECK_FALSE(late->instance.current_step().has_value());

  // Editing after the deadline finds the step already skipped.
  CHECK(error_of([&] {
          engine.submit_edit(inst, clerk, "s2", {{"objection", std::string("late")}}, inst.version, deadline);
        }) == ErrorKind::not_current_step);
}

TEST_CASE("views") {
  const auto engine = engine_for("deadlines.yaml");
  auto inst = engine.create("p", {}, "P", {}, clerk, t0).instance;
  auto v = engine.render_view(inst, "clerk", t0);
  REQUIRE(v.steps.size() == 3);
  CHECK(v.steps[0].mode == StepMode::edit);
  CHECK(v.steps[1].mode == StepMode::view);
  // s3 hides `secret` in view mode.
  CHECK(v.steps[2].fields.size() == 1);
  CHECK(v.steps[2].fields[0].name == "outcome");
  const auto nobody = engine.render_view(inst, "stranger", t0);
  CHECK(std::all_of(nobody.steps.begin(), nobody.steps.end(),
                    [](const StepView& s) { return s.mode == StepMode::hidden && s.title.empty(); }));

  // The view applies pending expiry without storing it.
  inst = engine.submit_edit(inst, clerk, "s1", {{"note", std::string("x")}}, 1, t0).instance;
  v = engine.render_view(inst, "clerk", t0 + days(11));
  CHECK(v.current_step == "s3");
  CHECK(inst.current_step() == "s2");
  const auto j = view_to_json(v);
  CHECK(j["steps"][1]["status"] == "skipped");
  CHECK(j["steps"][2]["mode"] == "edit");
  CHECK(j["steps"][2]["fields"].size() == 2);
}

TEST_CASE("archiving") {
  const auto engine = engine_for("minimal.yaml");
  auto inst = engine.create("p", {}, "P", {}, clerk, t0).instance;
  CHECK(error_of([&] { engine.archive(inst, clerk, t0); }) == ErrorKind::not_finished);
  const auto forced = engine.archive(inst, Actor{"root", "administrator"}, t0, true);
  CHECK(forced.instance.status == ProcedureStatus::archived);
  CHECK(forced.audit.payload["override"] == true);

  inst = engine.submit_edit(inst, clerk, "s1", {{"note", std::string("done")}}, 1, t0).instance;
  CHECK_FALSE(inst.current_step().has_value());
  const auto done = engine.archive(inst, clerk, t0 + hours(1)).instance;
  CHECK(done.archived_at == t0 + hours(1));
  CHECK(error_of([&] { engine.submit_edit(done, clerk, "s1", {}, done.version, t0); }) == ErrorKind::archived);
  const auto view = engine.render_view(done, "clerk", t0);
  CHECK(std::none_of(view.steps.begin(), view.steps.end(), [](const StepView& s) { return s.mode == StepMode::edit; }));
}

TEST_CASE("amending") {
  const auto strict = engine_for("fig1.yaml");
  const auto lenient = engine_for("fig1.yaml", Strategy::by_process, RuntimeOptions{true});
  auto inst = strict.create("p", {}, "B", {}, clerk, t0).instance;
  inst = strict.submit_edit(inst, clerk, "C1", {{"site_visit", false}}, 1, t0).instance;
  CHECK(error_of([&] { strict.submit_edit(inst, clerk, "C1", {{"site_visit", true}}, 2, t0); }) ==
        ErrorKind::not_current_step);
  const auto amended = lenient.submit_edit(inst, clerk, "C1", {{"site_visit", true}}, 2, t0);
  CHECK(amended.audit.operation == "amend");
  CHECK(std::get<bool>(amended.instance.env.values.at("site_visit")));
  CHECK(amended.instance.step_states.at("C1").status == StepStatus::completed);
}

TEST_CASE("replay") {
  const auto engine = engine_for("fig1.yaml");
  ReplayScript b{"B", t0, {}, {}, true, hours(1)};
  CHECK(replay(engine, b).trace == std::vector<std::string>{"C1", "B1", "B2", "C2", "B3", "C3"});

  ReplayScript a{"A", t0, {}, {}, true, hours(1)};
  CHECK(replay(engine, a).trace == std::vector<std::string>{"C1", "A3", "C3"});
  a.edits.push_back(ScriptedEdit{"C1", "", "u", std::nullopt, {{"site_visit", true}}, false});
  const auto visit = replay(engine, a);
  CHECK(visit.trace == std::vector<std::string>{"C1", "C2", "A4", "A5", "C3"});
  CHECK(visit.finished);

  // Rebuilding from the audit trail reproduces the instance.
  CHECK(engine.rebuild(visit.audit) == visit.instance);

  const auto dl = engine_for("deadlines.yaml");
  ReplayScript skip{"P", t0, {}, {}, true, hours(1)};
  skip.edits.push_back(ScriptedEdit{"s2", "", "u", std::nullopt, {}, true});
  const auto r = replay(dl, skip);
  CHECK(r.trace == std::vector<std::string>{"s1", "s2", "s3"});
  CHECK(r.instance.step_states.at("s2").status == StepStatus::skipped);
  CHECK(dl.rebuild(r.audit) == r.instance);
}

TEST_CASE("artificial-only model replays to nothing") {
  const auto ps = std::make_shared<const ProcessSet>(parse_process_set(
      "format_version: 1\nroles: [r]\nsteps:\n  - {id: s, edit_roles: [r]}\nprocesses:\n  - {type: P, segments: [s]}\n"));
  // A model holding only the artificial steps is obtained by consolidating and
  // dropping everything real.
  auto cm = consolidate(ps);
  cm.steps.erase(std::remove_if(cm.steps.begin(), cm.steps.end(), [](const StepDef& s) { return !s.artificial; }),
                 cm.steps.end());
  const Engine engine(std::make_shared<const ConsolidatedModel>(cm));
  const auto r = replay(engine, ReplayScript{"P", t0, {}, {}, true, hours(1)});
  CHECK(r.trace.empty());
  CHECK(r.finished);
}

TEST_CASE("serialization") {
  const auto engine = engine_for("fig1.yaml");
  ReplayScript a{"A", t0, {}, {}, true, hours(1)};
  const auto r = replay(engine, a);
  CHECK(instance_from_json(instance_to_json(r.instance)) == r.instance);
  for (const auto& rec : r.audit) CHECK(audit_from_json(audit_to_json(rec)) == rec);
  CHECK(count_current(r.instance) == 0);
}

TEST_CASE("script parsing") {
  const auto ps = fixtures::load("fig1.yaml");
  const auto s = parse_replay_script(nlohmann::json::parse(R"({
      "proc_type": "A", "start": "2026-03-02T00:00:00Z", "params": {"site_visit": true},
      "edits": [{"step": "C1", "role": "clerk", "values": {"site_visit": true}}],
      "autofill": false, "step_interval": "PT2H"})"),
                                     *ps);
  CHECK(s.proc_type == "A");
  CHECK(s.start == t0);
  CHECK(std::get<bool>(s.params.at("site_visit")));
  CHECK(s.edits.size() == 1);
  CHECK_FALSE(s.autofill);
  CHECK(s.step_interval == hours(2));
  CHECK(error_of([&] { parse_replay_script(nlohmann::json::parse(R"({"params": {"x": 1}})"), *ps); }) ==
        ErrorKind::ill_typed_params);
}
