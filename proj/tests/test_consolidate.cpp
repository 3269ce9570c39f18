// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "procflow/consolidate.hpp"
#include "procflow/verify.hpp"

using namespace procflow;

using Order = std::vector<std::string>;

namespace {

std::shared_ptr<const ProcessSet> doc(const std::string& text) {
  return std::make_shared<const ProcessSet>(parse_process_set(text));
}

std::shared_ptr<const ProcessSet> chain_pair(std::string_view p1, std::string_view p2) {
  std::string text = "format_version: 1\nroles: [r]\nsteps:\n";
  for (const char* id : {"x", "y", "a", "b", "c"}) text += std::string("  - {id: ") + id + "}\n";
  text += "processes:\n  - {type: P1, segments: " + std::string(p1) + "}\n";
  if (!p2.empty()) text += "  - {type: P2, segments: " + std::string(p2) + "}\n";
  return doc(text);
}

std::string condition_of(const ConsolidatedModel& cm, std::string_view id) {
  return print_condition(cm.step(id)->impl_condition);
}

}  // namespace

TEST_CASE("fixture by-process") {
  const auto cm = build_linear_cm(fixtures::load("fig1.yaml"), Strategy::by_process);
  CHECK(cm.order() == Order{"C1", "A3", "B1", "B2", "C2", "A4", "A5", "B3", "C3"});
  CHECK(cm.anchor_ids == Order{"C1", "C2", "C3"});
  CHECK(cm.initial_id == "C1");
  CHECK(cm.final_id == "C3");
  for (std::size_t i = 0; i < cm.steps.size(); ++i) CHECK(cm.steps[i].number == static_cast<int>(i + 1));
  CHECK(verify_linear_cm(*cm.source, cm).correct);
}

TEST_CASE("fixture round-robin") {
  const auto cm = build_linear_cm(fixtures::load("fig1.yaml"), Strategy::round_robin);
  CHECK(cm.order() == Order{"C1", "A3", "B1", "B2", "C2", "A4", "B3", "A5", "C3"});
  CHECK(verify_linear_cm(*cm.source, cm).correct);
}

TEST_CASE("artificial steps only when needed") {
  const auto single = build_linear_cm(chain_pair("[x, a, y]", ""));
  CHECK(single.order() == Order{"init", "x", "a", "y", "final"});
  CHECK(single.steps.front().artificial);
  CHECK(single.steps.front().number == 1);
  CHECK(single.steps.back().number == 5);

  CHECK(build_linear_cm(chain_pair("[a, x]", "[b, x]")).order() == Order{"init", "a", "b", "x"});
  CHECK(build_linear_cm(chain_pair("[x, a]", "[x, b]")).order() == Order{"x", "a", "b", "final"});
  CHECK(build_linear_cm(chain_pair("[a]", "[b]")).order() == Order{"init", "a", "b", "final"});
}

TEST_CASE("inconsistent anchors propagate") {
  CHECK_THROWS_AS(build_linear_cm(chain_pair("[x, y]", "[y, x]")), InconsistentAnchorOrder);
  CHECK_THROWS_AS(build_graph_cm(chain_pair("[x, y]", "[y, x]")), InconsistentAnchorOrder);
}

TEST_CASE("determinism") {
  const auto ps = fixtures::load("fig1.yaml");
  for (auto s : {Strategy::by_process, Strategy::round_robin})
    CHECK(build_linear_cm(ps, s).order() == build_linear_cm(ps, s).order());
}

TEST_CASE("attached conditions") {
  const auto cm = consolidate(fixtures::load("fig1.yaml"));
  CHECK(cm.conditions_attached);
  CHECK(condition_of(cm, "C1") == "true");
  CHECK(condition_of(cm, "B1") == "proc_type in {B}");
  CHECK(condition_of(cm, "A3") == "proc_type in {A} and site_visit == false");
  CHECK(condition_of(cm, "A4") == "proc_type in {A} and site_visit == true");
  CHECK(condition_of(cm, "C2") == "proc_type in {A} and site_visit == true or proc_type in {B}");
  // Idempotent.
  const auto twice = attach_conditions(cm);
  for (const auto& s : cm.steps) CHECK(twice.step(s.id)->impl_condition == s.impl_condition);
}

TEST_CASE("branches need distinguishing conditions") {
  const auto ps = doc(
      "format_version: 1\nroles: [r]\nsteps:\n  - {id: a}\n  - {id: b}\n  - {id: c}\n"
      "processes:\n  - type: P\n    segments:\n      - a\n      - alternatives: [[b], [c]]\n");
  try {
    consolidate(ps);
    FAIL("expected missing branch condition");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_branch_condition);
  }
}

TEST_CASE("graph form") {
  SUBCASE("single process is a chain") {
    const auto g = build_graph_cm(chain_pair("[x, a, y]", ""));
    CHECK(g.connectors.empty());
    CHECK(g.entry == "init");
    CHECK(g.exit == "final");
    CHECK(g.edges.size() == 4);
    CHECK(linearize_graph(g).order() == Order{"init", "x", "a", "y", "final"});
  }
  SUBCASE("one extra step gives one connector pair") {
    const auto g = build_graph_cm(chain_pair("[x, a, y]", "[x, y]"));
    REQUIRE(g.connectors.size() == 1);
    CHECK(g.connectors[0] == std::pair<std::string, std::string>{"split_x", "join_y"});
  }
  SUBCASE("fixture") {
    const auto ps = fixtures::load("fig1.yaml");
    const auto g = build_graph_cm(ps);
    CHECK(g.entry == "C1");
    CHECK(g.exit == "C3");
    for (const char* id : {"C1", "C2", "C3"}) CHECK(g.node(id)->anchor);
    CHECK_FALSE(g.node("A4")->anchor);
    for (const char* id : {"split_C1", "join_C2", "split_C2", "join_C3"}) CHECK(g.node(id) != nullptr);
    for (const auto& [split, join] : g.connectors) {
      CHECK(g.node(split)->kind == GraphNode::Kind::split);
      CHECK(g.node(join)->kind == GraphNode::Kind::join);
    }
    CHECK(linearize_graph(g, Strategy::by_process).order() == build_linear_cm(ps).order());
    const auto rr = linearize_graph(g, Strategy::round_robin);
    CHECK(rr.order() != build_linear_cm(ps).order());
    CHECK(verify_linear_cm(*ps, rr).correct);
    const std::string dot = graph_to_dot(g);
    CHECK(dot.find("digraph") == 0);
    CHECK(dot.find("\"C1\" [style=filled, fillcolor=grey]") != std::string::npos);
    CHECK(graph_to_json(g)["connectors"].size() == g.connectors.size());
  }
}

TEST_CASE("CM document round-trip") {
  const auto cm = consolidate(fixtures::load("fig1.yaml"), Strategy::round_robin);
  const std::string text = serialize_cm(cm, Strategy::round_robin);
  CHECK(parse_cm_order(text) == cm.order());
  // A CM document is still a valid definition document.
  CHECK(parse_process_set(text) == *cm.source);
  const auto again = model_from_order(cm.source, parse_cm_order(text));
  CHECK(again.order() == cm.order());
  CHECK(parse_cm_order("order: [a, b]") == Order{"a", "b"});
  CHECK_THROWS_AS(parse_cm_order("steps: []"), Error);
}

TEST_CASE("model from an incorrect order is rejected") {
  const auto ps = fixtures::load("fig1.yaml");
  const Order bad{"C1", "B1", "B2", "A3", "C2", "A5", "B3", "A4", "C3"};
  CHECK_THROWS_AS(model_from_order(ps, bad), Error);
}
