// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "procflow/error.hpp"
#include "procflow/model.hpp"

using namespace procflow;

namespace {

ErrorKind error_of(std::string_view text, std::string* message = nullptr) {
  try {
    parse_process_set(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  return ErrorKind::io;
}

std::string two_process_doc(std::string_view p1, std::string_view p2) {
  std::string doc = "format_version: 1\nroles: [r]\nsteps:\n";
  for (const char* id : {"x", "y", "a", "b"}) doc += std::string("  - {id: ") + id + "}\n";
  doc += "processes:\n  - {type: P1, segments: " + std::string(p1) + "}\n";
  doc += "  - {type: P2, segments: " + std::string(p2) + "}\n";
  return doc;
}

}  // namespace

TEST_CASE("minimal document") {
  const auto ps = fixtures::load("minimal.yaml");
  CHECK(ps->processes().size() == 1);
  CHECK(ps->steps().size() == 1);
  CHECK(ps->step("s1")->owner_types == std::set<std::string>{"P"});
}

TEST_CASE("fixture shape") {
  const auto ps = fixtures::load("fig1.yaml");
  CHECK(ps->processes().size() == 2);
  // C1 C2 C3, A3 A4 A5, B1 B2 B3.
  CHECK(ps->steps().size() == 9);
  CHECK(common_steps(*ps) == std::vector<std::string>{"C1", "C2", "C3"});
  CHECK(paths_of(*ps->process("A")) ==
        std::vector<StepPath>{{"C1", "C2", "A4", "A5", "C3"}, {"C1", "A3", "C3"}});
  CHECK(paths_of(*ps->process("B")) == std::vector<StepPath>{{"C1", "B1", "B2", "C2", "B3", "C3"}});
  CHECK(ps->step("C2")->owner_types == std::set<std::string>{"A", "B"});
  CHECK(ps->step("A3")->owner_types == std::set<std::string>{"A"});
}

TEST_CASE("diagnostics") {
  std::string msg;
  CHECK(error_of("format_version: 1\nroles: [r]\nsteps: []\nprocesses:\n  - {type: P, segments: [x9]}\n",
                 &msg) == ErrorKind::validation);
  CHECK(msg.find("x9") != std::string::npos);
  CHECK(error_of("format_version: 1\nroles: [r]\nsteps:\n  - {id: s}\n  - {id: s}\nprocesses:\n"
                 "  - {type: P, segments: [s]}\n") == ErrorKind::validation);
  CHECK(error_of("format_version: 1\nroles: [r]\nsteps:\n  - {id: s, edit_roles: [boss]}\n"
                 "processes:\n  - {type: P, segments: [s]}\n",
                 &msg) == ErrorKind::validation);
  CHECK(msg.find("boss") != std::string::npos);
  CHECK(error_of("format_version: 1\nroles: [r]\nsteps:\n  - {id: s, condition: \"nope == true\"}\n"
                 "processes:\n  - {type: P, segments: [s]}\n",
                 &msg) == ErrorKind::validation);
  CHECK(msg.find("nope") != std::string::npos);
  CHECK(error_of("format_version: 1\nroles: [r\n") == ErrorKind::syntax);
  CHECK(error_of("format_version: 2\nroles: []\nsteps: []\nprocesses: []\n") != ErrorKind::io);
  CHECK(error_of("format_version: 1\nroles: [r]\nsteps:\n  - {id: init}\nprocesses:\n"
                 "  - {type: P, segments: [init]}\n") == ErrorKind::validation);
}

TEST_CASE("diagnostics carry positions and are collected") {
  try {
    parse_process_set(
        "format_version: 1\nroles: [r]\nsteps:\n  - {id: s}\nprocesses:\n"
        "  - {type: P, segments: [s, q1]}\n  - {type: Q, segments: [q2]}\n");
    FAIL("expected validation error");
  } catch (const Error& e) {
    REQUIRE(e.diagnostics().size() >= 2);
    CHECK(e.diagnostics()[0].line == 6);
    CHECK(e.diagnostics()[1].line == 7);
  }
}

TEST_CASE("common steps") {
  auto set = [](std::string_view p1, std::string_view p2) { return parse_process_set(two_process_doc(p1, p2)); };
  CHECK(common_steps(set("[x, a]", "[y, b]")).empty());
  CHECK(common_steps(set("[x, a, y]", "[x, b, y]")) == std::vector<std::string>{"x", "y"});
  try {
    common_steps(set("[x, y]", "[y, x]"));
    FAIL("expected inconsistent anchor order");
  } catch (const InconsistentAnchorOrder& e) {
    CHECK(e.process_p() == "P1");
    CHECK(e.process_q() == "P2");
    CHECK(std::set<std::string>{e.step_a(), e.step_b()} == std::set<std::string>{"x", "y"});
  }
}

TEST_CASE("paths of alternatives") {
  const auto ps = parse_process_set(
      "format_version: 1\nroles: [r]\nparams: {k: integer}\nsteps:\n"
      "  - {id: a}\n  - {id: b}\n  - {id: c}\n  - {id: d}\n  - {id: e}\n"
      "processes:\n  - type: P\n    segments:\n"
      "      - alternatives:\n          - {when: \"k == 1\", steps: [a]}\n          - {when: \"k == 2\", steps: [b]}\n"
      "      - e\n"
      "      - alternatives:\n          - {when: \"k > 0\", steps: [c]}\n          - {when: \"k <= 0\", steps: [d]}\n");
  CHECK(paths_of(ps.processes()[0]) ==
        std::vector<StepPath>{{"a", "e", "c"}, {"a", "e", "d"}, {"b", "e", "c"}, {"b", "e", "d"}});
}

TEST_CASE("serialization round-trip") {
  for (const char* name : {"fig1.yaml", "minimal.yaml"}) {
    CAPTURE(name);
    const auto ps = fixtures::load(name);
    const std::string text = serialize_process_set(*ps);
    const auto again = parse_process_set(text);
    CHECK(again == *ps);
    CHECK(serialize_process_set(again) == text);
  }
}

TEST_CASE("unused catalog steps warn") {
  const auto ps = parse_process_set(
      "format_version: 1\nroles: [r]\nsteps:\n  - {id: s}\n  - {id: spare}\nprocesses:\n"
      "  - {type: P, segments: [s]}\n");
  REQUIRE(ps.warnings().size() == 1);
  CHECK(ps.warnings()[0].message.find("spare") != std::string::npos);
}
