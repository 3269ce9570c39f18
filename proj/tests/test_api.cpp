// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <random>

#include <httplib.h>

#include "fixtures.hpp"
#include "procflow/api.hpp"
#include "procflow/store.hpp"

using namespace procflow;
using namespace std::chrono;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Harness {
  fs::path dir;
  Timestamp clock = sys_days(2026y / March / 2) + hours(9);
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> http;

  Harness() {
    dir = fs::temp_directory_path() / ("procflow-api-" + std::to_string(std::random_device{}()));
    fs::remove_all(dir);
    FileStore store(dir);
    store.put_user("root", "pw", {"administrator"});
    store.put_user("ann", "pw", {"clerk"});
    store.put_user("ivan", "pw", {"inspector"});
    store.put_user("mia", "pw", {"manager"});
    store.put_user("otto", "pw", {"observer"});
    store.put_user("both", "pw", {"clerk", "inspector"});
    store.put_user("mixed", "pw", {"clerk", "auditor"});
    store.put_user("stranger", "pw", {"auditor"});
    ServiceOptions opts;
    opts.data_dir = dir;
    opts.clock = [this] { return clock; };
    service = std::make_unique<Service>(opts);
    const int port = service->start("127.0.0.1", 0);
    http = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  ~Harness() {
    service->stop();
    fs::remove_all(dir);
  }

  std::string login(const std::string& user) {
    auto r = http->Post("/login", json{{"user", user}, {"password", "pw"}}.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    return json::parse(r->body)["token"];
  }

  static httplib::Headers auth(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

  httplib::Result post(const std::string& token, const std::string& path, const json& body) {
    return http->Post(path, auth(token), body.dump(), "application/json");
  }
  httplib::Result get(const std::string& token, const std::string& path) { return http->Get(path, auth(token)); }

  void upload_fig1() {
    const auto root = login("root");
    auto r = http->Put("/definitions", auth(root), fixtures::read_file(fixtures::data_path("fig1.yaml")),
                       "application/yaml");
    REQUIRE(r);
    REQUIRE(r->status == 200);
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

}  // namespace

TEST_CASE("login rejects bad credentials and unknown tokens") {
  Harness h;
  auto r = h.http->Post("/login", json{{"user", "ann"}, {"password", "nope"}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 401);
  CHECK(h.get("bogus", "/procedures")->status == 401);
  CHECK(h.http->Get("/procedures")->status == 401);
}

TEST_CASE("session roles are limited to declared roles") {
  Harness h;
  h.upload_fig1();
  auto r = h.http->Post("/login", json{{"user", "mixed"}, {"password", "pw"}}.dump(), "application/json");
  CHECK(body_of(r)["roles"] == json::array({"clerk"}));
  r = h.http->Post("/login", json{{"user", "stranger"}, {"password", "pw"}}.dump(), "application/json");
  CHECK(r->status == 403);
  r = h.http->Post("/login", json{{"user", "root"}, {"password", "pw"}}.dump(), "application/json");
  CHECK(body_of(r)["roles"] == json::array({"administrator"}));
}

TEST_CASE("sessions expire") {
  Harness h;
  const auto t = h.login("ann");
  h.clock += hours(9);
  CHECK(h.get(t, "/procedures")->status == 401);
}

TEST_CASE("definitions upload is administrator only and reports diagnostics") {
  Harness h;
  const auto ann = h.login("ann");
  const auto text = fixtures::read_file(fixtures::data_path("fig1.yaml"));
  CHECK(h.http->Put("/definitions", Harness::auth(ann), text, "application/yaml")->status == 403);

  const auto root = h.login("root");
  auto bad = h.http->Put("/definitions", Harness::auth(root), "steps: [", "application/yaml");
  CHECK(bad->status == 422);
  CHECK(body_of(bad)["error"] == "syntax_error");
  CHECK(!body_of(bad)["diagnostics"].empty());

  auto ok = h.http->Put("/definitions", Harness::auth(root), text, "application/yaml");
  CHECK(ok->status == 200);
  CHECK(body_of(ok)["version"] == 1);
  CHECK(h.get(ann, "/definitions")->body == text);
}

TEST_CASE("verify returns the verdict with 422 for an incorrect model") {
  Harness h;
  h.upload_fig1();
  const auto ann = h.login("ann");
  auto bad = h.http->Post("/cm/verify", Harness::auth(ann),
                          fixtures::read_file(fixtures::data_path("cm/fig1_bad_a5_before_a4.yaml")), "application/yaml");
  REQUIRE(bad);
  CHECK(bad->status == 422);
  const auto v = body_of(bad);
  CHECK(v["correct"] == false);
  REQUIRE(v["violations"].size() == 1);
  CHECK(v["violations"][0]["kind"] == "order");
  CHECK(v["violations"][0]["process"] == "A");

  auto good = h.http->Post("/cm/verify", Harness::auth(ann),
                           fixtures::read_file(fixtures::data_path("cm/fig1_good.yaml")), "application/yaml");
  CHECK(good->status == 200);
  CHECK(body_of(good)["correct"] == true);
}

TEST_CASE("build and graph endpoints") {
  Harness h;
  h.upload_fig1();
  const auto root = h.login("root");
  auto r = h.post(root, "/cm/build?strategy=round-robin", json::object());
  CHECK(r->status == 201);
  CHECK(body_of(r)["order"] == json{"C1", "A3", "B1", "B2", "C2", "A4", "B3", "A5", "C3"});
  CHECK(h.post(root, "/cm/build?strategy=zigzag", json::object())->status == 400);
  CHECK(h.post(h.login("ann"), "/cm/build", json::object())->status == 403);
  auto dot = h.get(root, "/cm/graph.dot");
  CHECK(dot->status == 200);
  CHECK(dot->body.find("digraph") != std::string::npos);
}

TEST_CASE("procedure lifecycle over HTTP") {
  Harness h;
  h.upload_fig1();
  const auto ann = h.login("ann"), ivan = h.login("ivan"), mia = h.login("mia"), otto = h.login("otto");

  CHECK(h.post(otto, "/procedures", {{"proc_type", "A"}})->status == 403);
  CHECK(h.post(ann, "/procedures", {{"proc_type", "Z"}})->status == 422);
  CHECK(h.post(ann, "/procedures", {{"proc_type", "A"}, {"params", {{"site_visit", 3}}}})->status == 422);

  auto created = h.post(ann, "/procedures", {{"proc_type", "A"}});
  REQUIRE(created->status == 201);
  const std::string id = body_of(created)["id"];
  CHECK(id == "P-000001");
  CHECK(body_of(created)["view"]["current_step"] == "C1");

  const std::string step = "/procedures/" + id + "/steps/";
  // Wrong role, then an ill-typed value.
  CHECK(h.post(ivan, step + "C1", {{"version", 1}, {"values", {{"site_visit", true}}}})->status == 403);
  auto ill = h.post(ann, step + "C1", {{"version", 1}, {"values", {{"site_visit", "yes"}}}});
  CHECK(ill->status == 422);
  CHECK(body_of(ill)["error"] == "ill_typed_value");

  auto ok = h.post(ann, step + "C1", {{"version", 1}, {"values", {{"site_visit", false}}}});
  REQUIRE(ok->status == 200);
  CHECK(body_of(ok)["version"] == 2);

  SUBCASE("a stale version is refused and changes nothing") {
    const auto before = h.get(ivan, "/procedures/" + id + "/view")->body;
    auto stale = h.post(ivan, step + "A3", {{"version", 1}, {"values", {{"notes", "late"}}}});
    CHECK(stale->status == 409);
    CHECK(body_of(stale)["error"] == "stale_version");
    CHECK(h.get(ivan, "/procedures/" + id + "/view")->body == before);
    CHECK(FileStore(h.dir).audit(id).size() == 2);
  }

  SUBCASE("finish, archive and view as observer") {
    CHECK(h.post(ivan, step + "A3", {{"version", 2}, {"values", {{"notes", "fine"}}}})->status == 200);
    CHECK(h.post(ann, "/procedures/" + id + "/archive", json::object())->status == 409);
    CHECK(h.post(mia, step + "C3", {{"version", 3}, {"values", {{"approved", true}}}})->status == 200);
    auto archived = h.post(mia, "/procedures/" + id + "/archive", {{"version", 4}});
    CHECK(archived->status == 200);
    CHECK(h.post(mia, step + "C3", {{"version", 5}, {"values", {{"approved", false}}}})->status == 409);

    const auto view = body_of(h.get(otto, "/procedures/" + id + "/view"));
    CHECK(view["status"] == "archived");
    for (const auto& s : view["steps"]) CHECK(s["mode"] != "edit");

    auto page = body_of(h.get(otto, "/procedures?status=archived"));
    CHECK(page["total"] == 1);
  }
}

TEST_CASE("hidden steps expose only id and number, for every role") {
  Harness h;
  h.upload_fig1();
  const auto ann = h.login("ann");
  const std::string id = body_of(h.post(ann, "/procedures", {{"proc_type", "A"}}))["id"];
  for (const std::string user : {"ann", "ivan", "mia", "otto"}) {
    const auto view = body_of(h.get(h.login(user), "/procedures/" + id + "/view"));
    for (const auto& s : view["steps"]) {
      if (s["mode"] != "hidden") continue;
      CHECK(s.size() == 3);
      CHECK(!s.contains("fields"));
      CHECK(!s.contains("title"));
    }
  }
  const auto clerk_view = body_of(h.get(ann, "/procedures/" + id + "/view"));
  bool a4_hidden = false;
  for (const auto& s : clerk_view["steps"]) a4_hidden |= s["id"] == "A4" && s["mode"] == "hidden";
  CHECK(a4_hidden);
}

TEST_CASE("role selection") {
  Harness h;
  h.upload_fig1();
  const auto both = h.login("both");
  CHECK(h.post(both, "/procedures", {{"proc_type", "A"}})->status == 400);
  CHECK(h.post(both, "/procedures?role=manager", {{"proc_type", "A"}})->status == 403);
  auto r = h.http->Post("/procedures", {{"Authorization", "Bearer " + both}, {"X-Role", "clerk"}},
                        json{{"proc_type", "B"}}.dump(), "application/json");
  CHECK(r->status == 201);
}

TEST_CASE("search and reports") {
  Harness h;
  h.upload_fig1();
  const auto ann = h.login("ann");
  for (const char* type : {"A", "B", "B"}) h.post(ann, "/procedures", {{"proc_type", type}});
  auto page = body_of(h.get(ann, "/procedures?proc_type=B&sort=-id"));
  CHECK(page["total"] == 2);
  CHECK(page["items"][0]["id"] == "P-000003");
  CHECK(h.get(ann, "/procedures?colour=red")->status == 400);

  auto rep = body_of(h.get(ann, "/reports/counts_by_type_and_status"));
  CHECK(rep["rows"] == json::parse(R"([{"proc_type":"A","current":1,"archived":0},{"proc_type":"B","current":2,"archived":0}])"));
  auto csv = h.get(ann, "/reports/counts_by_type_and_status?format=csv");
  CHECK(csv->get_header_value("Content-Type") == "text/csv");
  CHECK(h.get(ann, "/reports/nope")->status == 404);
  CHECK(h.get(ann, "/procedures/P-999999/view")->status == 404);
}

TEST_CASE("hidden steps and fields stay out of views for all six roles") {
  Harness h;
  const auto ps = fixtures::load("neaa.yaml");
  const std::vector<std::string> roles{"administrator", "accountant", "ac_secretary",
                                       "scahe_secretary", "clerk", "observer"};
  std::string id;
  {
    // Drive an instance past the expert report, whose draft field is edit-only.
    FileStore store(h.dir);
    store.put_definitions(fixtures::read_file(fixtures::data_path("neaa.yaml")));
    const auto cm = std::make_shared<const ConsolidatedModel>(consolidate(ps));
    const auto stored = store.put_cm(*cm, Strategy::by_process, 1);
    const Engine engine(store.load_cm(stored.ref));
    for (const auto& r : roles) store.put_user("u_" + r, "pw", {r});
    id = store.next_instance_id();
    auto t = engine.create(id, stored.ref, "IA", {}, {"u_clerk", "clerk"}, h.clock);
    store.save(t);
    auto inst = t.instance;
    while (inst.current_step() != std::optional<std::string>("C08")) {
      const StepDef& s = *engine.model().step(*inst.current_step());
      std::map<std::string, Value> values;
      for (const auto& f : s.fields) values.emplace(f.name, placeholder_value(f.kind, h.clock));
      if (s.id == "C07") values["draft"] = std::string("confidential draft");
      auto next = engine.submit_edit(inst, {"u", *s.edit_roles.begin()}, s.id, values, inst.version, h.clock);
      store.save(next);
      inst = next.instance;
    }
  }

  for (const auto& role : roles) {
    CAPTURE(role);
    auto r = h.get(h.login("u_" + role), "/procedures/" + id + "/view");
    REQUIRE(r->status == 200);
    CHECK(r->body.find("confidential draft") == std::string::npos);
    const auto view = json::parse(r->body);
    std::size_t hidden = 0;
    for (const auto& s : view["steps"]) {
      const StepDef& def = *ps->step(s["id"].get<std::string>());
      const bool may_see = def.view_roles.contains(role) || def.edit_roles.contains(role);
      CHECK((s["mode"] == "hidden") == !may_see);
      if (s["mode"] == "hidden") {
        ++hidden;
        CHECK(s.size() == 3);
        continue;
      }
      for (const auto& f : s["fields"]) {
        const FieldDef* fd = def.field(f["name"].get<std::string>());
        REQUIRE(fd != nullptr);
        CHECK((s["mode"] == "edit" ? fd->visible_in_edit : fd->visible_in_view));
      }
    }
    if (role == "observer") {
      for (const auto& s : view["steps"]) CHECK(s["mode"] != "edit");
    }
    if (role != "administrator") CHECK(hidden > 0);
  }
}
