// SPDX-License-Identifier: Apache-2.0
#include "procflow/api.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <openssl/rand.h>

#include "procflow/store.hpp"
#include "procflow/verify.hpp"

namespace procflow {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::unauthenticated: return 401;
    case ErrorKind::unauthorized: return 403;
    case ErrorKind::not_found:
    case ErrorKind::unknown_step:
    case ErrorKind::unknown_report: return 404;
    case ErrorKind::stale_version:
    case ErrorKind::version_conflict:
    case ErrorKind::archived:
    case ErrorKind::not_finished:
    case ErrorKind::not_current_step: return 409;
    case ErrorKind::invalid_query:
    case ErrorKind::invalid_argument: return 400;
    case ErrorKind::io: return 500;
    default: return 422;
  }
}

namespace {

constexpr const char* kAdminRole = "administrator";
constexpr const char* kJson = "application/json";

struct Session {
  std::string user;
  std::set<std::string> roles;
  Timestamp expires_at;
};

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const Error& e) {
  nlohmann::json body{{"error", to_string(e.kind())}, {"message", e.what()}};
  if (!e.diagnostics().empty()) {
    auto& d = body["diagnostics"] = nlohmann::json::array();
    for (const auto& x : e.diagnostics()) d.push_back({{"line", x.line}, {"column", x.column}, {"message", x.message}});
  }
  if (const auto* a = dynamic_cast<const InconsistentAnchorOrder*>(&e)) {
    body["steps"] = {a->step_a(), a->step_b()};
    body["processes"] = {a->process_p(), a->process_q()};
  }
  send_json(res, http_status(e.kind()), body);
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::invalid_argument, "request body must be a JSON object");
  return j;
}

std::string token_hex() {
  unsigned char buf[24];
  if (RAND_bytes(buf, sizeof buf) != 1) throw Error(ErrorKind::io, "no randomness available");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : buf) {
    out += hex[c >> 4];
    out += hex[c & 0xf];
  }
  return out;
}

}  // namespace

struct Service::Impl {
  ServiceOptions opts;
  FileStore store;
  httplib::Server server;
  std::thread thread;

  std::mutex sessions_mu;
  std::map<std::string, Session> sessions;
  std::mutex locks_mu;
  std::map<std::string, std::shared_ptr<std::mutex>> instance_locks;  // one per instance id
  std::mutex cache_mu;
  std::map<std::string, std::shared_ptr<const Engine>> engines;
  std::map<int, std::shared_ptr<const ProcessSet>> definitions;

  explicit Impl(ServiceOptions o) : opts(std::move(o)), store(opts.data_dir) {
    if (!opts.clock) opts.clock = [] { return std::chrono::floor<Seconds>(std::chrono::system_clock::now()); };
    routes();
  }

  Timestamp now() const { return opts.clock(); }

  // -- helpers --------------------------------------------------------------

  std::pair<int, std::shared_ptr<const ProcessSet>> current_definitions() {
    const auto doc = store.definitions();
    if (!doc) throw Error(ErrorKind::not_found, "no definitions have been uploaded");
    std::lock_guard lock(cache_mu);
    auto& ps = definitions[doc->version];
    if (!ps) ps = std::make_shared<const ProcessSet>(parse_process_set(doc->text));
    return {doc->version, ps};
  }

  std::shared_ptr<const Engine> engine(const CmRef& ref) {
    const std::string key = ref.id + "@" + std::to_string(ref.version);
    {
      std::lock_guard lock(cache_mu);
      if (auto it = engines.find(key); it != engines.end()) return it->second;
    }
    auto e = std::make_shared<const Engine>(store.load_cm(ref), opts.runtime);
    std::lock_guard lock(cache_mu);
    return engines.emplace(key, std::move(e)).first->second;
  }

  // Mutations of one instance run one at a time; different instances proceed in parallel.
  std::unique_lock<std::mutex> lock_instance(const std::string& id) {
    std::shared_ptr<std::mutex> m;
    {
      std::lock_guard g(locks_mu);
      auto& slot = instance_locks[id];
      if (!slot) slot = std::make_shared<std::mutex>();
      m = slot;
    }
    return std::unique_lock<std::mutex>(*m);
  }

  Session session(const httplib::Request& req) {
    const std::string auth = req.get_header_value("Authorization");
    if (!auth.starts_with("Bearer ")) throw Error(ErrorKind::unauthenticated, "missing bearer token");
    const std::string token = auth.substr(7);
    std::lock_guard lock(sessions_mu);
    const auto it = sessions.find(token);
    if (it == sessions.end()) throw Error(ErrorKind::unauthenticated, "unknown or closed session");
    if (it->second.expires_at <= now()) {
      sessions.erase(it);
      throw Error(ErrorKind::unauthenticated, "session expired");
    }
    return it->second;
  }

  std::string role(const httplib::Request& req, const Session& s) {
    std::string r = req.has_param("role") ? req.get_param_value("role") : req.get_header_value("X-Role");
    if (r.empty()) {
      if (s.roles.size() == 1) return *s.roles.begin();
      throw Error(ErrorKind::invalid_argument, "choose a role with ?role= or X-Role");
    }
    if (!s.roles.contains(r)) throw Error(ErrorKind::unauthorized, "user " + s.user + " does not hold role '" + r + "'");
    return r;
  }

  static void require_admin(const std::string& role) {
    if (role != kAdminRole) throw Error(ErrorKind::unauthorized, "administrator role required");
  }

  static bool may_work_on(const ProcessSet& ps, const std::string& proc_type, const std::string& role) {
    if (role == kAdminRole) return true;
    for (const auto& s : ps.steps()) {
      if (s.owner_types.contains(proc_type) && s.edit_roles.contains(role)) return true;
    }
    return false;
  }

  StoredCm current_cm() {
    if (auto cm = store.cm()) return *cm;
    auto [version, ps] = current_definitions();
    return store.put_cm(consolidate(ps, Strategy::by_process), Strategy::by_process, version);
  }

  nlohmann::json view_json(const Engine& e, const ProcedureInstance& inst, const std::string& role) {
    return view_to_json(e.render_view(inst, role, now()));
  }

  // -- routes ---------------------------------------------------------------

  template <typename F>
  auto guarded(F fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const nlohmann::json::exception& e) {
        send_error(res, Error(ErrorKind::invalid_argument, std::string("malformed request: ") + e.what()));
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "internal_error"}, {"message", e.what()}});
      }
    };
  }

  void routes() {
    server.Post("/login", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      const auto user = store.authenticate(body.value("user", ""), body.value("password", ""));
      if (!user) throw Error(ErrorKind::unauthenticated, "invalid user name or password");
      // Session roles are limited to the roles the current definitions declare;
      // administrator is a service role and always kept.
      std::set<std::string> roles = user->roles;
      if (store.definitions()) {
        const auto& declared = current_definitions().second->roles();
        std::erase_if(roles, [&](const std::string& r) {
          return r != "administrator" && std::find(declared.begin(), declared.end(), r) == declared.end();
        });
      }
      if (roles.empty()) throw Error(ErrorKind::unauthorized, "user " + user->name + " holds no declared role");
      Session s{user->name, std::move(roles), now() + opts.session_ttl};
      const std::string token = token_hex();
      {
        std::lock_guard lock(sessions_mu);
        sessions[token] = s;
      }
      send_json(res, 200,
                {{"token", token}, {"user", s.user}, {"roles", s.roles}, {"expires_at", format_timestamp(s.expires_at)}});
    }));

    server.Delete("/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
      session(req);
      std::lock_guard lock(sessions_mu);
      sessions.erase(req.get_header_value("Authorization").substr(7));
      res.status = 204;
    }));

    server.Get("/definitions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      session(req);
      const auto doc = store.definitions();
      if (!doc) throw Error(ErrorKind::not_found, "no definitions have been uploaded");
      res.set_header("X-Definitions-Version", std::to_string(doc->version));
      res.set_content(doc->text, "application/yaml");
    }));

    server.Put("/definitions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = session(req);
      require_admin(role(req, s));
      const auto ps = parse_process_set(req.body);
      const auto doc = store.put_definitions(req.body);
      nlohmann::json warnings = nlohmann::json::array();
      for (const auto& w : ps.warnings()) warnings.push_back(w.str());
      send_json(res, 200, {{"version", doc.version}, {"sha256", doc.sha256}, {"warnings", warnings}});
    }));

    server.Post("/cm/build", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = session(req);
      require_admin(role(req, s));
      const std::string name = req.has_param("strategy") ? req.get_param_value("strategy") : "by-process";
      const auto strategy = parse_strategy(name);
      if (!strategy) throw Error(ErrorKind::invalid_argument, "unknown strategy '" + name + "'");
      auto [version, ps] = current_definitions();
      const auto cm = consolidate(ps, *strategy);
      const auto stored = store.put_cm(cm, strategy, version);
      send_json(res, 201,
                {{"id", stored.ref.id},
                 {"version", stored.ref.version},
                 {"strategy", to_string(*strategy)},
                 {"definitions_version", version},
                 {"order", cm.order()}});
    }));

    server.Post("/cm/verify", guarded([this](const httplib::Request& req, httplib::Response& res) {
      session(req);
      const auto order = parse_cm_order(req.body);
      std::shared_ptr<const ProcessSet> ps;
      if (req.body.find("processes") != std::string::npos) {
        ps = std::make_shared<const ProcessSet>(parse_process_set(req.body));
      } else {
        ps = current_definitions().second;
      }
      const auto verdict = verify_linear_cm(*ps, order);
      auto body = verdict_to_json(verdict);
      body["report"] = explain(verdict);
      if (!verdict.correct) body["error"] = "incorrect_model";
      send_json(res, verdict.correct ? 200 : 422, body);
    }));

    server.Get("/cm/graph.dot", guarded([this](const httplib::Request& req, httplib::Response& res) {
      session(req);
      res.set_content(graph_to_dot(build_graph_cm(current_definitions().second)), "text/vnd.graphviz");
    }));

    server.Post("/procedures", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = session(req);
      const std::string r = role(req, s);
      const auto body = parse_body(req);
      const std::string proc_type = body.value("proc_type", "");
      const auto cm = current_cm();
      const auto e = engine(cm.ref);
      const ProcessSet& ps = *e->model().source;
      if (!ps.process(proc_type)) throw Error(ErrorKind::unknown_proc_type, "unknown procedure type '" + proc_type + "'");
      if (!may_work_on(ps, proc_type, r))
        throw Error(ErrorKind::unauthorized, "role '" + r + "' takes no part in procedures of type " + proc_type);
      std::map<std::string, Value> params;
      for (const auto& [name, raw] : body.value("params", nlohmann::json::object()).items()) {
        const auto decl = ps.params().find(name);
        if (decl == ps.params().end()) throw Error(ErrorKind::ill_typed_params, "undeclared parameter '" + name + "'");
        auto v = value_from_json(raw, decl->second);
        if (!v) throw Error(ErrorKind::ill_typed_params, "parameter '" + name + "' expects " + kind_name(decl->second));
        params.emplace(name, std::move(*v));
      }
      const auto t = e->create(store.next_instance_id(), cm.ref, proc_type, params, Actor{s.user, r}, now());
      store.save(t);
      send_json(res, 201, {{"id", t.instance.id}, {"version", t.instance.version}, {"view", view_json(*e, t.instance, r)}});
    }));

    server.Get("/procedures", guarded([this](const httplib::Request& req, httplib::Response& res) {
      session(req);
      std::multimap<std::string, std::string> args(req.params.begin(), req.params.end());
      const auto defs = store.definitions() ? current_definitions().second : nullptr;
      const auto q = parse_search_query(args, defs ? &defs->params() : nullptr);
      send_json(res, 200, page_to_json(search_instances(store.load_all(), q, now())));
    }));

    server.Get("/procedures/:id/view", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = session(req);
      const std::string r = role(req, s);
      const auto inst = store.load_instance(req.path_params.at("id"));
      send_json(res, 200, view_json(*engine(inst.cm_ref), inst, r));
    }));

    server.Post("/procedures/:id/steps/:sid", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = session(req);
      const Actor actor{s.user, role(req, s)};
      const auto body = parse_body(req);
      if (!body.contains("version") || !body["version"].is_number_integer())
        throw Error(ErrorKind::invalid_argument, "body needs an integer 'version'");
      const int version = body["version"].get<int>();
      const std::string sid = req.path_params.at("sid");
      const auto lock = lock_instance(req.path_params.at("id"));
      const auto inst = store.load_instance(req.path_params.at("id"));
      const auto e = engine(inst.cm_ref);
      std::map<std::string, Value> values;
      try {
        values = e->values_from_json(sid, body.value("values", nlohmann::json::object()));
      } catch (const Error&) {
        // Report earlier-ranked problems (stale version, rights) first.
        e->submit_edit(inst, actor, sid, {}, version, now());
        throw;
      }
      const auto t = e->submit_edit(inst, actor, sid, values, version, now());
      store.save(t);
      send_json(res, 200, {{"id", t.instance.id}, {"version", t.instance.version}, {"view", view_json(*e, t.instance, actor.role)}});
    }));

    server.Post("/procedures/:id/archive", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = session(req);
      const Actor actor{s.user, role(req, s)};
      const auto body = parse_body(req);
      const bool override_unfinished = body.value("override", false);
      if (override_unfinished) require_admin(actor.role);
      const auto lock = lock_instance(req.path_params.at("id"));
      const auto inst = store.load_instance(req.path_params.at("id"));
      const auto e = engine(inst.cm_ref);
      if (!may_work_on(*e->model().source, inst.proc_type, actor.role))
        throw Error(ErrorKind::unauthorized, "role '" + actor.role + "' may not archive this procedure");
      if (body.contains("version") && body["version"].get<int>() != inst.version)
        throw Error(ErrorKind::stale_version, "version " + body["version"].dump() + " is stale");
      const auto t = e->archive(inst, actor, now(), override_unfinished);
      store.save(t);
      send_json(res, 200, {{"id", t.instance.id}, {"version", t.instance.version}, {"status", "archived"}});
    }));

    server.Get("/reports/:kind", guarded([this](const httplib::Request& req, httplib::Response& res) {
      session(req);
      std::vector<std::string> types;
      if (store.definitions()) types = current_definitions().second->type_ids();
      const auto report = make_report(req.path_params.at("kind"), store.load_all(), store.all_audits(), types, now());
      if (req.get_param_value("format") == "csv") {
        res.set_content(report_to_csv(report), "text/csv");
      } else {
        send_json(res, 200, report_to_json(report));
      }
    }));
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error(ErrorKind::io, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace procflow
