// SPDX-License-Identifier: Apache-2.0
// Command-line front end over the C interface.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "procflow/procflow.h"

namespace {

constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Thrown to leave a command with a message and an exit status.
struct Exit {
  int code;
  std::string message;
};

void check(pf_status s) {
  if (s != PF_OK) throw Exit{kFailure, std::string(pf_status_name(s)) + ": " + pf_last_error()};
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{kFailure, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Owning wrappers for the C handles.
struct Owned {
  char* p = nullptr;
  ~Owned() { pf_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Definitions {
  pf_process_set* ps = nullptr;
  explicit Definitions(const std::string& path) {
    const auto text = read_input(path);
    check(pf_process_set_parse(text.data(), text.size(), &ps));
  }
  ~Definitions() { pf_process_set_free(ps); }
};

struct Store {
  pf_store* st = nullptr;
  explicit Store(const std::string& dir) { check(pf_store_open(dir.c_str(), &st)); }
  ~Store() { pf_store_free(st); }
};

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Exit{kFailure, "cannot write " + path};
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procflow: consolidate, verify and run administrative procedures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pf_version());

  std::string defs_path, cm_path, strategy = "by-process", format, out_path, proc_type, script_path;
  std::string data_dir = env_or("DATA_DIR", "./data-store"), host = "0.0.0.0", now, kind, roles, password;
  std::string user_name, graph_path;
  std::vector<std::string> query;
  std::size_t max_steps = 16;
  bool from_graph = false, json_out = false;
  int port = std::atoi(env_or("PORT", "8080").c_str());

  const auto strategy_opt = [&](CLI::App* c) {
    c->add_option("--strategy", strategy, "by-process or round-robin")
        ->check(CLI::IsMember({"by-process", "round-robin"}));
  };
  const auto data_opt = [&](CLI::App* c) {
    c->add_option("--data-dir", data_dir, "store directory (env DATA_DIR)");
  };

  auto* validate = app.add_subcommand("validate", "check a definition document");
  validate->add_option("definitions", defs_path)->required();

  auto* build = app.add_subcommand("build", "build a consolidated model");
  build->add_option("definitions", defs_path)->required();
  strategy_opt(build);
  build->add_option("--graph", graph_path, "also write the standard form as DOT to this file");
  build->add_flag("--from-graph", from_graph, "build through the standard (graph) form");
  build->add_option("--format", format, "yaml (default), order, dot or json")
      ->check(CLI::IsMember({"yaml", "order", "dot", "json"}));
  build->add_option("-o,--output", out_path);

  auto* verify = app.add_subcommand("verify", "check a consolidated model; exit 0 iff correct");
  verify->add_option("definitions", defs_path)->required();
  verify->add_option("model", cm_path)->required();
  verify->add_flag("--json", json_out);

  auto* enumerate = app.add_subcommand("enumerate", "list every valid step order");
  enumerate->add_option("definitions", defs_path)->required();
  enumerate->add_option("--max-steps", max_steps, "refuse larger step sets");

  auto* simulate = app.add_subcommand("simulate", "run a scripted procedure");
  simulate->add_option("definitions", defs_path)->required();
  simulate->add_option("model", cm_path, "consolidated model")->required();
  simulate->add_option("--type", proc_type);
  simulate->add_option("--script", script_path, "JSON replay script");
  simulate->add_flag("--json", json_out, "print instance and audit trail");

  auto* publish = app.add_subcommand("publish", "store a definition document");
  publish->add_option("definitions", defs_path)->required();
  data_opt(publish);
  auto* build_cm = app.add_subcommand("build-cm", "build and store a model from the stored definitions");
  data_opt(build_cm);
  strategy_opt(build_cm);

  auto* search = app.add_subcommand("search", "search stored procedures");
  search->add_option("filters", query, "key=value, e.g. proc_type=A status=current step.C2=completed");
  data_opt(search);
  search->add_option("--now", now);

  auto* report = app.add_subcommand("report", "print a report");
  report->add_option("kind", kind)->required();
  report->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  data_opt(report);
  report->add_option("--now", now, "reference time (ISO 8601)");

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  data_opt(serve);
  serve->add_option("--host", host);
  serve->add_option("--port", port, "env PORT");

  auto* user_add = app.add_subcommand("user-add", "create or replace a user");
  user_add->add_option("name", user_name)->required();
  user_add->add_option("--roles", roles, "comma separated")->required();
  user_add->add_option("--password", password, "env PROCFLOW_PASSWORD");
  data_opt(user_add);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) {
      Definitions d(defs_path);
      Owned info;
      check(pf_process_set_describe(d.ps, &info.p));
      const auto j = nlohmann::json::parse(info.str());
      for (const auto& w : j["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
      std::cout << "ok: " << j["types"].size() << " procedure types, " << j["steps"].get<int>() << " steps, "
                << j["roles"].size() << " roles\n";
    } else if (*build) {
      Definitions d(defs_path);
      if (!graph_path.empty()) {
        Owned dot;
        check(pf_graph(d.ps, "dot", &dot.p));
        write_output(dot.str(), graph_path);
      }
      Owned text;
      if (format == "dot" || format == "json") {
        check(pf_graph(d.ps, format.c_str(), &text.p));
      } else {
        pf_model* m = nullptr;
        check(from_graph ? pf_model_build_from_graph(d.ps, strategy.c_str(), &m)
                    : pf_model_build(d.ps, strategy.c_str(), &m));
        const pf_status s = format == "order" ? pf_model_order_json(m, &text.p) : pf_model_serialize(m, &text.p);
        pf_model_free(m);
        check(s);
        if (format == "order") {
          std::string line;
          for (const auto& id : nlohmann::json::parse(text.str())) line += (line.empty() ? "" : " ") + id.get<std::string>();
          write_output(line + "\n", out_path);
          return 0;
        }
      }
      write_output(text.str(), out_path);
    } else if (*verify) {
      Definitions d(defs_path);
      const auto cm = read_input(cm_path);
      int correct = 0;
      Owned verdict;
      check(pf_verify(d.ps, cm.c_str(), &correct, &verdict.p));
      const auto j = nlohmann::json::parse(verdict.str());
      if (json_out) {
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << j["report"].get<std::string>() << '\n';
      }
      return correct ? 0 : kFailure;
    } else if (*enumerate) {
      Definitions d(defs_path);
      Owned all;
      check(pf_enumerate(d.ps, max_steps, &all.p));
      for (const auto& order : nlohmann::json::parse(all.str())) {
        std::string line;
        for (const auto& id : order) line += (line.empty() ? "" : " ") + id.get<std::string>();
        std::cout << line << '\n';
      }
    } else if (*simulate) {
      Definitions d(defs_path);
      const std::string script = script_path.empty() ? "{}" : read_input(script_path);
      const auto cm = read_input(cm_path);
      pf_model* m = nullptr;
      check(pf_model_from_text(d.ps, cm.c_str(), &m));
      Owned result;
      const pf_status s =
          pf_simulate(d.ps, m, script.c_str(), proc_type.empty() ? nullptr : proc_type.c_str(), &result.p);
      pf_model_free(m);
      check(s);
      const auto j = nlohmann::json::parse(result.str());
      if (json_out) {
        std::cout << j.dump(2) << '\n';
      } else {
        for (const auto& s : j["trace"]) std::cout << s.get<std::string>() << '\n';
        if (!j["finished"].get<bool>()) {
          std::cerr << "procedure did not finish\n";
          return kFailure;
        }
      }
    } else if (*publish) {
      Store st(data_dir);
      int version = 0;
      check(pf_store_put_definitions(st.st, read_input(defs_path).c_str(), &version));
      std::cout << "definitions version " << version << '\n';
    } else if (*build_cm) {
      Store st(data_dir);
      Owned info;
      check(pf_store_build_cm(st.st, strategy.c_str(), &info.p));
      const auto j = nlohmann::json::parse(info.str());
      std::cout << j["id"].get<std::string>() << " version " << j["version"] << '\n';
    } else if (*search) {
      Store st(data_dir);
      std::string q;
      for (const auto& f : query) q += (q.empty() ? "" : "&") + f;
      Owned page;
      check(pf_store_search(st.st, q.c_str(), now.empty() ? nullptr : now.c_str(), &page.p));
      std::cout << nlohmann::json::parse(page.str()).dump(2) << '\n';
    } else if (*report) {
      Store st(data_dir);
      Owned text;
      check(pf_store_report(st.st, kind.c_str(), format.empty() ? "json" : format.c_str(),
                            now.empty() ? nullptr : now.c_str(), &text.p));
      write_output(text.str(), "");
    } else if (*serve) {
      std::cerr << "serving " << data_dir << " on " << host << ":" << port << '\n';
      check(pf_serve(data_dir.c_str(), host.c_str(), port));
    } else if (*user_add) {
      if (password.empty()) password = env_or("PROCFLOW_PASSWORD", "");
      if (password.empty()) throw Exit{kUsage, "a password is required (--password or PROCFLOW_PASSWORD)"};
      Store st(data_dir);
      check(pf_store_put_user(st.st, user_name.c_str(), password.c_str(), roles.c_str()));
      std::cout << "user " << user_name << " saved\n";
    }
  } catch (const Exit& e) {
    std::cerr << "procflow: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "procflow: " << e.what() << '\n';
    return kFailure;
  }
  return 0;
}
