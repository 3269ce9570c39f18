// SPDX-License-Identifier: Apache-2.0
#include "procflow/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/rand.h>

namespace procflow {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_error(const std::string& what, const fs::path& p) {
  throw Error(ErrorKind::io, what + " " + p.string() + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const fs::path& p) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("cannot write", p);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// One write(2) per record with O_APPEND, so concurrent readers never see a
// torn line from a completed append.
void append_line(const fs::path& p, const std::string& line) {
  const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot open", p);
  try {
    write_all(fd, line + "\n", p);
    if (::fsync(fd) != 0) io_error("cannot sync", p);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

nlohmann::json read_json(const fs::path& p, nlohmann::json fallback) {
  if (!fs::exists(p)) return fallback;
  try {
    return nlohmann::json::parse(read_text_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, "corrupt document " + p.string() + ": " + e.what());
  }
}

std::string version_file(int v) {
  std::string n = std::to_string(v);
  return "v" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n + ".yaml";
}

bool safe_id(std::string_view id) {
  return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string random_hex(std::size_t bytes) {
  std::vector<unsigned char> buf(bytes);
  if (RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1) throw Error(ErrorKind::io, "no randomness available");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : buf) {
    out += hex[c >> 4];
    out += hex[c & 0xf];
  }
  return out;
}

[[noreturn]] void bad_query(const std::string& msg) { throw Error(ErrorKind::invalid_query, msg); }

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || p != v.data() + v.size()) bad_query("'" + key + "' expects a non-negative integer");
  return n;
}

Timestamp parse_bound(const std::string& key, const std::string& v) {
  auto t = parse_timestamp(v);
  if (!t) bad_query("'" + key + "' expects a date or timestamp");
  return *t;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot create", tmp);
  try {
    write_all(fd, data, tmp);
    if (::fsync(fd) != 0) io_error("cannot sync", tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_error("cannot rename", tmp);
}

// ---------------------------------------------------------------------------
// Search

SearchQuery parse_search_query(const std::multimap<std::string, std::string>& args, const ParamDecls* decls) {
  SearchQuery q;
  for (const auto& [key, value] : args) {
    if (key == "proc_type") {
      q.proc_type = value;
    } else if (key == "status") {
      q.status = parse_procedure_status(value);
      if (!q.status) bad_query("status must be 'current' or 'archived'");
    } else if (key == "created_from") {
      q.created_from = parse_bound(key, value);
    } else if (key == "created_to") {
      q.created_to = parse_bound(key, value);
    } else if (key.starts_with("step.")) {
      auto st = parse_step_status(value);
      if (!st) bad_query("unknown step status '" + value + "'");
      q.step_status.emplace_back(key.substr(5), *st);
    } else if (key.starts_with("param.")) {
      const std::string name = key.substr(6);
      std::string text = value;
      if (decls) {
        const auto it = decls->find(name);
        if (it == decls->end()) bad_query("undeclared parameter '" + name + "'");
        auto j = nlohmann::json::parse(value, nullptr, false);
        if (j.is_discarded() || j.is_object() || j.is_array()) j = value;
        auto v = value_from_json(j, it->second);
        if (!v) v = value_from_json(nlohmann::json(value), it->second);
        if (!v) bad_query("parameter '" + name + "' expects " + kind_name(it->second));
        text = value_to_text(*v);
      }
      q.params.emplace_back(name, std::move(text));
    } else if (key == "overdue") {
      if (value != "true" && value != "false") bad_query("overdue must be true or false");
      q.overdue = value == "true";
    } else if (key == "q") {
      q.text = value;
    } else if (key == "sort") {
      std::string k = value;
      q.descending = k.starts_with('-');
      if (q.descending) k.erase(0, 1);
      static const std::set<std::string> keys{"created_at", "id", "proc_type", "status", "version"};
      if (!keys.contains(k)) bad_query("unknown sort key '" + k + "'");
      q.sort = k;
    } else if (key == "offset") {
      q.offset = parse_count(key, value);
    } else if (key == "limit") {
      q.limit = parse_count(key, value);
    } else if (key != "role") {
      bad_query("unknown filter '" + key + "'");
    }
  }
  return q;
}

InstanceSummary summarize(const ProcedureInstance& inst, Timestamp now) {
  InstanceSummary s{inst.id, inst.proc_type, inst.status, inst.created_at, inst.version, {}, {}, false};
  if (inst.status == ProcedureStatus::current) {
    s.current_step = inst.current_step();
    if (s.current_step) {
      s.deadline = inst.step_states.at(*s.current_step).deadline;
      s.overdue = s.deadline && *s.deadline < now;
    }
  }
  return s;
}

SearchPage search_instances(const std::vector<ProcedureInstance>& all, const SearchQuery& q, Timestamp now) {
  std::vector<std::pair<const ProcedureInstance*, InstanceSummary>> hits;
  const std::string needle = q.text ? lower(*q.text) : "";
  for (const auto& inst : all) {
    InstanceSummary s = summarize(inst, now);
    if (q.proc_type && inst.proc_type != *q.proc_type) continue;
    if (q.status && inst.status != *q.status) continue;
    if (q.created_from && inst.created_at < *q.created_from) continue;
    if (q.created_to && inst.created_at >= *q.created_to) continue;
    if (q.overdue && s.overdue != *q.overdue) continue;
    const bool steps_ok = std::all_of(q.step_status.begin(), q.step_status.end(), [&](const auto& f) {
      const auto it = inst.step_states.find(f.first);
      return it != inst.step_states.end() && it->second.status == f.second;
    });
    if (!steps_ok) continue;
    const bool params_ok = std::all_of(q.params.begin(), q.params.end(), [&](const auto& f) {
      const auto it = inst.env.values.find(f.first);
      return it != inst.env.values.end() && value_to_text(it->second) == f.second;
    });
    if (!params_ok) continue;
    if (q.text) {
      bool found = false;
      for (const auto& [_, st] : inst.step_states) {
        for (const auto& [__, v] : st.field_values) {
          if (lower(value_to_text(v)).find(needle) != std::string::npos) found = true;
        }
      }
      if (!found) continue;
    }
    hits.emplace_back(&inst, std::move(s));
  }
  auto key_less = [&](const InstanceSummary& a, const InstanceSummary& b) {
    if (q.sort == "created_at") return a.created_at < b.created_at;
    if (q.sort == "proc_type") return a.proc_type < b.proc_type;
    if (q.sort == "status") return a.status < b.status;
    if (q.sort == "version") return a.version < b.version;
    return false;
  };
  std::sort(hits.begin(), hits.end(), [&](const auto& x, const auto& y) {
    const auto& a = q.descending ? y.second : x.second;
    const auto& b = q.descending ? x.second : y.second;
    if (key_less(a, b)) return true;
    if (key_less(b, a)) return false;
    return a.id < b.id;
  });
  SearchPage page;
  page.total = hits.size();
  for (std::size_t i = q.offset; i < hits.size() && page.items.size() < q.limit; ++i)
    page.items.push_back(std::move(hits[i].second));
  return page;
}

nlohmann::json summary_to_json(const InstanceSummary& s) {
  return {{"id", s.id},
          {"proc_type", s.proc_type},
          {"status", to_string(s.status)},
          {"created_at", format_timestamp(s.created_at)},
          {"version", s.version},
          {"current_step", s.current_step ? nlohmann::json(*s.current_step) : nlohmann::json(nullptr)},
          {"deadline", s.deadline ? nlohmann::json(format_timestamp(*s.deadline)) : nlohmann::json(nullptr)},
          {"overdue", s.overdue}};
}

nlohmann::json page_to_json(const SearchPage& p) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : p.items) items.push_back(summary_to_json(s));
  return {{"total", p.total}, {"items", std::move(items)}};
}

// ---------------------------------------------------------------------------
// Reports

Report make_report(std::string_view kind, const std::vector<ProcedureInstance>& instances,
                   const std::map<std::string, std::vector<AuditRecord>>& audits,
                   const std::vector<std::string>& types, Timestamp now) {
  Report r;
  r.kind = std::string(kind);
  if (kind == "counts_by_type_and_status") {
    r.columns = {"proc_type", "current", "archived"};
    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& t : types) counts[t];
    for (const auto& inst : instances) {
      auto& c = counts[inst.proc_type];
      (inst.status == ProcedureStatus::current ? c.first : c.second)++;
    }
    for (const auto& [t, c] : counts) r.rows.push_back({t, c.first, c.second});
  } else if (kind == "overdue_steps") {
    r.columns = {"instance", "proc_type", "step", "deadline", "overdue_seconds"};
    for (const auto& inst : instances) {
      const auto s = summarize(inst, now);
      if (!s.overdue) continue;
      r.rows.push_back({inst.id, inst.proc_type, *s.current_step, format_timestamp(*s.deadline),
                        (now - *s.deadline).count()});
    }
    std::sort(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) {
      return std::tie(a[3], a[0]) < std::tie(b[3], b[0]);
    });
  } else if (kind == "step_duration_summary") {
    r.columns = {"step", "completed", "mean_seconds", "min_seconds", "max_seconds"};
    struct Acc {
      long long n = 0, sum = 0, min = 0, max = 0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& inst : instances) {
      for (const auto& [id, st] : inst.step_states) {
        if (st.status != StepStatus::completed || !st.activated_at || !st.completed_at) continue;
        const long long d = (*st.completed_at - *st.activated_at).count();
        auto& a = acc[id];
        a.min = a.n ? std::min(a.min, d) : d;
        a.max = a.n ? std::max(a.max, d) : d;
        a.sum += d;
        ++a.n;
      }
    }
    for (const auto& [id, a] : acc) r.rows.push_back({id, a.n, a.sum / a.n, a.min, a.max});
  } else if (kind == "activity_by_role") {
    r.columns = {"role", "edits", "instances"};
    std::map<std::string, std::pair<long long, std::set<std::string>>> acc;
    for (const auto& [id, records] : audits) {
      for (const auto& rec : records) {
        if (rec.operation != "submit_edit" && rec.operation != "amend") continue;
        auto& a = acc[rec.role];
        ++a.first;
        a.second.insert(id);
      }
    }
    for (const auto& [role, a] : acc) r.rows.push_back({role, a.first, a.second.size()});
  } else {
    throw Error(ErrorKind::unknown_report, "unknown report '" + std::string(kind) + "'");
  }
  return r;
}

nlohmann::json report_to_json(const Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json o = nlohmann::json::object();
    for (std::size_t i = 0; i < r.columns.size(); ++i) o[r.columns[i]] = row[i];
    rows.push_back(std::move(o));
  }
  return {{"format_version", 1}, {"kind", r.kind}, {"columns", r.columns}, {"rows", std::move(rows)}};
}

std::string report_to_csv(const Report& r) {
  auto cell = [](const nlohmann::json& v) {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  std::string out;
  for (std::size_t i = 0; i < r.columns.size(); ++i) out += (i ? "," : "") + r.columns[i];
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell(row[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// FileStore

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
  for (const char* d : {"definitions", "cms", "instances", "audit"}) fs::create_directories(root_ / d);
}

StoredDocument FileStore::put_definitions(std::string_view text) {
  parse_process_set(text);  // throws with diagnostics
  std::lock_guard lock(mu_);
  const fs::path dir = root_ / "definitions";
  auto index = read_json(dir / "index.json", nlohmann::json::array());
  const std::string digest = sha256_hex(text);
  if (!index.empty() && index.back()["sha256"] == digest)
    return {index.back()["version"].get<int>(), digest, std::string(text)};
  const int version = static_cast<int>(index.size()) + 1;
  write_file_atomic(dir / version_file(version), text);
  index.push_back({{"version", version}, {"sha256", digest}});
  write_file_atomic(dir / "index.json", index.dump(2));
  return {version, digest, std::string(text)};
}

std::optional<StoredDocument> FileStore::definitions(std::optional<int> version) const {
  const fs::path dir = root_ / "definitions";
  const auto index = read_json(dir / "index.json", nlohmann::json::array());
  if (index.empty()) return std::nullopt;
  const int v = version.value_or(static_cast<int>(index.size()));
  if (v < 1 || v > static_cast<int>(index.size())) return std::nullopt;
  return StoredDocument{v, index[v - 1]["sha256"].get<std::string>(), read_text_file(dir / version_file(v))};
}

StoredCm FileStore::put_cm(const ConsolidatedModel& cm, std::optional<Strategy> strategy, int definitions_version) {
  const std::string text = serialize_cm(cm, strategy);
  std::lock_guard lock(mu_);
  const fs::path dir = root_ / "cms";
  auto index = read_json(dir / "index.json", nlohmann::json::array());
  const std::string id = "cm-" + sha256_hex(text).substr(0, 16);
  const std::string strat = strategy ? std::string(to_string(*strategy)) : "";
  if (!index.empty() && index.back()["id"] == id)
    return {{id, index.back()["version"].get<int>()}, definitions_version, strat, text};
  const int version = static_cast<int>(index.size()) + 1;
  write_file_atomic(dir / version_file(version), text);
  index.push_back({{"version", version}, {"id", id}, {"definitions_version", definitions_version}, {"strategy", strat}});
  write_file_atomic(dir / "index.json", index.dump(2));
  return {{id, version}, definitions_version, strat, text};
}

std::optional<StoredCm> FileStore::cm(std::optional<int> version) const {
  const fs::path dir = root_ / "cms";
  const auto index = read_json(dir / "index.json", nlohmann::json::array());
  if (index.empty()) return std::nullopt;
  const int v = version.value_or(static_cast<int>(index.size()));
  if (v < 1 || v > static_cast<int>(index.size())) return std::nullopt;
  const auto& e = index[v - 1];
  return StoredCm{{e["id"].get<std::string>(), v}, e["definitions_version"].get<int>(),
                  e["strategy"].get<std::string>(), read_text_file(dir / version_file(v))};
}

std::shared_ptr<const ConsolidatedModel> FileStore::load_cm(const CmRef& ref) const {
  const auto stored = cm(ref.version);
  if (!stored || stored->ref.id != ref.id)
    throw Error(ErrorKind::not_found, "consolidated model " + ref.id + " v" + std::to_string(ref.version));
  auto ps = std::make_shared<const ProcessSet>(parse_process_set(stored->text));
  return std::make_shared<const ConsolidatedModel>(model_from_order(ps, parse_cm_order(stored->text)));
}

std::string FileStore::next_instance_id() {
  std::lock_guard lock(mu_);
  long long max = 0;
  for (const auto& e : fs::directory_iterator(root_ / "instances")) {
    const std::string stem = e.path().stem().string();
    if (e.path().extension() != ".json" || !stem.starts_with("P-")) continue;
    long long n = 0;
    std::from_chars(stem.data() + 2, stem.data() + stem.size(), n);
    max = std::max(max, n);
  }
  // Reserve the id with an empty placeholder so concurrent callers differ.
  char buf[32];
  std::snprintf(buf, sizeof buf, "P-%06lld", max + 1);
  const int fd = ::open((root_ / "instances" / (std::string(buf) + ".json")).c_str(),
                        O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd >= 0) ::close(fd);
  return buf;
}

void FileStore::save(const Transition& t) {
  const ProcedureInstance& inst = t.instance;
  if (!safe_id(inst.id)) throw Error(ErrorKind::invalid_argument, "invalid instance id '" + inst.id + "'");
  std::lock_guard lock(mu_);
  const fs::path doc = root_ / "instances" / (inst.id + ".json");
  int stored = 0;
  if (fs::exists(doc) && fs::file_size(doc) > 0)
    stored = nlohmann::json::parse(read_text_file(doc)).at("version").get<int>();
  if (inst.version != stored + 1)
    throw Error(ErrorKind::version_conflict, "instance " + inst.id + " is at version " + std::to_string(stored) +
                                                 "; cannot store version " + std::to_string(inst.version));
  append_line(root_ / "audit" / (inst.id + ".log"), audit_to_json(t.audit).dump());
  write_file_atomic(doc, instance_to_json(inst).dump(2));
}

bool FileStore::has_instance(const std::string& id) const {
  if (!safe_id(id)) return false;
  const fs::path doc = root_ / "instances" / (id + ".json");
  return fs::exists(doc) && fs::file_size(doc) > 0;
}

ProcedureInstance FileStore::load_instance(const std::string& id) const {
  if (!has_instance(id)) throw Error(ErrorKind::not_found, "no procedure '" + id + "'");
  return instance_from_json(nlohmann::json::parse(read_text_file(root_ / "instances" / (id + ".json"))));
}

std::vector<std::string> FileStore::instance_ids() const {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root_ / "instances")) {
    if (e.path().extension() != ".json" || e.file_size() == 0) continue;
    ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<ProcedureInstance> FileStore::load_all() const {
  std::vector<ProcedureInstance> out;
  for (const auto& id : instance_ids()) out.push_back(load_instance(id));
  return out;
}

std::vector<AuditRecord> FileStore::audit(const std::string& id) const {
  if (!safe_id(id)) throw Error(ErrorKind::not_found, "no procedure '" + id + "'");
  std::vector<AuditRecord> out;
  const fs::path p = root_ / "audit" / (id + ".log");
  if (!fs::exists(p)) return out;
  std::istringstream in(read_text_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(audit_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::map<std::string, std::vector<AuditRecord>> FileStore::all_audits() const {
  std::map<std::string, std::vector<AuditRecord>> out;
  for (const auto& id : instance_ids()) out.emplace(id, audit(id));
  return out;
}

void FileStore::put_user(const std::string& name, const std::string& password, const std::set<std::string>& roles) {
  if (name.empty()) throw Error(ErrorKind::invalid_argument, "user name must not be empty");
  std::lock_guard lock(mu_);
  auto users = read_json(root_ / "users.json", nlohmann::json::object());
  const std::string salt = random_hex(16);
  users[name] = {{"salt", salt}, {"sha256", sha256_hex(salt + password)}, {"roles", roles}};
  write_file_atomic(root_ / "users.json", users.dump(2));
}

std::optional<User> FileStore::authenticate(const std::string& name, const std::string& password) const {
  const auto users = read_json(root_ / "users.json", nlohmann::json::object());
  if (!users.contains(name)) return std::nullopt;
  const auto& u = users[name];
  const std::string expected = u.at("sha256").get<std::string>();
  const std::string actual = sha256_hex(u.at("salt").get<std::string>() + password);
  // Compare without early exit.
  unsigned diff = expected.size() ^ actual.size();
  for (std::size_t i = 0; i < std::min(expected.size(), actual.size()); ++i)
    diff |= static_cast<unsigned>(expected[i] ^ actual[i]);
  if (diff != 0) return std::nullopt;
  return User{name, u.at("roles").get<std::set<std::string>>()};
}

}  // namespace procflow
