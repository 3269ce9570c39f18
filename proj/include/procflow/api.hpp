// SPDX-License-Identifier: Apache-2.0
//
// HTTP service over a FileStore.
//
//   POST   /login                         {user, password} -> {token, roles, expires_at}
//   DELETE /session
//   GET    /definitions                   current definition document (YAML)
//   PUT    /definitions                   administrator only
//   POST   /cm/build?strategy=            administrator only
//   POST   /cm/verify                     body: CM document; 422 + verdict if incorrect
//   GET    /cm/graph.dot
//   POST   /procedures                    {proc_type, params}
//   GET    /procedures?<filters>          see parse_search_query
//   GET    /procedures/{id}/view
//   POST   /procedures/{id}/steps/{sid}   {version, values}
//   POST   /procedures/{id}/archive       {override}
//   GET    /reports/{kind}?format=json|csv
//
// Requests carry `Authorization: Bearer <token>` and choose one of the
// session's roles with the `role` query parameter or the `X-Role` header.
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "procflow/runtime.hpp"

namespace procflow {

struct ServiceOptions {
  std::filesystem::path data_dir;
  std::function<Timestamp()> clock;  // defaults to the system clock
  RuntimeOptions runtime;
  Seconds session_ttl{8 * 3600};
};

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread; returns the bound port
  /// (pass 0 for any free port). Throws Error(io) if binding fails.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop() is called.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error kind.
int http_status(ErrorKind kind);

}  // namespace procflow
