// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace procflow {

enum class ErrorKind {
  syntax,
  validation,
  inconsistent_anchor_order,
  missing_branch_condition,
  too_large,
  unknown_proc_type,
  ill_typed_params,
  unknown_step,
  unauthorized,
  not_editable,
  not_current_step,
  ill_typed_value,
  stale_version,
  archived,
  not_finished,
  not_found,
  version_conflict,
  invalid_query,
  unknown_report,
  unauthenticated,
  invalid_argument,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Source location attached to a definition-file problem. Line and column are
/// 1-based; 0 means the position is unknown.
struct Diagnostic {
  int line = 0;
  int column = 0;
  std::string message;

  std::string str() const;
  bool operator==(const Diagnostic&) const = default;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Error(ErrorKind kind, std::vector<Diagnostic> diagnostics);

  ErrorKind kind() const noexcept { return kind_; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  ErrorKind kind_;
  std::vector<Diagnostic> diagnostics_;
};

/// Two processes order a pair of common steps differently.
class InconsistentAnchorOrder : public Error {
 public:
  InconsistentAnchorOrder(std::string a, std::string b, std::string p, std::string q);

  const std::string& step_a() const noexcept { return a_; }
  const std::string& step_b() const noexcept { return b_; }
  const std::string& process_p() const noexcept { return p_; }
  const std::string& process_q() const noexcept { return q_; }

 private:
  std::string a_, b_, p_, q_;
};

}  // namespace procflow
