// SPDX-License-Identifier: Apache-2.0
#include "procflow/error.hpp"

namespace procflow {

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += '\n';
    out += d.str();
  }
  return out;
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::syntax: return "syntax_error";
    case ErrorKind::validation: return "validation_error";
    case ErrorKind::inconsistent_anchor_order: return "inconsistent_anchor_order";
    case ErrorKind::missing_branch_condition: return "missing_branch_condition";
    case ErrorKind::too_large: return "too_large";
    case ErrorKind::unknown_proc_type: return "unknown_proc_type";
    case ErrorKind::ill_typed_params: return "ill_typed_params";
    case ErrorKind::unknown_step: return "unknown_step";
    case ErrorKind::unauthorized: return "unauthorized";
    case ErrorKind::not_editable: return "not_editable";
    case ErrorKind::not_current_step: return "not_current_step";
    case ErrorKind::ill_typed_value: return "ill_typed_value";
    case ErrorKind::stale_version: return "stale_version";
    case ErrorKind::archived: return "archived";
    case ErrorKind::not_finished: return "not_finished";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::version_conflict: return "version_conflict";
    case ErrorKind::invalid_query: return "invalid_query";
    case ErrorKind::unknown_report: return "unknown_report";
    case ErrorKind::unauthenticated: return "unauthenticated";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io_error";
  }
  return "unknown";
}

std::string Diagnostic::str() const {
  if (line <= 0) return message;
  return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
}

Error::Error(ErrorKind kind, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)),
      kind_(kind),
      diagnostics_(std::move(diagnostics)) {}

InconsistentAnchorOrder::InconsistentAnchorOrder(std::string a, std::string b, std::string p,
                                                 std::string q)
    : Error(ErrorKind::inconsistent_anchor_order,
            "common steps " + a + " and " + b + " are ordered " + a + " < " + b + " in process " +
                p + " but " + b + " < " + a + " in process " + q),
      a_(std::move(a)),
      b_(std::move(b)),
      p_(std::move(p)),
      q_(std::move(q)) {}

}  // namespace procflow
