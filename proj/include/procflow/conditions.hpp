// SPDX-License-Identifier: Apache-2.0
//
// Implementation-condition language. A condition is a boolean expression over
// declared procedure parameters, the ambient procedure type and elapsed time.
//
//   expr       := or_expr
//   or_expr    := and_expr ("or" and_expr)*
//   and_expr   := not_expr ("and" not_expr)*
//   not_expr   := "not" not_expr | primary
//   primary    := "(" expr ")"
//               | "proc_type" "in" "{" ident ("," ident)* "}"
//               | "elapsed" "(" duration "," ident ")"
//               | operand (cmp_op operand)?
//   operand    := "true" | "false" | integer | decimal | string
//               | "date(" YYYY-MM-DD ")" | ident
//   cmp_op     := "==" | "!=" | "<" | "<=" | ">" | ">="
//
// A bare identifier is a parameter reference when it names a declared
// parameter and an enum label otherwise. Without declarations every bare
// identifier is read as a parameter reference.
#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "procflow/value.hpp"

namespace procflow {

enum class CompareOp { eq, ne, lt, le, gt, ge };
enum class LiteralKind { boolean, integer, decimal, string, date, enum_label };

struct Literal {
  LiteralKind kind = LiteralKind::boolean;
  Value value;
  bool operator==(const Literal&) const = default;
};

struct ParamRef {
  std::string name;
  bool operator==(const ParamRef&) const = default;
};

using Operand = std::variant<Literal, ParamRef>;

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace ast {

struct ConstBool {
  bool value = true;
  bool operator==(const ConstBool&) const = default;
};
struct ProcTypeIn {
  std::vector<std::string> types;
  bool operator==(const ProcTypeIn&) const = default;
};
struct Comparison {
  CompareOp op = CompareOp::eq;
  Operand lhs;
  Operand rhs;
  bool operator==(const Comparison&) const = default;
};
struct And {
  ExprPtr lhs, rhs;
  bool operator==(const And& o) const;
};
struct Or {
  ExprPtr lhs, rhs;
  bool operator==(const Or& o) const;
};
struct Not {
  ExprPtr operand;
  bool operator==(const Not& o) const;
};
/// True once `duration` has passed since the anchor; the anchor is `start`
/// (procedure creation) or the id of a step whose completion time is used.
struct Elapsed {
  Seconds duration{0};
  std::string anchor;
  bool operator==(const Elapsed&) const = default;
};

}  // namespace ast

struct Expr {
  std::variant<ast::ConstBool, ParamRef, ast::ProcTypeIn, ast::Comparison, ast::And, ast::Or,
               ast::Not, ast::Elapsed>
      node;
  bool operator==(const Expr&) const = default;
};

/// Immutable condition value with structural equality.
class Condition {
 public:
  Condition();  // constant true
  explicit Condition(ExprPtr root);

  static Condition constant(bool value);
  static Condition param(std::string name);
  static Condition proc_type_in(std::vector<std::string> types);
  static Condition compare(CompareOp op, Operand lhs, Operand rhs);
  static Condition elapsed(Seconds duration, std::string anchor);
  Condition operator&&(const Condition& rhs) const;
  Condition operator||(const Condition& rhs) const;
  Condition operator!() const;

  const Expr& expr() const { return *root_; }
  const ExprPtr& root() const { return root_; }
  bool is_constant_true() const;

  bool operator==(const Condition& other) const;

 private:
  ExprPtr root_;
};

struct ParamEnv {
  std::map<std::string, Value> values;  // absent = unset
  std::string proc_type;
  Timestamp clock{};
  Timestamp started_at{};
  std::map<std::string, Timestamp> timeline;  // step id -> completion time

  bool operator==(const ParamEnv&) const = default;
};

/// Throws Error(syntax) with the column of the offending token, or
/// Error(validation) when `decls` is given and the expression is ill-typed.
Condition parse_condition(std::string_view text, const ParamDecls* decls = nullptr);

/// Resolves bare identifiers against `decls` like parse_condition but skips
/// the type check (callers that collect diagnostics check types separately).
Condition parse_condition_unchecked(std::string_view text, const ParamDecls& decls);

std::string print_condition(const Condition& c);

/// Re-checks types of an already-built condition against declarations.
void typecheck_condition(const Condition& c, const ParamDecls& decls);

/// Total: comparisons and references touching an unset parameter are false.
bool eval_condition(const Condition& c, const ParamEnv& env);

std::set<std::string> free_params(const Condition& c);

/// Type ids named in `proc_type in {...}` clauses and anchors of `elapsed`.
std::set<std::string> referenced_types(const Condition& c);
std::set<std::string> referenced_anchors(const Condition& c);

// Output value expressions: a literal or `field(name)`.
struct FieldRef {
  std::string name;
  bool operator==(const FieldRef&) const = default;
};
using ValueExpr = std::variant<Literal, FieldRef>;

ValueExpr parse_value_expr(std::string_view text);
std::string print_value_expr(const ValueExpr& e);

/// Converts a literal to a value of the target kind, or nullopt when the
/// literal cannot represent it (e.g. a decimal into an integer parameter).
std::optional<Value> literal_as(const Literal& lit, const KindSpec& kind);

std::string_view to_string(CompareOp op);

}  // namespace procflow
