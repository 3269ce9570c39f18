// SPDX-License-Identifier: Apache-2.0
#include "procflow/conditions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "procflow/error.hpp"

namespace procflow {

namespace ast {

namespace {
bool deep_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}
}  // namespace

bool And::operator==(const And& o) const { return deep_equal(lhs, o.lhs) && deep_equal(rhs, o.rhs); }
bool Or::operator==(const Or& o) const { return deep_equal(lhs, o.lhs) && deep_equal(rhs, o.rhs); }
bool Not::operator==(const Not& o) const { return deep_equal(operand, o.operand); }

}  // namespace ast

namespace {

ExprPtr make(auto node) { return std::make_shared<const Expr>(Expr{std::move(node)}); }

// ---------------------------------------------------------------------------
// Lexing

enum class Tok { ident, integer, decimal, string, lparen, rparen, lbrace, rbrace, comma, cmp, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t pos = 0;  // 0-based offset
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  const Token& peek() {
    if (!peeked_) {
      next_ = scan();
      peeked_ = true;
    }
    return next_;
  }

  Token take() {
    peek();
    peeked_ = false;
    return next_;
  }

  // Raw characters up to (not including) `close`; used for date literals.
  std::string raw_until(char close) {
    peeked_ = false;
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != close) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::size_t position() const { return pos_; }

  [[noreturn]] void fail(std::size_t pos, const std::string& msg) const {
    throw Error(ErrorKind::syntax,
                std::vector<Diagnostic>{{1, static_cast<int>(pos) + 1, msg}});
  }

 private:
  Token scan() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
    Token t;
    t.pos = pos_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    auto is_alpha = [](char ch) {
      return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_';
    };
    auto is_digit = [](char ch) { return ch >= '0' && ch <= '9'; };
    if (is_alpha(c)) {
      std::size_t s = pos_;
      while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_]))) ++pos_;
      t.kind = Tok::ident;
      t.text = std::string(text_.substr(s, pos_ - s));
      return t;
    }
    if (is_digit(c) || (c == '-' && pos_ + 1 < text_.size() && is_digit(text_[pos_ + 1]))) {
      std::size_t s = pos_++;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
      t.kind = Tok::integer;
      if (pos_ + 1 < text_.size() && text_[pos_] == '.' && is_digit(text_[pos_ + 1])) {
        ++pos_;
        while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
        t.kind = Tok::decimal;
      }
      t.text = std::string(text_.substr(s, pos_ - s));
      return t;
    }
    if (c == '"') {
      ++pos_;
      std::string out;
      while (true) {
        if (pos_ >= text_.size()) fail(t.pos, "unterminated string literal");
        char ch = text_[pos_++];
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= text_.size()) fail(t.pos, "unterminated string literal");
          char e = text_[pos_++];
          switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            default: fail(pos_ - 2, std::string("unknown escape '\\") + e + "'");
          }
        } else {
          out += ch;
        }
      }
      t.kind = Tok::string;
      t.text = std::move(out);
      return t;
    }
    auto single = [&](Tok k) {
      t.kind = k;
      t.text = std::string(1, c);
      ++pos_;
      return t;
    };
    switch (c) {
      case '(': return single(Tok::lparen);
      case ')': return single(Tok::rparen);
      case '{': return single(Tok::lbrace);
      case '}': return single(Tok::rbrace);
      case ',': return single(Tok::comma);
      default: break;
    }
    const std::string_view rest = text_.substr(pos_);
    for (std::string_view op : {"==", "!=", "<=", ">=", "<", ">"}) {
      if (rest.substr(0, op.size()) == op) {
        t.kind = Tok::cmp;
        t.text = std::string(op);
        pos_ += op.size();
        return t;
      }
    }
    fail(pos_, std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token next_;
  bool peeked_ = false;
};

std::optional<CompareOp> compare_op(std::string_view s) {
  if (s == "==") return CompareOp::eq;
  if (s == "!=") return CompareOp::ne;
  if (s == "<") return CompareOp::lt;
  if (s == "<=") return CompareOp::le;
  if (s == ">") return CompareOp::gt;
  if (s == ">=") return CompareOp::ge;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
 public:
  Parser(std::string_view text, const ParamDecls* decls) : lex_(text), decls_(decls) {}

  ExprPtr parse() {
    ExprPtr e = parse_or();
    const Token& t = lex_.peek();
    if (t.kind != Tok::end) lex_.fail(t.pos, "unexpected '" + t.text + "'");
    return e;
  }

  std::optional<Operand> parse_operand_only() {
    Token t = lex_.take();
    auto op = operand_from(t);
    if (lex_.peek().kind != Tok::end) lex_.fail(lex_.peek().pos, "trailing input");
    return op;
  }

  Lexer& lexer() { return lex_; }

 private:
  bool at_keyword(std::string_view kw) {
    const Token& t = lex_.peek();
    return t.kind == Tok::ident && t.text == kw;
  }

  Token expect(Tok kind, std::string_view what) {
    Token t = lex_.take();
    if (t.kind != kind) {
      lex_.fail(t.pos, "expected " + std::string(what) +
                           (t.kind == Tok::end ? " at end of input" : ", found '" + t.text + "'"));
    }
    return t;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (at_keyword("or")) {
      lex_.take();
      lhs = make(ast::Or{lhs, parse_and()});
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (at_keyword("and")) {
      lex_.take();
      lhs = make(ast::And{lhs, parse_not()});
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (at_keyword("not")) {
      lex_.take();
      return make(ast::Not{parse_not()});
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::lparen) {
      lex_.take();
      ExprPtr e = parse_or();
      expect(Tok::rparen, "')'");
      return e;
    }
    if (at_keyword("proc_type")) {
      lex_.take();
      Token in = lex_.take();
      if (in.kind != Tok::ident || in.text != "in") lex_.fail(in.pos, "expected 'in' after proc_type");
      expect(Tok::lbrace, "'{'");
      ast::ProcTypeIn node;
      while (true) {
        Token id = expect(Tok::ident, "procedure type id");
        if (is_reserved_word(id.text)) lex_.fail(id.pos, "reserved word '" + id.text + "'");
        node.types.push_back(id.text);
        Token sep = lex_.take();
        if (sep.kind == Tok::rbrace) break;
        if (sep.kind != Tok::comma) lex_.fail(sep.pos, "expected ',' or '}'");
      }
      return make(std::move(node));
    }
    if (at_keyword("elapsed")) {
      lex_.take();
      expect(Tok::lparen, "'('");
      Token d = expect(Tok::ident, "ISO-8601 duration");
      auto dur = parse_duration(d.text);
      if (!dur) lex_.fail(d.pos, "invalid duration '" + d.text + "'");
      expect(Tok::comma, "','");
      Token anchor = expect(Tok::ident, "anchor (start or step id)");
      expect(Tok::rparen, "')'");
      return make(ast::Elapsed{*dur, anchor.text});
    }
    Token first = lex_.take();
    std::optional<Operand> lhs = operand_from(first);
    if (!lhs) lex_.fail(first.pos, first.kind == Tok::end ? "unexpected end of input"
                                                          : "unexpected '" + first.text + "'");
    const Token& maybe_op = lex_.peek();
    if (maybe_op.kind == Tok::cmp) {
      Token op = lex_.take();
      Token second = lex_.take();
      std::optional<Operand> rhs = operand_from(second);
      if (!rhs) lex_.fail(second.pos, "expected operand after '" + op.text + "'");
      return make(ast::Comparison{*compare_op(op.text), std::move(*lhs), std::move(*rhs)});
    }
    if (const auto* lit = std::get_if<Literal>(&*lhs)) {
      if (lit->kind == LiteralKind::boolean) return make(ast::ConstBool{std::get<bool>(lit->value)});
      lex_.fail(first.pos, "expected a boolean expression");
    }
    return make(std::get<ParamRef>(*lhs));
  }

  std::optional<Operand> operand_from(const Token& t) {
    switch (t.kind) {
      case Tok::integer: {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) lex_.fail(t.pos, "integer out of range");
        return Literal{LiteralKind::integer, v};
      }
      case Tok::decimal: {
        double v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) lex_.fail(t.pos, "decimal out of range");
        return Literal{LiteralKind::decimal, v};
      }
      case Tok::string: return Literal{LiteralKind::string, t.text};
      case Tok::ident: {
        if (t.text == "true" || t.text == "false") return Literal{LiteralKind::boolean, t.text == "true"};
        if (t.text == "date" && lex_.peek().kind == Tok::lparen) {
          lex_.take();
          const std::size_t at = lex_.position();
          std::string body = lex_.raw_until(')');
          auto d = parse_date(body);
          if (!d) lex_.fail(at, "invalid date '" + body + "'");
          expect(Tok::rparen, "')'");
          return Literal{LiteralKind::date, *d};
        }
        if (is_reserved_word(t.text)) lex_.fail(t.pos, "reserved word '" + t.text + "'");
        if (decls_ && !decls_->contains(t.text)) return Literal{LiteralKind::enum_label, t.text};
        return ParamRef{t.text};
      }
      default: return std::nullopt;
    }
  }

  Lexer lex_;
  const ParamDecls* decls_;
};

// ---------------------------------------------------------------------------
// Printing

int precedence(const Expr& e) {
  if (std::holds_alternative<ast::Or>(e.node)) return 1;
  if (std::holds_alternative<ast::And>(e.node)) return 2;
  if (std::holds_alternative<ast::Not>(e.node)) return 3;
  return 4;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string print_literal(const Literal& lit) {
  switch (lit.kind) {
    case LiteralKind::boolean: return std::get<bool>(lit.value) ? "true" : "false";
    case LiteralKind::integer: return std::to_string(std::get<std::int64_t>(lit.value));
    case LiteralKind::decimal: return format_decimal(std::get<double>(lit.value));
    case LiteralKind::string: return quote(std::get<std::string>(lit.value));
    case LiteralKind::date: return "date(" + format_date(std::get<Date>(lit.value)) + ")";
    case LiteralKind::enum_label: return std::get<std::string>(lit.value);
  }
  return {};
}

std::string print_operand(const Operand& op) {
  if (const auto* lit = std::get_if<Literal>(&op)) return print_literal(*lit);
  return std::get<ParamRef>(op).name;
}

std::string print_expr(const Expr& e);

std::string print_child(const ExprPtr& child, int parent_prec, bool right) {
  const int p = precedence(*child);
  const bool parens = right ? p <= parent_prec : p < parent_prec;
  std::string s = print_expr(*child);
  return parens ? "(" + s + ")" : s;
}

std::string print_expr(const Expr& e) {
  struct Visitor {
    std::string operator()(const ast::ConstBool& c) const { return c.value ? "true" : "false"; }
    std::string operator()(const ParamRef& r) const { return r.name; }
    std::string operator()(const ast::ProcTypeIn& p) const {
      std::string out = "proc_type in {";
      for (std::size_t i = 0; i < p.types.size(); ++i) {
        if (i) out += ", ";
        out += p.types[i];
      }
      return out + "}";
    }
    std::string operator()(const ast::Comparison& c) const {
      return print_operand(c.lhs) + " " + std::string(to_string(c.op)) + " " + print_operand(c.rhs);
    }
    std::string operator()(const ast::And& a) const {
      return print_child(a.lhs, 2, false) + " and " + print_child(a.rhs, 2, true);
    }
    std::string operator()(const ast::Or& o) const {
      return print_child(o.lhs, 1, false) + " or " + print_child(o.rhs, 1, true);
    }
    std::string operator()(const ast::Not& n) const {
      const bool parens = precedence(*n.operand) < 3;
      std::string s = print_expr(*n.operand);
      return parens ? "not (" + s + ")" : "not " + s;
    }
    std::string operator()(const ast::Elapsed& el) const {
      return "elapsed(" + format_duration(el.duration) + ", " + el.anchor + ")";
    }
  };
  return std::visit(Visitor{}, e.node);
}

// ---------------------------------------------------------------------------
// Type checking

struct OperandType {
  const KindSpec* param = nullptr;  // set for parameter references
  const Literal* literal = nullptr;
  std::string describe() const {
    if (param) return kind_name(*param);
    switch (literal->kind) {
      case LiteralKind::boolean: return "boolean literal";
      case LiteralKind::integer: return "integer literal";
      case LiteralKind::decimal: return "decimal literal";
      case LiteralKind::string: return "string literal";
      case LiteralKind::date: return "date literal";
      case LiteralKind::enum_label: return "label '" + std::get<std::string>(literal->value) + "'";
    }
    return {};
  }
};

[[noreturn]] void type_error(const std::string& msg) {
  throw Error(ErrorKind::validation, std::vector<Diagnostic>{{0, 0, "type error: " + msg}});
}

OperandType operand_type(const Operand& op, const ParamDecls& decls) {
  if (const auto* ref = std::get_if<ParamRef>(&op)) {
    auto it = decls.find(ref->name);
    if (it == decls.end()) type_error("unknown parameter '" + ref->name + "'");
    return {&it->second, nullptr};
  }
  return {nullptr, &std::get<Literal>(op)};
}

bool orderable(ValueKind k) { return k != ValueKind::boolean && k != ValueKind::enumeration; }

void check_comparison(const ast::Comparison& c, const ParamDecls& decls) {
  OperandType l = operand_type(c.lhs, decls);
  OperandType r = operand_type(c.rhs, decls);
  const bool ordering = c.op != CompareOp::eq && c.op != CompareOp::ne;
  auto mismatch = [&] {
    type_error("cannot compare " + l.describe() + " with " + r.describe());
  };
  if (l.param && r.param) {
    if (!(*l.param == *r.param)) mismatch();
    if (ordering && !orderable(l.param->kind)) mismatch();
    return;
  }
  if (!l.param && !r.param) {
    auto numeric = [](LiteralKind k) { return k == LiteralKind::integer || k == LiteralKind::decimal; };
    const LiteralKind a = l.literal->kind, b = r.literal->kind;
    if (a == LiteralKind::enum_label || b == LiteralKind::enum_label) {
      type_error("unknown parameter or enum label '" +
                 std::get<std::string>((a == LiteralKind::enum_label ? l : r).literal->value) + "'");
    }
    if (!(a == b || (numeric(a) && numeric(b)))) mismatch();
    if (ordering && a == LiteralKind::boolean) mismatch();
    return;
  }
  const OperandType& p = l.param ? l : r;
  const OperandType& lit = l.param ? r : l;
  if (!literal_as(*lit.literal, *p.param)) {
    if (lit.literal->kind == LiteralKind::enum_label && p.param->kind != ValueKind::enumeration) {
      type_error("unknown parameter or enum label '" + std::get<std::string>(lit.literal->value) +
                 "'");
    }
    mismatch();
  }
  if (ordering && !orderable(p.param->kind)) mismatch();
}

void check_expr(const Expr& e, const ParamDecls& decls) {
  struct Visitor {
    const ParamDecls& decls;
    void operator()(const ast::ConstBool&) const {}
    void operator()(const ParamRef& r) const {
      auto it = decls.find(r.name);
      if (it == decls.end()) type_error("unknown parameter '" + r.name + "'");
      if (it->second.kind != ValueKind::boolean)
        type_error("parameter '" + r.name + "' of kind " + kind_name(it->second) +
                   " used as a boolean");
    }
    void operator()(const ast::ProcTypeIn&) const {}
    void operator()(const ast::Comparison& c) const { check_comparison(c, decls); }
    void operator()(const ast::And& a) const {
      check_expr(*a.lhs, decls);
      check_expr(*a.rhs, decls);
    }
    void operator()(const ast::Or& o) const {
      check_expr(*o.lhs, decls);
      check_expr(*o.rhs, decls);
    }
    void operator()(const ast::Not& n) const { check_expr(*n.operand, decls); }
    void operator()(const ast::Elapsed&) const {}
  };
  std::visit(Visitor{decls}, e.node);
}

// ---------------------------------------------------------------------------
// Evaluation

std::optional<Value> resolve(const Operand& op, const ParamEnv& env) {
  if (const auto* lit = std::get_if<Literal>(&op)) return lit->value;
  auto it = env.values.find(std::get<ParamRef>(op).name);
  if (it == env.values.end()) return std::nullopt;
  return it->second;
}

std::optional<long double> as_number(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<long double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return static_cast<long double>(*d);
  if (const auto* m = std::get_if<Money>(&v)) return static_cast<long double>(m->cents) / 100.0L;
  return std::nullopt;
}

template <typename T>
bool apply(CompareOp op, const T& a, const T& b) {
  switch (op) {
    case CompareOp::eq: return a == b;
    case CompareOp::ne: return a != b;
    case CompareOp::lt: return a < b;
    case CompareOp::le: return a <= b;
    case CompareOp::gt: return a > b;
    case CompareOp::ge: return a >= b;
  }
  return false;
}

bool eval_comparison(const ast::Comparison& c, const ParamEnv& env) {
  auto a = resolve(c.lhs, env);
  auto b = resolve(c.rhs, env);
  if (!a || !b) return false;
  // Exact comparison for two money amounts or two integers.
  if (std::holds_alternative<Money>(*a) && std::holds_alternative<Money>(*b))
    return apply(c.op, std::get<Money>(*a).cents, std::get<Money>(*b).cents);
  if (std::holds_alternative<std::int64_t>(*a) && std::holds_alternative<std::int64_t>(*b))
    return apply(c.op, std::get<std::int64_t>(*a), std::get<std::int64_t>(*b));
  auto na = as_number(*a);
  auto nb = as_number(*b);
  if (na && nb) return apply(c.op, *na, *nb);
  if (a->index() != b->index()) return false;
  if (const auto* s = std::get_if<std::string>(&*a)) return apply(c.op, *s, std::get<std::string>(*b));
  if (const auto* d = std::get_if<Date>(&*a)) return apply(c.op, *d, std::get<Date>(*b));
  if (const auto* x = std::get_if<bool>(&*a)) {
    if (c.op == CompareOp::eq) return *x == std::get<bool>(*b);
    if (c.op == CompareOp::ne) return *x != std::get<bool>(*b);
  }
  return false;
}

bool eval_expr(const Expr& e, const ParamEnv& env) {
  struct Visitor {
    const ParamEnv& env;
    bool operator()(const ast::ConstBool& c) const { return c.value; }
    bool operator()(const ParamRef& r) const {
      auto it = env.values.find(r.name);
      if (it == env.values.end()) return false;
      const auto* b = std::get_if<bool>(&it->second);
      return b && *b;
    }
    bool operator()(const ast::ProcTypeIn& p) const {
      return std::find(p.types.begin(), p.types.end(), env.proc_type) != p.types.end();
    }
    bool operator()(const ast::Comparison& c) const { return eval_comparison(c, env); }
    bool operator()(const ast::And& a) const { return eval_expr(*a.lhs, env) && eval_expr(*a.rhs, env); }
    bool operator()(const ast::Or& o) const { return eval_expr(*o.lhs, env) || eval_expr(*o.rhs, env); }
    bool operator()(const ast::Not& n) const { return !eval_expr(*n.operand, env); }
    bool operator()(const ast::Elapsed& el) const {
      Timestamp anchor = env.started_at;
      if (el.anchor != "start") {
        auto it = env.timeline.find(el.anchor);
        if (it == env.timeline.end()) return false;
        anchor = it->second;
      }
      return env.clock >= anchor + el.duration;
    }
  };
  return std::visit(Visitor{env}, e.node);
}

template <typename F>
void walk(const Expr& e, F&& f) {
  f(e);
  if (const auto* a = std::get_if<ast::And>(&e.node)) {
    walk(*a->lhs, f);
    walk(*a->rhs, f);
  } else if (const auto* o = std::get_if<ast::Or>(&e.node)) {
    walk(*o->lhs, f);
    walk(*o->rhs, f);
  } else if (const auto* n = std::get_if<ast::Not>(&e.node)) {
    walk(*n->operand, f);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Condition::Condition() : root_(make(ast::ConstBool{true})) {}
Condition::Condition(ExprPtr root) : root_(std::move(root)) {}

Condition Condition::constant(bool value) { return Condition(make(ast::ConstBool{value})); }
Condition Condition::param(std::string name) { return Condition(make(ParamRef{std::move(name)})); }
Condition Condition::proc_type_in(std::vector<std::string> types) {
  return Condition(make(ast::ProcTypeIn{std::move(types)}));
}
Condition Condition::compare(CompareOp op, Operand lhs, Operand rhs) {
  return Condition(make(ast::Comparison{op, std::move(lhs), std::move(rhs)}));
}
Condition Condition::elapsed(Seconds duration, std::string anchor) {
  return Condition(make(ast::Elapsed{duration, std::move(anchor)}));
}
Condition Condition::operator&&(const Condition& rhs) const {
  return Condition(make(ast::And{root_, rhs.root_}));
}
Condition Condition::operator||(const Condition& rhs) const {
  return Condition(make(ast::Or{root_, rhs.root_}));
}
Condition Condition::operator!() const { return Condition(make(ast::Not{root_})); }

bool Condition::is_constant_true() const {
  const auto* c = std::get_if<ast::ConstBool>(&root_->node);
  return c && c->value;
}

bool Condition::operator==(const Condition& other) const {
  return root_ == other.root_ || *root_ == *other.root_;
}

Condition parse_condition(std::string_view text, const ParamDecls* decls) {
  Parser parser(text, decls);
  Condition c(parser.parse());
  if (decls) typecheck_condition(c, *decls);
  return c;
}

Condition parse_condition_unchecked(std::string_view text, const ParamDecls& decls) {
  Parser parser(text, &decls);
  return Condition(parser.parse());
}

std::string print_condition(const Condition& c) { return print_expr(c.expr()); }

void typecheck_condition(const Condition& c, const ParamDecls& decls) { check_expr(c.expr(), decls); }

bool eval_condition(const Condition& c, const ParamEnv& env) { return eval_expr(c.expr(), env); }

std::set<std::string> free_params(const Condition& c) {
  std::set<std::string> out;
  walk(c.expr(), [&](const Expr& e) {
    if (const auto* r = std::get_if<ParamRef>(&e.node)) out.insert(r->name);
    if (const auto* cmp = std::get_if<ast::Comparison>(&e.node)) {
      for (const Operand* op : {&cmp->lhs, &cmp->rhs}) {
        if (const auto* r = std::get_if<ParamRef>(op)) out.insert(r->name);
      }
    }
  });
  return out;
}

std::set<std::string> referenced_types(const Condition& c) {
  std::set<std::string> out;
  walk(c.expr(), [&](const Expr& e) {
    if (const auto* p = std::get_if<ast::ProcTypeIn>(&e.node)) out.insert(p->types.begin(), p->types.end());
  });
  return out;
}

std::set<std::string> referenced_anchors(const Condition& c) {
  std::set<std::string> out;
  walk(c.expr(), [&](const Expr& e) {
    if (const auto* el = std::get_if<ast::Elapsed>(&e.node)) out.insert(el->anchor);
  });
  return out;
}

ValueExpr parse_value_expr(std::string_view text) {
  Parser parser(text, nullptr);
  Lexer& lex = parser.lexer();
  const Token& t = lex.peek();
  if (t.kind == Tok::ident && t.text == "field") {
    lex.take();
    Token open = lex.take();
    if (open.kind != Tok::lparen) lex.fail(open.pos, "expected '(' after field");
    Token name = lex.take();
    if (name.kind != Tok::ident) lex.fail(name.pos, "expected field name");
    Token close = lex.take();
    if (close.kind != Tok::rparen) lex.fail(close.pos, "expected ')'");
    if (lex.peek().kind != Tok::end) lex.fail(lex.peek().pos, "trailing input");
    return FieldRef{name.text};
  }
  auto op = parser.parse_operand_only();
  if (!op) lex.fail(0, "expected a literal or field(name)");
  if (const auto* ref = std::get_if<ParamRef>(&*op)) {
    // Bare identifiers in outputs are enum labels.
    return Literal{LiteralKind::enum_label, ref->name};
  }
  return std::get<Literal>(*op);
}

std::string print_value_expr(const ValueExpr& e) {
  if (const auto* f = std::get_if<FieldRef>(&e)) return "field(" + f->name + ")";
  return print_literal(std::get<Literal>(e));
}

std::optional<Value> literal_as(const Literal& lit, const KindSpec& kind) {
  switch (lit.kind) {
    case LiteralKind::boolean:
      if (kind.kind == ValueKind::boolean) return lit.value;
      break;
    case LiteralKind::integer: {
      const auto v = std::get<std::int64_t>(lit.value);
      if (kind.kind == ValueKind::integer) return lit.value;
      if (kind.kind == ValueKind::decimal) return Value{static_cast<double>(v)};
      if (kind.kind == ValueKind::money) return Value{Money{v * 100}};
      break;
    }
    case LiteralKind::decimal: {
      const auto v = std::get<double>(lit.value);
      if (kind.kind == ValueKind::decimal) return lit.value;
      if (kind.kind == ValueKind::money) {
        const double cents = v * 100.0;
        const double r = std::round(cents);
        if (std::fabs(cents - r) < 1e-6) return Value{Money{static_cast<std::int64_t>(r)}};
      }
      break;
    }
    case LiteralKind::string:
      if (kind.kind == ValueKind::text || kind.kind == ValueKind::reference) return lit.value;
      break;
    case LiteralKind::date:
      if (kind.kind == ValueKind::date) return lit.value;
      break;
    case LiteralKind::enum_label:
      if (value_matches(lit.value, kind) && kind.kind == ValueKind::enumeration) return lit.value;
      break;
  }
  return std::nullopt;
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "==";
}

}  // namespace procflow
