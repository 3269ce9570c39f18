// SPDX-License-Identifier: Apache-2.0
#include "procflow/value.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace procflow {

namespace {

constexpr std::array<std::string_view, 10> kReserved = {
    "and", "or", "not", "in", "true", "false", "proc_type", "elapsed", "date", "field"};

template <typename Int>
bool parse_fixed_digits(std::string_view text, std::size_t pos, std::size_t len, Int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{} && ptr == text.data() + pos + len;
}

std::string pad2(unsigned v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u", v);
  return buf;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(text.front())) return false;
  return std::all_of(text.begin(), text.end(),
                     [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

bool is_reserved_word(std::string_view text) {
  return std::find(kReserved.begin(), kReserved.end(), text) != kReserved.end();
}

std::string kind_name(const KindSpec& kind) {
  switch (kind.kind) {
    case ValueKind::text: return "text";
    case ValueKind::integer: return "integer";
    case ValueKind::decimal: return "decimal";
    case ValueKind::date: return "date";
    case ValueKind::boolean: return "boolean";
    case ValueKind::money: return "money";
    case ValueKind::reference: return "reference";
    case ValueKind::enumeration: {
      std::string out = "enum(";
      for (std::size_t i = 0; i < kind.enum_values.size(); ++i) {
        if (i) out += ", ";
        out += kind.enum_values[i];
      }
      return out + ")";
    }
  }
  return "text";
}

std::optional<KindSpec> parse_kind(std::string_view text) {
  const std::string t = trim(text);
  static const std::map<std::string, ValueKind, std::less<>> simple = {
      {"text", ValueKind::text},       {"integer", ValueKind::integer},
      {"decimal", ValueKind::decimal}, {"date", ValueKind::date},
      {"boolean", ValueKind::boolean}, {"money", ValueKind::money},
      {"reference", ValueKind::reference}};
  if (auto it = simple.find(t); it != simple.end()) return KindSpec{it->second, {}};
  if (t.rfind("enum(", 0) != 0 || t.back() != ')') return std::nullopt;
  KindSpec spec{ValueKind::enumeration, {}};
  std::string_view body(t);
  body = body.substr(5, body.size() - 6);
  while (!body.empty()) {
    auto comma = body.find(',');
    std::string item = trim(body.substr(0, comma));
    if (!is_identifier(item) || is_reserved_word(item)) return std::nullopt;
    if (std::find(spec.enum_values.begin(), spec.enum_values.end(), item) != spec.enum_values.end())
      return std::nullopt;
    spec.enum_values.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  if (spec.enum_values.empty()) return std::nullopt;
  return spec;
}

bool value_matches(const Value& value, const KindSpec& kind) {
  switch (kind.kind) {
    case ValueKind::text:
    case ValueKind::reference: return std::holds_alternative<std::string>(value);
    case ValueKind::enumeration: {
      const auto* s = std::get_if<std::string>(&value);
      return s && std::find(kind.enum_values.begin(), kind.enum_values.end(), *s) !=
                      kind.enum_values.end();
    }
    case ValueKind::integer: return std::holds_alternative<std::int64_t>(value);
    case ValueKind::decimal: return std::holds_alternative<double>(value);
    case ValueKind::date: return std::holds_alternative<Date>(value);
    case ValueKind::boolean: return std::holds_alternative<bool>(value);
    case ValueKind::money: return std::holds_alternative<Money>(value);
  }
  return false;
}

std::string value_to_text(const Value& value) {
  struct Visitor {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_decimal(d); }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(Date d) const { return format_date(d); }
    std::string operator()(Money m) const { return format_money(m); }
  };
  return std::visit(Visitor{}, value);
}

nlohmann::json value_to_json(const Value& value) {
  struct Visitor {
    nlohmann::json operator()(bool b) const { return b; }
    nlohmann::json operator()(std::int64_t i) const { return i; }
    nlohmann::json operator()(double d) const { return d; }
    nlohmann::json operator()(const std::string& s) const { return s; }
    nlohmann::json operator()(Date d) const { return format_date(d); }
    nlohmann::json operator()(Money m) const { return format_money(m); }
  };
  return std::visit(Visitor{}, value);
}

std::optional<Value> value_from_json(const nlohmann::json& j, const KindSpec& kind) {
  switch (kind.kind) {
    case ValueKind::text:
    case ValueKind::reference:
      if (j.is_string()) return Value{j.get<std::string>()};
      return std::nullopt;
    case ValueKind::enumeration:
      if (j.is_string()) {
        Value v{j.get<std::string>()};
        if (value_matches(v, kind)) return v;
      }
      return std::nullopt;
    case ValueKind::integer:
      if (j.is_number_integer()) return Value{j.get<std::int64_t>()};
      return std::nullopt;
    case ValueKind::decimal:
      if (j.is_number()) return Value{j.get<double>()};
      return std::nullopt;
    case ValueKind::boolean:
      if (j.is_boolean()) return Value{j.get<bool>()};
      return std::nullopt;
    case ValueKind::date:
      if (j.is_string()) {
        if (auto d = parse_date(j.get<std::string>())) return Value{*d};
      }
      return std::nullopt;
    case ValueKind::money:
      if (j.is_string()) {
        if (auto m = parse_money(j.get<std::string>())) return Value{*m};
      } else if (j.is_number_integer()) {
        return Value{Money{j.get<std::int64_t>() * 100}};
      } else if (j.is_number_float()) {
        double cents = j.get<double>() * 100.0;
        double rounded = std::round(cents);
        if (std::fabs(cents - rounded) < 1e-6) return Value{Money{static_cast<std::int64_t>(rounded)}};
      }
      return std::nullopt;
  }
  return std::nullopt;
}

nlohmann::json encode_value(const Value& value) {
  if (const auto* d = std::get_if<Date>(&value)) return {{"date", format_date(*d)}};
  if (const auto* m = std::get_if<Money>(&value)) return {{"money", format_money(*m)}};
  return value_to_json(value);
}

Value decode_value(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object()) {
    if (auto it = j.find("date"); it != j.end()) {
      if (auto d = parse_date(it->get<std::string>())) return *d;
    }
    if (auto it = j.find("money"); it != j.end()) {
      if (auto m = parse_money(it->get<std::string>())) return *m;
    }
  }
  throw std::invalid_argument("undecodable value: " + j.dump());
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  return std::to_string(static_cast<int>(ymd.year())) + "-" +
         pad2(static_cast<unsigned>(ymd.month())) + "-" + pad2(static_cast<unsigned>(ymd.day()));
}

std::optional<Date> parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!parse_fixed_digits(text, 0, 4, y) || !parse_fixed_digits(text, 5, 2, m) ||
      !parse_fixed_digits(text, 8, 2, d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::hh_mm_ss hms{t - day};
  return format_date(day) + "T" + pad2(static_cast<unsigned>(hms.hours().count())) + ":" +
         pad2(static_cast<unsigned>(hms.minutes().count())) + ":" +
         pad2(static_cast<unsigned>(hms.seconds().count())) + "Z";
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  if (text.size() == 10) {
    if (auto d = parse_date(text)) return Timestamp{*d};
    return std::nullopt;
  }
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
      text[19] != 'Z')
    return std::nullopt;
  auto day = parse_date(text.substr(0, 10));
  unsigned h = 0, m = 0, s = 0;
  if (!day || !parse_fixed_digits(text, 11, 2, h) || !parse_fixed_digits(text, 14, 2, m) ||
      !parse_fixed_digits(text, 17, 2, s))
    return std::nullopt;
  if (h > 23 || m > 59 || s > 59) return std::nullopt;
  return Timestamp{*day} + std::chrono::hours{h} + std::chrono::minutes{m} + Seconds{s};
}

std::optional<Seconds> parse_duration(std::string_view text) {
  if (text.size() < 2 || text[0] != 'P') return std::nullopt;
  std::size_t i = 1;
  bool in_time = false;
  bool any = false;
  char last_unit = 0;
  std::int64_t total = 0;
  // Units must appear in canonical order, each at most once.
  const std::string_view date_units = "WD";
  const std::string_view time_units = "HMS";
  while (i < text.size()) {
    if (text[i] == 'T') {
      if (in_time) return std::nullopt;
      in_time = true;
      last_unit = 0;
      ++i;
      if (i == text.size()) return std::nullopt;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (start == i || i == text.size()) return std::nullopt;
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + i, n);
    if (ec != std::errc{}) return std::nullopt;
    const char unit = text[i++];
    const std::string_view allowed = in_time ? time_units : date_units;
    auto pos = allowed.find(unit);
    if (pos == std::string_view::npos) return std::nullopt;
    if (last_unit && allowed.find(last_unit) >= pos) return std::nullopt;
    last_unit = unit;
    std::int64_t scale = 1;
    if (!in_time) scale = unit == 'W' ? 7 * 86400 : 86400;
    else scale = unit == 'H' ? 3600 : unit == 'M' ? 60 : 1;
    total += n * scale;
    any = true;
  }
  if (!any) return std::nullopt;
  return Seconds{total};
}

std::string format_duration(Seconds d) {
  std::int64_t s = d.count();
  if (s == 0) return "PT0S";
  std::string out = "P";
  const std::int64_t days = s / 86400;
  s %= 86400;
  if (days) out += std::to_string(days) + "D";
  if (s) {
    out += "T";
    if (s / 3600) out += std::to_string(s / 3600) + "H";
    if ((s % 3600) / 60) out += std::to_string((s % 3600) / 60) + "M";
    if (s % 60) out += std::to_string(s % 60) + "S";
  }
  return out;
}

std::optional<Money> parse_money(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 2 || (dot != std::string_view::npos && frac.empty()))
    return std::nullopt;
  std::int64_t units = 0, minor = 0;
  if (!parse_fixed_digits(whole, 0, whole.size(), units)) return std::nullopt;
  if (!frac.empty()) {
    if (!parse_fixed_digits(frac, 0, frac.size(), minor)) return std::nullopt;
    if (frac.size() == 1) minor *= 10;
  }
  std::int64_t cents = units * 100 + minor;
  return Money{negative ? -cents : cents};
}

std::string format_money(Money m) {
  std::int64_t c = m.cents;
  std::string sign = c < 0 ? "-" : "";
  if (c < 0) c = -c;
  return sign + std::to_string(c / 100) + "." + pad2(static_cast<unsigned>(c % 100));
}

std::string format_decimal(double v) {
  char buf[400];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  std::string out = ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
  if (out.find('.') == std::string::npos) out += ".0";
  return out;
}

}  // namespace procflow
