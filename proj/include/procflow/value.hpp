// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace procflow {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;
using Date = std::chrono::sys_days;

/// Fixed-point currency amount in minor units (two decimal places).
struct Money {
  std::int64_t cents = 0;
  auto operator<=>(const Money&) const = default;
};

enum class ValueKind { text, integer, decimal, date, boolean, enumeration, money, reference };

/// A declared value kind; `enum_values` is only meaningful for enumerations.
struct KindSpec {
  ValueKind kind = ValueKind::text;
  std::vector<std::string> enum_values;

  bool operator==(const KindSpec&) const = default;
};

using Value = std::variant<bool, std::int64_t, double, std::string, Date, Money>;

/// Parameter declarations shared by every process of a process set.
using ParamDecls = std::map<std::string, KindSpec>;

std::string kind_name(const KindSpec& kind);
std::optional<KindSpec> parse_kind(std::string_view text);

bool value_matches(const Value& value, const KindSpec& kind);
std::string value_to_text(const Value& value);

// Typed JSON mapping used on the wire: dates as "YYYY-MM-DD", money as "12.50".
nlohmann::json value_to_json(const Value& value);
std::optional<Value> value_from_json(const nlohmann::json& j, const KindSpec& kind);

// Self-describing encoding used in persisted documents; decodes without
// knowing the declared kind.
nlohmann::json encode_value(const Value& value);
Value decode_value(const nlohmann::json& j);

std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_date(Date d);
std::optional<Date> parse_date(std::string_view text);

/// ISO-8601 durations restricted to fixed-length units: PnW, PnD, PTnHnMnS.
std::optional<Seconds> parse_duration(std::string_view text);
std::string format_duration(Seconds d);

std::optional<Money> parse_money(std::string_view text);
std::string format_money(Money m);

/// Shortest decimal text that round-trips, always containing a '.'.
std::string format_decimal(double v);

bool is_identifier(std::string_view text);
bool is_reserved_word(std::string_view text);

}  // namespace procflow
