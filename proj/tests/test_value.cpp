// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "procflow/value.hpp"

using namespace procflow;
using namespace std::chrono;

TEST_CASE("durations") {
  CHECK(parse_duration("P10D") == Seconds(10 * 86400));
  CHECK(parse_duration("P2W") == Seconds(14 * 86400));
  CHECK(parse_duration("PT1H30M") == Seconds(5400));
  CHECK(parse_duration("P1DT2H") == Seconds(86400 + 7200));
  CHECK_FALSE(parse_duration("P1M").has_value());  // months are not fixed-length
  CHECK_FALSE(parse_duration("PT").has_value());
  CHECK_FALSE(parse_duration("10D").has_value());
  CHECK(format_duration(Seconds(0)) == "PT0S");
  for (long s : {1L, 59L, 3600L, 86400L, 90061L, 864000L}) {
    CAPTURE(s);
    CHECK(parse_duration(format_duration(Seconds(s))) == Seconds(s));
  }
}

TEST_CASE("timestamps and dates") {
  const auto t = parse_timestamp("2026-03-01T10:20:30Z");
  REQUIRE(t);
  // 2026-03-01 is day 20513 of the Unix epoch.
  CHECK(t->time_since_epoch().count() == 20513L * 86400 + 10 * 3600 + 20 * 60 + 30);
  CHECK(format_timestamp(*t) == "2026-03-01T10:20:30Z");
  CHECK(parse_timestamp("2026-03-01") == sys_seconds(sys_days(2026y / March / 1)));
  CHECK_FALSE(parse_timestamp("2026-02-30T00:00:00Z").has_value());
  CHECK(format_date(2024y / February / 29) == "2024-02-29");
  CHECK_FALSE(parse_date("2023-02-29").has_value());
}

TEST_CASE("money") {
  CHECK(parse_money("12.50")->cents == 1250);
  CHECK(parse_money("-0.05")->cents == -5);
  CHECK(parse_money("7")->cents == 700);
  CHECK_FALSE(parse_money("1.234").has_value());
  CHECK(format_money(Money{1250}) == "12.50");
  CHECK(format_money(Money{-5}) == "-0.05");
}

TEST_CASE("kinds and JSON") {
  CHECK(kind_name(*parse_kind("enum(a, b)")) == "enum(a, b)");
  CHECK_FALSE(parse_kind("float").has_value());
  const KindSpec money{ValueKind::money, {}};
  CHECK(std::get<Money>(*value_from_json("3.10", money)).cents == 310);
  CHECK(value_to_json(Value{Money{310}}) == "3.10");
  const KindSpec color{ValueKind::enumeration, {"red", "green"}};
  CHECK(value_from_json("red", color).has_value());
  CHECK_FALSE(value_from_json("blue", color).has_value());
  for (const Value& v : {Value{true}, Value{std::int64_t{-4}}, Value{2.5}, Value{std::string("x")},
                         Value{Date{2026y / January / 2}}, Value{Money{99}}}) {
    CHECK(decode_value(encode_value(v)) == v);
  }
}

TEST_CASE("identifiers") {
  CHECK(is_identifier("site_visit"));
  CHECK_FALSE(is_identifier("1abc"));
  CHECK(is_reserved_word("proc_type"));
  CHECK_FALSE(is_reserved_word("paid"));
}
