#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "eldertrack/error.hpp"

namespace eldertrack {

using Millis = std::chrono::milliseconds;
using Instant = std::chrono::sys_time<Millis>;
using Date = std::chrono::year_month_day;

namespace detail {

inline bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

}  // namespace detail

/// Parses `YYYY-MM-DD`.
inline Date parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  bool ok = text.size() == 10 && text[4] == '-' && text[7] == '-' &&
            detail::parse_fixed_int(text, 0, 4, y) && detail::parse_fixed_int(text, 5, 2, m) &&
            detail::parse_fixed_int(text, 8, 2, d);
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!ok || !date.ok()) fail(ErrorKind::Validation, "invalid ISO-8601 date: '" + std::string(text) + "'");
  return date;
}

inline std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

/// Parses `YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]`. A missing zone means UTC.
inline Instant parse_instant(std::string_view text) {
  auto bad = [&]() -> Instant {
    fail(ErrorKind::Validation, "invalid ISO-8601 timestamp: '" + std::string(text) + "'");
  };
  if (text.size() < 19 || (text[10] != 'T' && text[10] != ' ')) return bad();
  Date date = parse_date(text.substr(0, 10));
  int hh = 0, mm = 0, ss = 0;
  if (text[13] != ':' || text[16] != ':' || !detail::parse_fixed_int(text, 11, 2, hh) ||
      !detail::parse_fixed_int(text, 14, 2, mm) || !detail::parse_fixed_int(text, 17, 2, ss) ||
      hh > 23 || mm > 59 || ss > 60) {
    return bad();
  }
  std::size_t pos = 19;
  long millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    long scale = 100;
    std::size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (digits < 3) millis += (text[pos] - '0') * scale;
      scale /= 10;
      ++digits;
      ++pos;
    }
    if (digits == 0) return bad();
  }
  long offset_minutes = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z' && pos + 1 == text.size()) {
      ++pos;
    } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (!detail::parse_fixed_int(text, pos + 1, 2, oh) || !detail::parse_fixed_int(text, pos + 4, 2, om)) {
        return bad();
      }
      offset_minutes = (text[pos] == '+' ? 1 : -1) * (oh * 60L + om);
      pos = text.size();
    } else {
      return bad();
    }
  }
  using namespace std::chrono;
  auto local = sys_days{date} + hours{hh} + minutes{mm} + seconds{ss} + milliseconds{millis};
  return time_point_cast<Millis>(local - minutes{offset_minutes});
}

/// Formats as `YYYY-MM-DDTHH:MM:SS.mmmZ`.
inline std::string format_instant(Instant instant) {
  using namespace std::chrono;
  auto day_point = floor<days>(instant);
  Date date{day_point};
  auto ms = (instant - day_point).count();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%sT%02ld:%02ld:%02ld.%03ldZ", format_date(date).c_str(),
                static_cast<long>(ms / 3'600'000), static_cast<long>(ms / 60'000 % 60),
                static_cast<long>(ms / 1000 % 60), static_cast<long>(ms % 1000));
  return buf;
}

/// Maps UTC instants onto the facility's local calendar. A single fixed
/// offset; no daylight-saving handling.
struct LocalClock {
  int utc_offset_minutes = 0;

  std::chrono::sys_time<Millis> to_local(Instant instant) const {
    return instant + std::chrono::minutes{utc_offset_minutes};
  }

  Date local_date(Instant instant) const {
    return Date{std::chrono::floor<std::chrono::days>(to_local(instant))};
  }

  /// Milliseconds elapsed since local midnight.
  long long millis_into_day(Instant instant) const {
    auto local = to_local(instant);
    return (local - std::chrono::floor<std::chrono::days>(local)).count();
  }

  Instant local_midnight_utc(const Date& date) const {
    return Instant{std::chrono::sys_days{date}} - std::chrono::minutes{utc_offset_minutes};
  }
};

}  // namespace eldertrack
