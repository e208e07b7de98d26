// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/date.hpp"

#include <charconv>
#include <cstdio>

namespace garchrnn {

using namespace std::chrono;

Date::Date(int y, unsigned m, unsigned d)
    : day_(sys_days(year_month_day{year{y}, month{m}, day{d}})) {}

std::optional<Date> Date::parse(std::string_view text) {
  // Accept "YYYY-MM-DD", optionally followed by a time part we ignore.
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (text.size() > 10 && text[10] != ' ' && text[10] != 'T') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  const char* s = text.data();
  auto digits = [](std::string_view part) {
    for (char c : part)
      if (c < '0' || c > '9') return false;
    return true;
  };
  if (!digits(text.substr(0, 4)) || !digits(text.substr(5, 2)) ||
      !digits(text.substr(8, 2)))
    return std::nullopt;
  std::from_chars(s, s + 4, y);
  std::from_chars(s + 5, s + 7, m);
  std::from_chars(s + 8, s + 10, d);
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date(sys_days(ymd));
}

std::string Date::to_string() const {
  year_month_day ymd{day_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

bool Date::is_weekday() const {
  weekday wd{day_};
  return wd != Saturday && wd != Sunday;
}

}  // namespace garchrnn
