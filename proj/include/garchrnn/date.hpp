// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace garchrnn {

/// Calendar date with day resolution.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days day) : day_(day) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses `YYYY-MM-DD`. Returns nullopt on malformed or invalid dates.
  static std::optional<Date> parse(std::string_view text);

  std::string to_string() const;
  std::chrono::sys_days days() const { return day_; }

  Date operator+(int days) const { return Date(day_ + std::chrono::days(days)); }
  bool is_weekday() const;

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days day_{};
};

}  // namespace garchrnn
