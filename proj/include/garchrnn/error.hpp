// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace garchrnn {

/// Failure category. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  internal = 1,
  config = 2,
  data = 3,
  divergence = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct DivergenceError : Error {
  explicit DivergenceError(const std::string& what)
      : Error(ErrorKind::divergence, what) {}
};

}  // namespace garchrnn
