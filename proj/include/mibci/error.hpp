#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mibci {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed container, sidecar, model or report document.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Precondition violated by the caller (bad dimensions, bad counts, bad band edges).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: singular systems, zero variance, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A fold touched data from its held-out side.
class LeakageError : public Error {
 public:
  using Error::Error;
};

/// Run configuration failed validation; carries every violation found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace mibci
