#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wigner {

// Bad input configuration (files, plans, flag values). Collects every issue so
// callers can report all of them at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  explicit ConfigError(const std::string& issue)
      : ConfigError(std::vector<std::string>{issue}) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& e : v) {
      if (!s.empty()) s += "; ";
      s += e;
    }
    return s;
  }
  std::vector<std::string> issues_;
};

// Precondition or domain violation on a function argument.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric routine failed to meet its contract (solver breakdown, residual
// over tolerance, unconverged quadrature).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// I/O failure or corrupt file contents.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// States that should be unreachable.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace wigner
