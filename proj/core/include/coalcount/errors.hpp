#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coalcount {

/// Malformed input text. `line` and `column` are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line = 0, int column = 0)
      : std::runtime_error(std::move(message)), line(line), column(column) {}
  int line;
  int column;
};

/// A pair of sites whose carrier sets overlap without nesting.
class IsmViolation : public std::runtime_error {
 public:
  IsmViolation(std::string message, std::string site_a, std::string site_b)
      : std::runtime_error(std::move(message)),
        site_a(std::move(site_a)),
        site_b(std::move(site_b)) {}
  std::string site_a;
  std::string site_b;
};

/// An exhaustive computation exceeded its node budget before completing.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::string message, std::uint64_t budget)
      : std::runtime_error(std::move(message)), budget(budget) {}
  std::uint64_t budget;
};

/// Invalid option combination or out-of-range argument.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coalcount
