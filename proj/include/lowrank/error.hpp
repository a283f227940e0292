#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace lowrank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up (rows/cols/inner dimension).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated (wrong domain, empty input, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter lies outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed the caller's budget. `required` is the number
/// of candidates the run would have examined (saturates at UINT64_MAX).
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, double required, double budget)
      : Error(what + ": requires " + format(required) + " candidates, budget is " + format(budget)),
        required_(required),
        budget_(budget) {}

  double required() const noexcept { return required_; }
  double budget() const noexcept { return budget_; }

 private:
  static std::string format(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  }

  double required_;
  double budget_;
};

/// Malformed input text (matrix files, tables, bench configs).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace lowrank
