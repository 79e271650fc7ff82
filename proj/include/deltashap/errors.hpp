#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deltashap {

// Root of every error the library throws. Each subclass maps to one failure
// class the CLI reports with a distinct diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input whose shape does not match what a model or operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A predictor produced a non-finite or out-of-range output.
class ModelFault : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (e.g. a subset outside the
// observed set).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Training or metric input carrying a single label class.
class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

// AUC / APR requested on labels for which the metric does not exist.
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

// Exact enumeration refused because the subset budget is above the cap.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line/column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format_message(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format_message(const std::string& what, std::size_t line,
                            std::size_t column) {
    std::string out = "line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace deltashap
