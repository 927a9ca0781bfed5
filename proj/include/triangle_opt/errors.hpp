#pragma once

#include <stdexcept>
#include <string>

namespace triangle_opt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the domain of a function (e.g. entropy at a zero coordinate).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The (prox setup, simple term) combination has no implemented solver.
class UnsupportedGeometry : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when the Lipschitz trial had to be doubled more often than allowed.
class BacktrackLimitExceeded : public Error {
 public:
  BacktrackLimitExceeded(std::string what, int iteration, double last_trial)
      : Error(std::move(what)), iteration_(iteration), last_trial_(last_trial) {}
  int iteration() const noexcept { return iteration_; }
  double last_trial() const noexcept { return last_trial_; }

 private:
  int iteration_;
  double last_trial_;
};

/// A_k or alpha_k left the representable range.
class CoefficientOverflow : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::string what, int line = 0, std::string field = {})
      : Error(std::move(what)), line_(line), field_(std::move(field)) {}
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string what, std::string field)
      : Error(std::move(what)), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class MissingColumn : public Error {
 public:
  explicit MissingColumn(std::string column)
      : Error("trace is missing required column '" + column + "'"), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace triangle_opt
