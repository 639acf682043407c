#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coalab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed measure spec; position() is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " (at position " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Well-formed input that violates a measure invariant (negative mass, zero total, ...).
class SemanticError : public Error {
 public:
  using Error::Error;
};

/// Operation called outside its mathematical domain (e.g. f on a dustless measure).
class DomainError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& message, double value, double error_bound)
      : Error(message + ": value " + std::to_string(value) + ", achieved error bound " +
              std::to_string(error_bound)),
        value_(value),
        error_bound_(error_bound) {}

  double value() const noexcept { return value_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double value_;
  double error_bound_;
};

}  // namespace coalab
