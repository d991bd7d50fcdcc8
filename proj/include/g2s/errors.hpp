#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace g2s {

// Caller passed something outside an operation's domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Object is not in a state that allows the requested operation.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN/Inf reached a place where only finite values are legal.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}

  // Line number (1-based) for file parsers, byte offset for the SQL parser.
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace g2s
