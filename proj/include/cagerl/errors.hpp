#pragma once

#include <stdexcept>
#include <string>

namespace cagerl {

// Invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration text that could not be parsed; carries the 1-based line.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, int line)
      : ConfigError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Argument outside the domain of a function (e.g. a negative gap).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Tensor or network shape disagreement.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API used out of order (stepping a finished episode, stale caches).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class CorruptCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A NaN or infinity showed up in a value that must stay finite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cagerl
