#pragma once

#include <stdexcept>
#include <string>

namespace pacorn {

/// Malformed TSPLIB input. `line()` is 1-based; 0 means "end of stream".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotAPermutation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IllegalState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A replicated city move whose cycle index is not newer than the last one applied.
class StaleMove : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Protocol failure in a parallel run (barrier timeout, worker exception).
class RunAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pacorn
