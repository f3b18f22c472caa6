#pragma once

#include <stdexcept>
#include <string>

namespace flowph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or input violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// An internal invariant that should hold by construction was observed broken.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// The simplices of a complex are not in a valid filtration order.
class FiltrationOrderError : public Error {
 public:
  using Error::Error;
};

/// A requested feature (e.g. a finite persistence pair) does not exist.
class NotFound : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace flowph
