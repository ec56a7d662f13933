#pragma once

#include <stdexcept>
#include <string>

namespace phrasecraft {

// Base of every error thrown by the toolkit. The CLI maps subclasses onto
// process exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `line` is 1-based; 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input that is well-formed but unusable for the requested operation
// (e.g. a phrase made only of stopwords, a phrase not found in a context).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, undefined statistics.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace phrasecraft
