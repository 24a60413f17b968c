#pragma once

#include <stdexcept>
#include <string>

namespace rainforge {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad dimensions, negative
// sigma, wrong channel count, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// File could not be read, written, or decoded.
class IoError : public Error {
 public:
  using Error::Error;
};

// A geometric estimation problem has no well-defined solution
// (singular homography, collinear points, no consensus model).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Malformed structured input, located by line.
class ParseError : public Error {
 public:
  ParseError(std::string source, int line, const std::string& message)
      : Error(source + ":" + std::to_string(line) + ": " + message),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

}  // namespace rainforge

namespace rainforge {

// Lookup of an unknown identifier (e.g. pair id).
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Operation not allowed in the target's current state.
class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace rainforge
