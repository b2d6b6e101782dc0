#pragma once

#include <stdexcept>
#include <string>

namespace ooskit {

// Bad caller input: wrong dimensions, missing parameters, invalid configs.
// The CLI maps these to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  DimensionMismatch(long expected, long got)
      : InvalidArgument("dimension mismatch: expected " + std::to_string(expected) +
                        ", got " + std::to_string(got)) {}
};

// Failures while running (bad data files, numerical breakdown).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public RuntimeError {
 public:
  DataError(const std::string& path, long line, const std::string& what)
      : RuntimeError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

// The LP could not decide feasibility (cycling guard tripped, unbounded
// where the formulation forbids it, or a witness failed verification).
class IndeterminateError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

}  // namespace ooskit
