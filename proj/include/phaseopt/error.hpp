// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace phaseopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or bad input data: a library file, a schema, a command
/// template. Detected before any search starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed textual IR. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure of the evaluation machinery itself (a child process could not be
/// spawned, a scratch file could not be written). Aborts the partition being
/// searched. A recipe that merely makes the optimizer crash is NOT one of
/// these; that is a Failed score outcome.
class InfraError : public Error {
 public:
  using Error::Error;
};

}  // namespace phaseopt
