#pragma once

#include <stdexcept>
#include <string>

namespace rieszlab {

/// Process exit codes shared by the library's error types and the CLI.
enum class ExitCode : int {
  ok = 0,
  failure = 1,     // internal / IO
  validation = 2,  // rejected parameters or config
  invariant = 3,   // a mathematical invariant failed to hold
  resource = 4,    // exact-arithmetic or memory budget exceeded
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string &what) : Error(ExitCode::validation, what) {}
};

/// Out-of-contract window/range requests (maps to the validation exit code).
class RangeError : public ValidationError {
 public:
  explicit RangeError(const std::string &what) : ValidationError(what) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string &what) : Error(ExitCode::invariant, what) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string &what) : Error(ExitCode::resource, what) {}
};

}  // namespace rieszlab
