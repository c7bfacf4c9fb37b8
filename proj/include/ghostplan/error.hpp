#pragma once

#include <stdexcept>
#include <string>

namespace ghostplan {

enum class ErrorKind {
  Argument,
  Domain,
  Range,
  Capacity,
  Divisibility,
  Convergence,
  Precondition,
  Undefined,
  Format,
  Io,
  Config,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind maps
/// one-to-one onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a sampler cannot produce the requested number of FOVs.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::size_t max_count)
      : Error(ErrorKind::Capacity, what), max_count_(max_count) {}

  std::size_t max_count() const noexcept { return max_count_; }

 private:
  std::size_t max_count_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace ghostplan
