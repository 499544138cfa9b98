#pragma once

#include <stdexcept>
#include <string>

namespace retmosaic {

/// Failure classes; the CLI maps each to a process exit code.
enum class ErrorKind {
  Config,     // bad parameters or preconditions
  Io,         // unreadable / malformed files
  Numerical,  // solver breakdown, degenerate data
  Quality,    // nothing survives gating
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Zero-mean normalized correlation is undefined when either input has no
/// variance under the mask.
class UndefinedCorrelation : public Error {
public:
  explicit UndefinedCorrelation(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Io: return 3;
    case ErrorKind::Numerical: return 4;
    case ErrorKind::Quality: return 5;
  }
  return 1;
}

}  // namespace retmosaic
