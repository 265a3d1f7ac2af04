#pragma once

#include <stdexcept>
#include <string>

namespace phnls {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad shape, out-of-range value).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The discretization cannot represent the requested operation.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to converge or diverged.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or configuration input.
class FormatError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace phnls
