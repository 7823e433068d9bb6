#pragma once

#include <stdexcept>
#include <string>

namespace etdrk {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed tableau text or configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// P(z) has a (numerically) vanishing diagonal entry.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

}  // namespace etdrk
