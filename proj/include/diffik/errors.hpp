#pragma once

#include <stdexcept>
#include <string>

namespace diffik {

/// Base of every error the library throws. The CLI maps all of these to the
/// input-error exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared while evaluating an objective term or update.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace diffik
