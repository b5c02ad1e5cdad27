#pragma once

#include <stdexcept>
#include <string>

namespace ulv {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (reports file and line where possible).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally inconsistent data (dangling endpoints, dimension mismatch, ...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to an operation.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during numeric evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Unknown name looked up in a registry.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// An unlearning strategy could not run on the given inputs.
class StrategyError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ulv
