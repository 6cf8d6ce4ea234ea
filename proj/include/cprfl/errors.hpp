// Copyright 2026 The cprfl Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CPRFL_ERRORS_HPP_
#define CPRFL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace cprfl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible with the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument or configuration value is outside its allowed range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Binary or JSON file could not be decoded. `kind()` tells which check failed.
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kVersion, kTruncated, kInconsistent, kIo };

  FormatError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace cprfl

#endif  // CPRFL_ERRORS_HPP_
