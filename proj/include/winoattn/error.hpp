// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace winoattn {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent user input (arguments, configs, ranges).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Tensor or vector shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, truncation, encoding, syntax).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Model configuration that violates an invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace winoattn
