#pragma once

#include <stdexcept>
#include <string>

namespace tgc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or text input (netlists, parameter files, datasets).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A garbled label that matches neither label of its wire.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Invalid arguments to an operation (bad scale, empty tensor, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace tgc
