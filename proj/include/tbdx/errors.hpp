#pragma once

#include <stdexcept>
#include <string>

namespace tbdx {

/// Extent mismatch between tensors, images or layer parameters.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid argument value: bad labels, empty inputs, non-normalized
/// distributions and the like.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mask with no foreground pixels where foreground is required.
class DegenerateMaskError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Registration cannot proceed, e.g. the fixed image is constant.
class RegistrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File reading, writing or decoding failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tbdx
