#pragma once

#include <stdexcept>
#include <string>

namespace amodal {

/// Inputs whose grid dimensions disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation applied to a mask with no set pixels.
class EmptyMaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file (manifest, detection list, config, checkpoint) violates its schema.
/// CLI maps this to exit code 2.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A requested configuration cannot be satisfied (e.g. unattainable
/// occlusion rate). CLI maps this to exit code 3.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or other unrecoverable training failure.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amodal
