#pragma once

#include <stdexcept>
#include <string>

namespace miprune {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension mismatch between tensors/layers.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Malformed or truncated on-disk artifact (model, trace, cache, dataset).
struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Value outside its documented domain.
struct RangeError : Error {
  explicit RangeError(const std::string& msg) : Error(msg) {}
};

// Invalid or inapplicable prune plan.
struct PlanError : Error {
  explicit PlanError(const std::string& msg) : Error(msg) {}
};

// Non-finite activation while recording a probe trace.
struct ProbeError : Error {
  explicit ProbeError(const std::string& msg) : Error(msg) {}
};

// Training produced a non-finite loss.
struct TrainError : Error {
  explicit TrainError(const std::string& msg) : Error(msg) {}
};

// Caller handed in something unusable (empty dataset, bad flag value).
struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

}  // namespace miprune
