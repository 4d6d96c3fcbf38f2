#pragma once

#include <stdexcept>
#include <string>

namespace mimo {

/// Base class for every exception thrown by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument value or mismatched dimensions.
class ParameterError : public Error {
  public:
    using Error::Error;
};

/// Linear system too close to singular to solve reliably.
class SingularityError : public Error {
  public:
    using Error::Error;
};

/// Requested search space exceeds the exhaustive-enumeration guard.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// Operation invoked in the wrong state (e.g. backward without a cached forward).
class StateError : public Error {
  public:
    using Error::Error;
};

/// Malformed or incompatible on-disk artifact (model or dataset file).
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace mimo
