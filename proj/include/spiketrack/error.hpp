#pragma once

#include <stdexcept>
#include <string>

namespace spiketrack {

/// Base class for all spiketrack errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape or index incompatibility between tensors / kernels / spike trains.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A caller violated an operation's contract (bad argument, missing input).
class UsageError : public Error {
public:
  using Error::Error;
};

/// Model data failed an internal consistency check.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A file could not be parsed.
class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace spiketrack
