#pragma once

#include <stdexcept>
#include <string>

namespace restorekit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File was readable but its contents are not a supported format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Argument outside the operation's mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Incompatible extents (e.g. kernel larger than image).
class SizeError : public Error {
public:
    using Error::Error;
};

/// Explicit-scheme step size outside its stability region.
class StabilityError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or incomplete configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Task graph is not a DAG or references unknown nodes.
class GraphError : public Error {
public:
    using Error::Error;
};

/// A schedule does not cover the node set exactly once.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Command line or input set is unusable as given.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace restorekit
