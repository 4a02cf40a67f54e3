#pragma once

#include <stdexcept>
#include <string>

namespace prodint {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite or otherwise unusable input values.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Element violates a group/algebra invariant (singular, off-manifold, ...).
class InvalidElementError : public Error {
public:
    using Error::Error;
};

/// Operands belong to different groups.
class IncompatibleElementsError : public Error {
public:
    using Error::Error;
};

/// Argument outside the operation's guaranteed domain (e.g. log far from identity).
class OutOfDomainError : public Error {
public:
    using Error::Error;
};

/// A contraction-mass precondition was exceeded.
class ContractionBoundError : public Error {
public:
    using Error::Error;
};

/// A fixed-point iteration hit its iteration cap above tolerance.
class NoConvergenceError : public Error {
public:
    using Error::Error;
};

/// Path grid too coarse for one-step logarithms.
class PathTooCoarseError : public Error {
public:
    using Error::Error;
};

/// Extension data inconsistent with the control being decomposed.
class InvalidExtensionDataError : public Error {
public:
    using Error::Error;
};

/// Too few usable data points for a fit.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace prodint
