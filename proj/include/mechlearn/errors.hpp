#pragma once

#include <stdexcept>
#include <string>

namespace mechlearn {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfSupport : Error {
    using Error::Error;
};

struct InvalidDistribution : Error {
    using Error::Error;
};

/// Clipped tail mass on the log-likelihood-ratio grid exceeded its budget;
/// the caller must enlarge the log range.
struct RangeTooSmall : Error {
    using Error::Error;
};

struct InfeasibleLP : Error {
    using Error::Error;
};

/// A strictly-interior region of an LP solution failed the linearity check.
struct StructureViolation : Error {
    using Error::Error;
};

/// The requested line exits the admissible region between the bounds.
struct LineInfeasible : Error {
    using Error::Error;
};

/// A bracketing scan found no sign change.
struct NoBracket : Error {
    using Error::Error;
};

struct NotLogConcave : Error {
    using Error::Error;
};

struct NoRoot : Error {
    using Error::Error;
};

struct CertificateFailed : Error {
    using Error::Error;
};

/// A candidate indirect utility violated convexity, monotonicity, the
/// Lipschitz bound, or the envelope box.
struct NonConvexUtility : Error {
    using Error::Error;
};

struct WrongMarketSize : Error {
    using Error::Error;
};

struct UnsupportedNetwork : Error {
    using Error::Error;
};

struct EndpointMismatch : Error {
    using Error::Error;
};

}  // namespace mechlearn
