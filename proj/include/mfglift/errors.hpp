#pragma once

#include <stdexcept>
#include <string>

namespace mfglift {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument or violated type invariant (non-probability density,
/// bad exponents, mismatched array shapes, ...).
struct InvalidArgumentError : Error {
    using Error::Error;
};

/// Particle mass escaped the requested grid window during binning.
struct DomainTooSmallError : Error {
    using Error::Error;
};

/// Explicit-advection stability bound violated; message names the step
/// size that would satisfy it.
struct CflError : Error {
    using Error::Error;
};

/// A conservative transport step leaked more mass than permitted.
struct MassConservationError : Error {
    using Error::Error;
};

/// Density functional evaluated outside the support of the grid.
struct OutOfSupportError : Error {
    using Error::Error;
};

/// A construction that requires certified coefficients received
/// uncertified ones, or certification itself failed with a witness.
struct CertificationError : Error {
    using Error::Error;
};

/// Two objects that must share a time or space grid do not.
struct GridMismatchError : Error {
    using Error::Error;
};

/// A coefficient returned a non-finite value while integrating a path;
/// message names the time and state at which it happened.
struct PropagationError : Error {
    using Error::Error;
};

/// A simulated particle left the safe envelope around the grid.
struct BlowUpError : Error {
    using Error::Error;
};

/// Model file could not be parsed; message carries line/column context.
struct ParseError : Error {
    using Error::Error;
};

} // namespace mfglift
