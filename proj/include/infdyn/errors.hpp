#pragma once

#include <stdexcept>
#include <string>

namespace infdyn {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Structural / algebraic failures.
struct DegenerateInput : Error { using Error::Error; };
struct CoefficientOverflow : Error { using Error::Error; };
struct NoIndeterminacy : Error { using Error::Error; };
struct ConstantAtInfinity : Error { using Error::Error; };
struct InadmissibleWord : Error { using Error::Error; };
struct NonIntegerExponent : Error { using Error::Error; };
struct DegenerateTarget : Error { using Error::Error; };

// Numeric failures.
struct IllConditioned : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct WeightNotStabilized : Error { using Error::Error; };
struct IndeterminateEvaluation : Error { using Error::Error; };

// Geometry / dynamics failures.
struct SeparationFailure : Error { using Error::Error; };
struct CertificateFailure : Error { using Error::Error; };
struct OrbitLost : Error { using Error::Error; };
struct RestEntered : Error { using Error::Error; };
struct TreeTooShallow : Error { using Error::Error; };
struct OrbitHitsE : Error { using Error::Error; };

// A structural hypothesis of the theory fails on this input (for example a
// periodic indeterminacy point); distinct from numeric failure so callers can
// exit with the dedicated status code.
struct HypothesisViolation : Error { using Error::Error; };

// I/O.
struct ParseError : Error { using Error::Error; };

} // namespace infdyn
