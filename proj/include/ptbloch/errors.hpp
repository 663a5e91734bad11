#pragma once

#include <stdexcept>
#include <string>

namespace ptbloch {

/// Base class for all numerical failures raised by this library.
/// Input/usage violations throw std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Adaptive integrator could not meet the tolerance within its step budget.
class StepFailure : public Error {
public:
    using Error::Error;
};

/// Newton iteration failed to converge from the given seed.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Newton iterate left the configured search window (likely converging to a
/// different eigenvalue than the seeded one).
class OutOfWindow : public Error {
public:
    using Error::Error;
};

/// Curve tracer corrector failed repeatedly at the minimal step size.
class StallError : public Error {
public:
    using Error::Error;
};

/// Dense eigenvalue solver did not converge.
class QRNoConvergence : public Error {
public:
    using Error::Error;
};

/// Both closed-form eigenvector representations vanish identically.
class DegenerateVector : public Error {
public:
    using Error::Error;
};

/// Requested a divisor prediction for a resonance with no active coefficients.
class DegenerateDivisor : public Error {
public:
    using Error::Error;
};

/// Two divisor points collided during the flow; the equations are singular there.
class DivisorCollision : public Error {
public:
    using Error::Error;
};

} // namespace ptbloch
