#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "ptbloch/common.hpp"
#include "ptbloch/errors.hpp"
#include "ptbloch/potential.hpp"
#include "ptbloch/rk.hpp"

namespace ptbloch {

/// 2x2 complex matrix, stored row-major: [[a, b], [c, d]].
struct Mat2 {
    cplx a, b, c, d;
    cplx trace() const { return a + d; }
    cplx det() const { return a * d - b * c; }
};

/// Transport of the fundamental system of -psi'' + u psi = E psi over one
/// period. Columns are the solutions with Cauchy data (1,0) and (0,1) at the
/// base point, evaluated at base + 2pi as (value, derivative). The trace is
/// the Hill discriminant; the Bloch multipliers solve
/// lambda^2 - Delta lambda + 1 = 0.
struct MonodromyResult {
    Mat2 matrix;
    cplx energy;
    double base_point = 0.0;
    cplx discriminant;
    std::pair<cplx, cplx> multipliers;
};

/// The two roots of lambda^2 - Delta lambda + 1 = 0, computed without
/// cancellation: the larger-magnitude root from the sign-adapted quadratic
/// formula, the other as its exact reciprocal. Ordered larger-first.
inline std::pair<cplx, cplx> bloch_multipliers(cplx delta) {
    cplx s = std::sqrt(delta * delta - 4.0);
    if ((std::conj(delta) * s).real() < 0.0) s = -s;
    const cplx big = 0.5 * (delta + s);
    if (big == cplx(0.0)) return {cplx(1.0), cplx(1.0)}; // delta = +-2 limit
    return {big, 1.0 / big};
}

/// Integrates the fundamental system from x0 to x0 + 2pi at energy E.
/// det M = 1 (Wronskian) holds up to the integration tolerance; its defect is
/// the natural a-posteriori error indicator. Pure function of (spec, E):
/// callers may evaluate many energies in parallel against a shared spec.
inline MonodromyResult monodromy(const PotentialSpec& spec, cplx E,
                                 double x0 = 0.0, double tol = 1e-10) {
    if (!(tol > 0.0))
        throw std::invalid_argument("monodromy: tol must be positive");
    auto rhs = [&spec, E](double x, const std::array<cplx, 4>& y) {
        const cplx q = spec.evaluate(x) - E;
        return std::array<cplx, 4>{y[1], q * y[0], y[3], q * y[2]};
    };
    const std::array<cplx, 4> y1 = rk_integrate<4>(
        rhs, x0, x0 + period, {1.0, 0.0, 0.0, 1.0}, local_tol(tol));

    MonodromyResult result;
    result.matrix = Mat2{y1[0], y1[2], y1[1], y1[3]};
    result.energy = E;
    result.base_point = x0;
    result.discriminant = result.matrix.trace();
    result.multipliers = bloch_multipliers(result.discriminant);
    return result;
}

/// Hill discriminant Delta(E) = trace of the monodromy at base 0; an entire
/// function of E.
inline cplx discriminant(const PotentialSpec& spec, cplx E, double tol = 1e-10) {
    return monodromy(spec, E, 0.0, tol).discriminant;
}

/// Discriminant of the zero potential, 2 cos(2 pi sqrt(E)) with the principal
/// branch; closed-form oracle for tests and seeding.
inline cplx free_discriminant(cplx E) {
    return 2.0 * std::cos(period * std::sqrt(E));
}

} // namespace ptbloch
