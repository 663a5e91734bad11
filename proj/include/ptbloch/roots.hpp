#pragma once

#include <cmath>

#include "ptbloch/common.hpp"

namespace ptbloch {

struct NewtonOptions {
    double residual_tol = 1e-11;
    int max_iterations = 60;
    double fd_step = 1e-6; // actual step: fd_step * (1 + |E|)
};

struct NewtonResult {
    cplx value{};
    cplx residual{};
    int iterations = 0;
    bool converged = false;
};

/// Newton iteration on an analytic f : C -> C with the derivative estimated
/// by a centered real-step finite difference (valid for analytic f). Stops on
/// |f| < residual_tol or the iteration budget; the best iterate seen is
/// returned either way, which matters at double roots where the residual
/// plateaus at the evaluation accuracy instead of reaching the target.
template <typename F>
NewtonResult newton_complex(F&& f, cplx seed, const NewtonOptions& opt = {}) {
    NewtonResult best;
    best.value = seed;
    best.residual = f(seed);
    cplx e = seed;
    cplx r = best.residual;
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (std::abs(r) < std::abs(best.residual)) {
            best.value = e;
            best.residual = r;
            best.iterations = it;
        }
        if (std::abs(r) < opt.residual_tol) {
            best.converged = true;
            return best;
        }
        const double h = opt.fd_step * (1.0 + std::abs(e));
        const cplx deriv = (f(e + h) - f(e - h)) / (2.0 * h);
        if (std::abs(deriv) < 1e-300) return best; // flat: cannot proceed
        e -= r / deriv;
        r = f(e);
    }
    if (std::abs(r) < std::abs(best.residual)) {
        best.value = e;
        best.residual = r;
        best.iterations = opt.max_iterations;
    }
    best.converged = std::abs(best.residual) < opt.residual_tol;
    return best;
}

} // namespace ptbloch
