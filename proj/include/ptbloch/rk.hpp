#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "ptbloch/common.hpp"
#include "ptbloch/errors.hpp"

namespace ptbloch {

/// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince tableau) for complex
/// first-order systems y' = f(x, y) with fixed dimension N. The error norm is
/// the RMS of component errors scaled by atol + rtol*|y|, so `tol` plays both
/// roles when the two are set equal.
///
/// Steps are counted against a budget; exceeding it raises StepFailure, which
/// bounds the runtime on pathological inputs instead of looping forever.
template <std::size_t N>
struct RkOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    long max_steps = 1000000;
    double initial_step = 0.0; // 0 = pick automatically
};

template <std::size_t N, typename Rhs>
class RkIntegrator {
public:
    using State = std::array<cplx, N>;

    RkIntegrator(Rhs rhs, RkOptions<N> opt = {}) : rhs_(rhs), opt_(opt) {}

    /// Integrates from x0 to x1 (either direction) and returns y(x1).
    State integrate(double x0, double x1, State y) {
        if (x1 == x0) return y;
        const double dir = x1 > x0 ? 1.0 : -1.0;
        double x = x0;
        double h = opt_.initial_step != 0.0 ? std::abs(opt_.initial_step)
                                            : initial_step_guess(x0, y);
        h = std::min(h, std::abs(x1 - x0));
        State k1 = rhs_(x, y);
        long steps = 0;
        bool last = false;
        while (true) {
            if (++steps > opt_.max_steps)
                throw StepFailure("rk: step budget exhausted");
            if (std::abs(h) < 1e-14 * (1.0 + std::abs(x)))
                throw StepFailure("rk: step size underflow");
            if (std::abs(x1 - x) <= h) {
                h = std::abs(x1 - x);
                last = true;
            }
            const double hs = dir * h;

            State k2, k3, k4, k5, k6, k7, ynew, yerr;
            stage(y, k1, hs * a21, k2buf_);
            k2 = rhs_(x + c2 * hs, k2buf_);
            stage2(y, k1, k2, hs, a31, a32, k2buf_);
            k3 = rhs_(x + c3 * hs, k2buf_);
            stage3(y, k1, k2, k3, hs, a41, a42, a43, k2buf_);
            k4 = rhs_(x + c4 * hs, k2buf_);
            stage4(y, k1, k2, k3, k4, hs, a51, a52, a53, a54, k2buf_);
            k5 = rhs_(x + c5 * hs, k2buf_);
            stage5(y, k1, k2, k3, k4, k5, hs, a61, a62, a63, a64, a65, k2buf_);
            k6 = rhs_(x + hs, k2buf_);
            for (std::size_t i = 0; i < N; ++i)
                ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                       b5 * k5[i] + b6 * k6[i]);
            k7 = rhs_(x + hs, ynew);
            for (std::size_t i = 0; i < N; ++i)
                yerr[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

            double err = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc =
                    opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                const double r = std::abs(yerr[i]) / sc;
                err += r * r;
            }
            err = std::sqrt(err / N);

            if (err <= 1.0) {
                x += hs;
                y = ynew;
                k1 = k7; // FSAL
                if (last) return y;
                h *= std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 1.0, 5.0);
            } else {
                h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
                last = false;
            }
        }
    }

private:
    double initial_step_guess(double x0, const State& y) {
        State f = rhs_(x0, y);
        double ny = 0.0, nf = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            ny = std::max(ny, std::abs(y[i]));
            nf = std::max(nf, std::abs(f[i]));
        }
        double h = (nf > 1e-12) ? 0.01 * (1.0 + ny) / nf : 1e-3;
        return std::clamp(h, 1e-8, 0.5);
    }

    static void stage(const State& y, const State& k1, double c, State& out) {
        for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + c * k1[i];
    }
    static void stage2(const State& y, const State& k1, const State& k2, double h,
                       double q1, double q2, State& out) {
        for (std::size_t i = 0; i < N; ++i)
            out[i] = y[i] + h * (q1 * k1[i] + q2 * k2[i]);
    }
    static void stage3(const State& y, const State& k1, const State& k2,
                       const State& k3, double h, double q1, double q2, double q3,
                       State& out) {
        for (std::size_t i = 0; i < N; ++i)
            out[i] = y[i] + h * (q1 * k1[i] + q2 * k2[i] + q3 * k3[i]);
    }
    static void stage4(const State& y, const State& k1, const State& k2,
                       const State& k3, const State& k4, double h, double q1,
                       double q2, double q3, double q4, State& out) {
        for (std::size_t i = 0; i < N; ++i)
            out[i] = y[i] + h * (q1 * k1[i] + q2 * k2[i] + q3 * k3[i] + q4 * k4[i]);
    }
    static void stage5(const State& y, const State& k1, const State& k2,
                       const State& k3, const State& k4, const State& k5, double h,
                       double q1, double q2, double q3, double q4, double q5,
                       State& out) {
        for (std::size_t i = 0; i < N; ++i)
            out[i] = y[i] + h * (q1 * k1[i] + q2 * k2[i] + q3 * k3[i] +
                                 q4 * k4[i] + q5 * k5[i]);
    }

    // Dormand-Prince 5(4) coefficients
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    Rhs rhs_;
    RkOptions<N> opt_;
    State k2buf_{};
};

/// Local step tolerance that keeps the accumulated global error of a
/// period-long integration within the caller's requested tolerance: three
/// digits of headroom, floored near the rounding level.
inline double local_tol(double tol) { return std::max(1e-3 * tol, 1e-14); }

/// Convenience wrapper: integrate y' = f(x, y) from x0 to x1.
template <std::size_t N, typename Rhs>
std::array<cplx, N> rk_integrate(Rhs&& rhs, double x0, double x1,
                                 std::array<cplx, N> y0, double tol,
                                 long max_steps = 1000000) {
    RkOptions<N> opt;
    opt.rtol = opt.atol = tol;
    opt.max_steps = max_steps;
    RkIntegrator<N, Rhs> integ(std::forward<Rhs>(rhs), opt);
    return integ.integrate(x0, x1, y0);
}

} // namespace ptbloch
