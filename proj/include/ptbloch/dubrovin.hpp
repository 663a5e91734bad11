#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ptbloch/common.hpp"
#include "ptbloch/errors.hpp"
#include "ptbloch/rk.hpp"

namespace ptbloch {

/// A genus-g hyperelliptic spectral curve w^2 = R(E) = prod (E - E_j),
/// represented by its 2g+1 branch points.
class HyperellipticData {
public:
    explicit HyperellipticData(std::vector<cplx> branch_points)
        : branch_points_(std::move(branch_points)) {
        if (branch_points_.size() < 3 || branch_points_.size() % 2 == 0)
            throw std::invalid_argument(
                "HyperellipticData: need 2g+1 branch points with g >= 1");
        for (std::size_t i = 0; i < branch_points_.size(); ++i)
            for (std::size_t j = i + 1; j < branch_points_.size(); ++j)
                if (std::abs(branch_points_[i] - branch_points_[j]) <= 1e-10)
                    throw std::invalid_argument(
                        "HyperellipticData: branch points must be distinct");
    }

    int genus() const { return (static_cast<int>(branch_points_.size()) - 1) / 2; }
    const std::vector<cplx>& branch_points() const { return branch_points_; }

    cplx R(cplx E) const {
        cplx p = 1.0;
        for (const cplx& b : branch_points_) p *= E - b;
        return p;
    }

    cplx R_prime(cplx E) const {
        cplx sum = 0.0;
        for (std::size_t k = 0; k < branch_points_.size(); ++k) {
            cplx term = 1.0;
            for (std::size_t j = 0; j < branch_points_.size(); ++j)
                if (j != k) term *= E - branch_points_[j];
            sum += term;
        }
        return sum;
    }

private:
    std::vector<cplx> branch_points_;
};

/// One divisor point with its sheet: w_k^2 = R(gamma_k). Carrying w in the
/// state is what keeps the square root branch-correct along the flow; it is
/// never re-derived from a principal branch.
struct DivisorPoint {
    cplx gamma;
    cplx w;
};

using DivisorState = std::vector<DivisorPoint>;

struct FlowOptions {
    double collision_distance = 1e-9;
    double sheet_tol = 1e-10;   // admission check |w^2 - R| at t = 0
    double branch_tol = 1e-4;   // |w|^2 below branch_tol*(1+|R'|): turning-point zone
    long max_steps = 2000000;
};

namespace detail {

inline void check_state(const HyperellipticData& data, const DivisorState& state,
                        const FlowOptions& opt) {
    if (static_cast<int>(state.size()) != data.genus())
        throw std::invalid_argument("DivisorState: need one point per handle (g)");
    for (const auto& p : state) {
        const cplx r = data.R(p.gamma);
        if (std::abs(p.w * p.w - r) > opt.sheet_tol * (1.0 + std::abs(r)))
            throw std::invalid_argument(
                "DivisorState: w^2 = R(gamma) violated on input");
    }
    for (std::size_t i = 0; i < state.size(); ++i)
        for (std::size_t j = i + 1; j < state.size(); ++j)
            if (std::abs(state[i].gamma - state[j].gamma) < opt.collision_distance)
                throw DivisorCollision(
                    "DivisorState: divisor points collide on input");
}

inline cplx cross_denominator(const DivisorState& state, std::size_t k,
                              double collision_distance) {
    cplx denom = 1.0;
    for (std::size_t j = 0; j < state.size(); ++j) {
        if (j == k) continue;
        const cplx diff = state[k].gamma - state[j].gamma;
        if (std::abs(diff) < collision_distance)
            throw DivisorCollision("dubrovin: divisor points collided");
        denom *= diff;
    }
    return denom;
}

} // namespace detail

/// Velocities gamma_k' = -2i w_k / prod_{j != k} (gamma_k - gamma_j), with
/// w_k taken from the sheet-resolved state.
inline std::vector<cplx> dubrovin_rhs(const HyperellipticData& data,
                                      const DivisorState& state,
                                      const FlowOptions& opt = {}) {
    detail::check_state(data, state, opt);
    std::vector<cplx> vel(state.size());
    for (std::size_t k = 0; k < state.size(); ++k)
        vel[k] = cplx(0.0, -2.0) * state[k].w /
                 detail::cross_denominator(state, k, opt.collision_distance);
    return vel;
}

struct FlowSample {
    double x = 0.0;
    DivisorState state;
};

struct FlowPath {
    std::vector<FlowSample> samples;
};

namespace detail {

/// Flattened RHS of the coupled (gamma_k, w_k) system. Away from branch
/// points w' = R'(gamma) gamma' / (2w); substituting gamma' eliminates the
/// division by w entirely:
///     gamma_k' = -2i w_k / D_k,    w_k' = -i R'(gamma_k) / D_k,
/// so the same equations serve as the local square-root chart through the
/// turning points, where w is the regular coordinate and gamma moves
/// quadratically.
template <std::size_t MaxG>
struct FlowRhs {
    const HyperellipticData* data;
    const FlowOptions* opt;
    std::size_t g;

    std::array<cplx, 2 * MaxG> operator()(double,
                                          const std::array<cplx, 2 * MaxG>& y) const {
        DivisorState state(g);
        for (std::size_t k = 0; k < g; ++k) {
            state[k].gamma = y[2 * k];
            state[k].w = y[2 * k + 1];
        }
        std::array<cplx, 2 * MaxG> dy{};
        for (std::size_t k = 0; k < g; ++k) {
            const cplx denom =
                cross_denominator(state, k, opt->collision_distance);
            dy[2 * k] = cplx(0.0, -2.0) * state[k].w / denom;
            dy[2 * k + 1] = cplx(0.0, -1.0) * data->R_prime(state[k].gamma) / denom;
        }
        return dy;
    }
};

/// Re-anchors w on the curve (the flow preserves w^2 = R exactly, numerics
/// only approximately). Skipped inside the turning-point zone where dividing
/// by w would amplify noise; there the joint system is the accurate chart.
inline void project_sheet(const HyperellipticData& data, DivisorState& state,
                          const FlowOptions& opt) {
    for (auto& p : state) {
        const cplx r = data.R(p.gamma);
        const double w2 = std::norm(p.w);
        if (w2 < opt.branch_tol * (1.0 + std::abs(data.R_prime(p.gamma))))
            continue;
        const cplx ratio = r / (p.w * p.w);
        p.w *= std::sqrt(ratio); // ratio ~ 1, principal branch is the small fix
    }
}

} // namespace detail

/// Integrates the Dubrovin flow for (gamma_k, w_k) over x_span, sampling at
/// `sample_points` when given (first/last clamped to the span) or at uniform
/// points otherwise. Sheet continuity is maintained by evolving w as part of
/// the state and re-projecting it onto the curve between samples.
inline FlowPath integrate_flow(const HyperellipticData& data,
                               const DivisorState& state0,
                               std::pair<double, double> x_span, double tol,
                               const FlowOptions& opt = {},
                               const std::vector<double>& sample_points = {}) {
    if (!(tol > 0.0))
        throw std::invalid_argument("integrate_flow: tol must be positive");
    detail::check_state(data, state0, opt);
    const std::size_t g = state0.size();
    constexpr std::size_t max_genus = 6;
    if (g > max_genus)
        throw std::invalid_argument("integrate_flow: genus above compiled limit");

    std::vector<double> grid = sample_points;
    if (grid.empty()) {
        const int count = 256;
        grid.resize(count + 1);
        for (int i = 0; i <= count; ++i)
            grid[i] = x_span.first +
                      (x_span.second - x_span.first) * i / double(count);
    }

    detail::FlowRhs<max_genus> rhs{&data, &opt, g};
    RkOptions<2 * max_genus> rk_opt;
    rk_opt.rtol = rk_opt.atol = local_tol(tol);
    rk_opt.max_steps = opt.max_steps;
    RkIntegrator<2 * max_genus, detail::FlowRhs<max_genus>> integ(rhs, rk_opt);

    std::array<cplx, 2 * max_genus> y{};
    for (std::size_t k = 0; k < g; ++k) {
        y[2 * k] = state0[k].gamma;
        y[2 * k + 1] = state0[k].w;
    }

    FlowPath path;
    path.samples.reserve(grid.size());
    double x = x_span.first;
    for (double target : grid) {
        if (target != x) y = integ.integrate(x, target, y);
        x = target;
        DivisorState state(g);
        for (std::size_t k = 0; k < g; ++k) {
            state[k].gamma = y[2 * k];
            state[k].w = y[2 * k + 1];
        }
        detail::project_sheet(data, state, opt);
        for (std::size_t k = 0; k < g; ++k) y[2 * k + 1] = state[k].w;
        path.samples.push_back({x, std::move(state)});
    }
    return path;
}

/// Finite-gap reconstruction along a flow path:
///     u(x) = -2 sum_k gamma_k(x) + sum_j E_j.
inline std::vector<std::pair<double, cplx>> trace_formula_potential(
    const HyperellipticData& data, const FlowPath& path) {
    cplx branch_sum = 0.0;
    for (const cplx& b : data.branch_points()) branch_sum += b;
    std::vector<std::pair<double, cplx>> u;
    u.reserve(path.samples.size());
    for (const auto& sample : path.samples) {
        cplx gamma_sum = 0.0;
        for (const auto& p : sample.state) gamma_sum += p.gamma;
        u.emplace_back(sample.x, -2.0 * gamma_sum + branch_sum);
    }
    return u;
}

} // namespace ptbloch
