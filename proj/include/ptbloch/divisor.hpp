#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ptbloch/common.hpp"
#include "ptbloch/errors.hpp"
#include "ptbloch/perturbation.hpp"
#include "ptbloch/potential.hpp"
#include "ptbloch/rk.hpp"
#include "ptbloch/roots.hpp"
#include "ptbloch/spectrum.hpp"

namespace ptbloch {

struct DivisorSample {
    double x = 0.0;
    cplx gamma;
    int newton_iterations = 0;
    double residual = 0.0;
};

/// The divisor point gamma(x) sampled over one period: for each base point x
/// it is the Dirichlet eigenvalue of the operator on [x, x + 2pi] nearest to
/// the chosen resonance, located by complex shooting.
struct DivisorTrajectory {
    std::vector<DivisorSample> samples;
    int resonance_index = 0;
};

struct DivisorOptions {
    double ode_tol = 1e-11;
    double newton_tol_scale = 1e-10; // residual threshold: scale * (1 + |seed|)
    int newton_max_iterations = 60;
    double window_radius = 0.0; // 0 = pick from the resonance index
};

/// Continuation broke at some grid point; the partial trajectory up to the
/// last good sample rides along for reporting.
class ContinuationBreak : public Error {
public:
    ContinuationBreak(const std::string& what, double last_good_x,
                      DivisorTrajectory partial)
        : Error(what), last_good_x(last_good_x), partial(std::move(partial)) {}
    double last_good_x;
    DivisorTrajectory partial;
};

namespace detail {

/// phi_E(x0 + 2pi) for the Cauchy problem phi(x0) = 0, phi'(x0) = 1;
/// gamma is a Dirichlet eigenvalue iff this vanishes.
inline cplx dirichlet_shot(const PotentialSpec& spec, cplx E, double x0,
                           double ode_tol) {
    auto rhs = [&spec, E](double x, const std::array<cplx, 2>& y) {
        return std::array<cplx, 2>{y[1], (spec.evaluate(x) - E) * y[0]};
    };
    return rk_integrate<2>(rhs, x0, x0 + period, {0.0, 1.0}, local_tol(ode_tol))[0];
}

inline double divisor_window_radius(const PotentialSpec& spec, int n,
                                    const DivisorOptions& opt) {
    if (opt.window_radius > 0.0) return opt.window_radius;
    // stay below the neighbouring free Dirichlet eigenvalues (m^2/4) while
    // leaving room for the O(eps) swing of the trajectory
    const double gap = n > 1 ? (2.0 * n - 1.0) / 4.0 : 0.75;
    const double swing =
        2.5 * (std::abs(spec.coefficient(n)) + std::abs(spec.coefficient(-n)));
    return std::min(0.8 * gap, std::max(0.2 * gap, swing + 0.05));
}

} // namespace detail

/// Newton in complex E on the shooting function for the Dirichlet problem on
/// [x, x + 2pi]. Throws NoConvergence, or OutOfWindow when the iterate walks
/// away from the seeded eigenvalue's neighbourhood.
inline cplx dirichlet_eigenvalue(const PotentialSpec& spec, double x, cplx seed,
                                 const DivisorOptions& opt = {},
                                 cplx window_center = cplx(0.0, 0.0),
                                 double window_radius = 0.0,
                                 int* iterations_out = nullptr,
                                 double* residual_out = nullptr) {
    if (window_radius <= 0.0) {
        window_center = seed;
        window_radius = 0.5;
    }
    const double tol = opt.newton_tol_scale * (1.0 + std::abs(seed));
    cplx E = seed;
    for (int it = 0; it < opt.newton_max_iterations; ++it) {
        const cplx g = detail::dirichlet_shot(spec, E, x, opt.ode_tol);
        if (std::abs(g) < tol) {
            if (iterations_out) *iterations_out = it;
            if (residual_out) *residual_out = std::abs(g);
            return E;
        }
        const double h = 1e-6 * (1.0 + std::abs(E));
        const cplx deriv = (detail::dirichlet_shot(spec, E + h, x, opt.ode_tol) -
                            detail::dirichlet_shot(spec, E - h, x, opt.ode_tol)) /
                           (2.0 * h);
        if (std::abs(deriv) < 1e-300)
            throw NoConvergence("dirichlet_eigenvalue: flat shooting function");
        E -= g / deriv;
        if (std::abs(E - window_center) > window_radius)
            throw OutOfWindow(
                "dirichlet_eigenvalue: iterate left the resonance window");
    }
    throw NoConvergence("dirichlet_eigenvalue: Newton budget exhausted");
}

/// Traces gamma(x) over the given grid by continuation: the first sample is
/// seeded from the first-order prediction gamma(0) and each later one from
/// its predecessor. The first-order formula is used only at the start; from
/// there the previous sample is the better seed once the perturbation is only
/// moderately small.
inline DivisorTrajectory trace_divisor(const PotentialSpec& spec, int n,
                                       const std::vector<double>& x_grid,
                                       const DivisorOptions& opt = {}) {
    if (n < 1) throw std::invalid_argument("trace_divisor: n must be >= 1");
    if (x_grid.empty())
        throw std::invalid_argument("trace_divisor: empty grid");

    const double E0 = 0.25 * n * n;
    const double c_n = spec.coefficient(n);
    const double c_mn = spec.coefficient(-n);
    cplx seed = E0 - 0.5 * (c_n + c_mn); // prediction at x = 0
    const cplx window_center = E0;
    const double radius = detail::divisor_window_radius(spec, n, opt);

    DivisorTrajectory traj;
    traj.resonance_index = n;
    traj.samples.reserve(x_grid.size());
    for (double x : x_grid) {
        int iters = 0;
        double resid = 0.0;
        try {
            const cplx gamma = dirichlet_eigenvalue(spec, x, seed, opt,
                                                    window_center, radius,
                                                    &iters, &resid);
            traj.samples.push_back({x, gamma, iters, resid});
            seed = gamma;
        } catch (const Error& err) {
            const double last_good =
                traj.samples.empty() ? x_grid.front() : traj.samples.back().x;
            throw ContinuationBreak(std::string("trace_divisor: ") + err.what() +
                                        " at x = " + std::to_string(x),
                                    last_good, std::move(traj));
        }
    }
    return traj;
}

/// Geometric parameters of a direct least-squares conic fit.
struct EllipseFit {
    cplx center;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double rotation = 0.0; // major-axis angle against the real axis
    std::pair<cplx, cplx> foci;
    double rms_residual = 0.0; // RMS point-to-conic distance / semi-major
};

/// Trajectory is a segment, not an ellipse; endpoints ride along.
class DegenerateFit : public Error {
public:
    DegenerateFit(const std::string& what, cplx end_a, cplx end_b)
        : Error(what), endpoints(end_a, end_b) {}
    std::pair<cplx, cplx> endpoints;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

/// Direct least-squares ellipse fit (constrained conic, Fitzgibbon-style via
/// the block decomposition) followed by geometric parameter extraction.
/// Degenerate, segment-like data is detected up front by the principal
/// component ratio and reported as a segment instead of a flat conic.
inline EllipseFit fit_ellipse(const DivisorTrajectory& traj,
                              double degenerate_ratio = 1e-3) {
    const std::size_t m = traj.samples.size();
    if (m < 6) throw InsufficientSamples("fit_ellipse: need >= 6 samples");

    Eigen::VectorXd x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
        x(i) = traj.samples[i].gamma.real();
        y(i) = traj.samples[i].gamma.imag();
    }
    const double mx = x.mean(), my = y.mean();

    // principal-component pre-check for segments
    Eigen::Matrix2d cov;
    cov << (x.array() - mx).square().sum(), ((x.array() - mx) * (y.array() - my)).sum(),
        0.0, (y.array() - my).square().sum();
    cov(1, 0) = cov(0, 1);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> pca(cov);
    const double s_small = std::sqrt(std::max(pca.eigenvalues()(0), 0.0));
    const double s_large = std::sqrt(std::max(pca.eigenvalues()(1), 0.0));
    if (s_large <= 0.0 || s_small / s_large < degenerate_ratio) {
        const Eigen::Vector2d dir = pca.eigenvectors().col(1);
        double t_min = 0.0, t_max = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double t = (x(i) - mx) * dir(0) + (y(i) - my) * dir(1);
            t_min = std::min(t_min, t);
            t_max = std::max(t_max, t);
        }
        const cplx mid(mx, my), axis(dir(0), dir(1));
        throw DegenerateFit("fit_ellipse: samples are segment-like",
                            mid + t_min * axis, mid + t_max * axis);
    }

    // Halir-Flusser split of the Fitzgibbon generalized eigenproblem; data is
    // centered first for conditioning.
    Eigen::MatrixXd d1(m, 3), d2(m, 3);
    for (std::size_t i = 0; i < m; ++i) {
        const double u = x(i) - mx, v = y(i) - my;
        d1(i, 0) = u * u;
        d1(i, 1) = u * v;
        d1(i, 2) = v * v;
        d2(i, 0) = u;
        d2(i, 1) = v;
        d2(i, 2) = 1.0;
    }
    const Eigen::Matrix3d s1 = d1.transpose() * d1;
    const Eigen::Matrix3d s2 = d1.transpose() * d2;
    const Eigen::Matrix3d s3 = d2.transpose() * d2;
    const Eigen::Matrix3d t = -s3.ldlt().solve(s2.transpose());
    Eigen::Matrix3d reduced = s1 + s2 * t;
    Eigen::Matrix3d c1inv_m;
    // inverse of the constraint block C1 = [[0,0,2],[0,-1,0],[2,0,0]]
    c1inv_m.row(0) = 0.5 * reduced.row(2);
    c1inv_m.row(1) = -reduced.row(1);
    c1inv_m.row(2) = 0.5 * reduced.row(0);
    Eigen::EigenSolver<Eigen::Matrix3d> es(c1inv_m);
    if (es.info() != Eigen::Success)
        throw QRNoConvergence("fit_ellipse: eigen solver failed");
    Eigen::Vector3d quad = Eigen::Vector3d::Zero();
    bool found = false;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d v = es.eigenvectors().col(k).real();
        const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
        if (cond > 0.0) {
            quad = v;
            found = true;
            break;
        }
    }
    if (!found)
        throw DegenerateFit("fit_ellipse: no elliptical solution", cplx(mx, my),
                            cplx(mx, my));
    const Eigen::Vector3d lin = t * quad;
    const double A = quad(0), B = quad(1), C = quad(2);
    const double D = lin(0), Ec = lin(1), F = lin(2);

    // conic in centered coordinates -> center, axes, rotation
    Eigen::Matrix2d q;
    q << A, 0.5 * B, 0.5 * B, C;
    const Eigen::Vector2d rhs(-0.5 * D, -0.5 * Ec);
    const Eigen::Vector2d c0 = q.ldlt().solve(rhs);
    const double f_at_center = A * c0(0) * c0(0) + B * c0(0) * c0(1) +
                               C * c0(1) * c0(1) + D * c0(0) + Ec * c0(1) + F;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> qe(q);
    const double l0 = qe.eigenvalues()(0), l1 = qe.eigenvalues()(1);
    const double a0 = std::sqrt(std::max(-f_at_center / l0, 0.0));
    const double a1 = std::sqrt(std::max(-f_at_center / l1, 0.0));

    EllipseFit fit;
    Eigen::Vector2d major_dir;
    if (a0 >= a1) {
        fit.semi_major = a0;
        fit.semi_minor = a1;
        major_dir = qe.eigenvectors().col(0);
    } else {
        fit.semi_major = a1;
        fit.semi_minor = a0;
        major_dir = qe.eigenvectors().col(1);
    }
    fit.center = cplx(c0(0) + mx, c0(1) + my);
    fit.rotation = std::atan2(major_dir(1), major_dir(0));
    const double focal =
        std::sqrt(std::max(sq(fit.semi_major) - sq(fit.semi_minor), 0.0));
    const cplx axis(major_dir(0), major_dir(1));
    fit.foci = {fit.center + focal * axis, fit.center - focal * axis};

    // first-order point-to-conic distance, normalized by the semi-major axis
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = x(i) - mx, v = y(i) - my;
        const double val =
            A * u * u + B * u * v + C * v * v + D * u + Ec * v + F;
        const double gx = 2.0 * A * u + B * v + D;
        const double gy = B * u + 2.0 * C * v + Ec;
        const double grad = std::hypot(gx, gy);
        if (grad > 0.0) acc += sq(val / grad);
    }
    fit.rms_residual = std::sqrt(acc / m) / fit.semi_major;
    return fit;
}

/// One row of the coefficient-scaling study: potential scaled by `scale`,
/// trajectory retraced and refit, mismatches remeasured.
struct ScalingRow {
    double scale = 1.0;
    double focal_mismatch = 0.0;       // max distance fitted focus -> branch point
    double max_deviation = 0.0;        // sup |gamma(x) - first-order prediction|
    double rms_residual = 0.0;         // from the fit (0 for segments)
    bool segment = false;
};

/// Numerical verification that the divisor trajectory is an ellipse whose
/// foci sit on the branch points: traces the divisor, fits the conic, finds
/// the nearby branch points, and measures every advertised first-order
/// agreement, including how it all scales when the coefficients shrink.
struct DivisorEllipseReport {
    int n = 0;
    bool unperturbed = false; // constant trajectory, nothing to fit
    DivisorTrajectory trajectory;
    BranchPointSet branch_points;
    bool segment_case = false;
    std::pair<cplx, cplx> segment_endpoints;
    EllipseFit fit; // valid when !segment_case && !unperturbed
    double focal_mismatch = 0.0;
    double gamma0_imag_defect = 0.0;
    std::vector<ScalingRow> scaling_table;
    double deviation_slope = 0.0; // log-log slope of max_deviation vs scale
};

struct VerifyOptions {
    DivisorOptions divisor;
    SpectrumOptions spectrum;
    int samples_per_period = 512;
    std::vector<double> scalings{1.0, 0.5, 0.25};
};

namespace detail {

inline std::vector<double> divisor_grid(int n, int samples) {
    std::vector<double> grid(samples + 1);
    for (int i = 0; i <= samples; ++i) grid[i] = period / n * i / samples;
    return grid;
}

inline double focal_mismatch(const std::pair<cplx, cplx>& foci,
                             const BranchPointSet& bps) {
    double worst = 0.0;
    for (const cplx f : {foci.first, foci.second}) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& bp : bps.points)
            nearest = std::min(nearest, std::abs(f - bp.E));
        worst = std::max(worst, nearest);
    }
    return worst;
}

} // namespace detail

inline DivisorEllipseReport verify_divisor_ellipse(const PotentialSpec& spec,
                                                   int n,
                                                   const VerifyOptions& opt = {}) {
    DivisorEllipseReport rep;
    rep.n = n;
    const double c_n = spec.coefficient(n);
    const double c_mn = spec.coefficient(-n);
    const auto grid = detail::divisor_grid(n, opt.samples_per_period);

    if (c_n == 0.0 && c_mn == 0.0) {
        rep.unperturbed = true;
        rep.trajectory = trace_divisor(spec, n, grid, opt.divisor);
        for (const auto& s : rep.trajectory.samples)
            rep.gamma0_imag_defect =
                std::max(rep.gamma0_imag_defect, std::abs(s.gamma.imag()));
        return rep;
    }

    auto run_scale = [&](double scale, DivisorTrajectory& traj_out,
                         BranchPointSet& bps_out, ScalingRow& row) {
        const PotentialSpec scaled = spec.scaled(scale);
        const auto pred = ellipse_prediction(scaled, n);
        traj_out = trace_divisor(scaled, n, grid, opt.divisor);

        const auto fo = first_order_branch_points(0.25 * n * n,
                                                  scale * scale * c_n * c_mn);
        const double hw = std::max(
            {0.05, 4.0 * std::sqrt(std::abs(scale * scale * c_n * c_mn)), 0.1});
        Window window{0.25 * n * n - hw, 0.25 * n * n + hw, -hw, hw};
        bps_out = find_branch_points(scaled, window,
                                     {fo.first, fo.second, cplx(0.25 * n * n)},
                                     opt.spectrum);

        row.scale = scale;
        for (const auto& s : traj_out.samples)
            row.max_deviation = std::max(
                row.max_deviation, std::abs(s.gamma - pred.parametrization(s.x)));
        try {
            const EllipseFit fit = fit_ellipse(traj_out);
            row.focal_mismatch = detail::focal_mismatch(fit.foci, bps_out);
            row.rms_residual = fit.rms_residual;
            if (scale == 1.0) rep.fit = fit;
        } catch (const DegenerateFit& seg) {
            row.segment = true;
            row.focal_mismatch =
                detail::focal_mismatch(seg.endpoints, bps_out);
            if (scale == 1.0) {
                rep.segment_case = true;
                rep.segment_endpoints = seg.endpoints;
            }
        }
    };

    bool have_full = false;
    for (double scale : opt.scalings) {
        ScalingRow row;
        DivisorTrajectory traj;
        BranchPointSet bps;
        run_scale(scale, traj, bps, row);
        rep.scaling_table.push_back(row);
        if (scale == 1.0) {
            rep.trajectory = std::move(traj);
            rep.branch_points = std::move(bps);
            rep.focal_mismatch = row.focal_mismatch;
            have_full = true;
        }
    }
    if (!have_full) {
        ScalingRow row;
        run_scale(1.0, rep.trajectory, rep.branch_points, row);
        rep.focal_mismatch = row.focal_mismatch;
    }

    if (!rep.trajectory.samples.empty())
        rep.gamma0_imag_defect =
            std::abs(rep.trajectory.samples.front().gamma.imag());

    // log-log slope of the pointwise deviation against the scale factor
    if (rep.scaling_table.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (const auto& row : rep.scaling_table) {
            if (row.max_deviation <= 0.0) continue;
            const double lx = std::log(row.scale), ly = std::log(row.max_deviation);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++cnt;
        }
        if (cnt >= 2)
            rep.deviation_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    }
    return rep;
}

} // namespace ptbloch
