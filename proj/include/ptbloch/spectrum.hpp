#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ptbloch/common.hpp"
#include "ptbloch/errors.hpp"
#include "ptbloch/monodromy.hpp"
#include "ptbloch/parallel.hpp"
#include "ptbloch/perturbation.hpp"
#include "ptbloch/potential.hpp"
#include "ptbloch/roots.hpp"

namespace ptbloch {

enum class Multiplicity { Simple, DoubleWithinTolerance };

struct BranchPoint {
    cplx E;
    Multiplicity multiplicity = Multiplicity::Simple;
};

/// Converged roots of Delta(E)^2 = 4 inside a scan window, i.e. the
/// periodic/antiperiodic eigenvalues bounding bands and gaps.
struct BranchPointSet {
    std::vector<BranchPoint> points;
    int resonance_index = 0;
    std::vector<cplx> failed_seeds; // Newton non-convergence, recorded not fatal
};

struct SpectrumOptions {
    double ode_tol = 1e-10;
    double newton_tol = 1e-11; // Newton target residual on Delta^2 - 4
    double accept_tol = 1e-9;  // best-iterate acceptance; also the set invariant
    int newton_max_iterations = 80;
    double dedup_distance = 1e-7;       // same root found twice
    double double_point_distance = 1e-6; // two roots merged into a double
    double derivative_cutoff = 1e-5;     // |Delta'| below => double tag
    unsigned jobs = 0;                    // 0 = hardware concurrency
};

namespace detail {
inline cplx discriminant_derivative(const PotentialSpec& spec, cplx E,
                                    double ode_tol) {
    const double h = 1e-6 * (1.0 + std::abs(E));
    return (discriminant(spec, E + h, ode_tol) -
            discriminant(spec, E - h, ode_tol)) /
           (2.0 * h);
}
} // namespace detail

/// Newton search for roots of Delta^2 - 4 from the given seeds (typically
/// the first-order predictions around a resonance). Converged roots are
/// deduplicated; roots closer than the double-point tolerance, or roots
/// where Delta' nearly vanishes, are tagged DoubleWithinTolerance. The
/// first-order degenerate case (zero coefficient product) is never resolved
/// here, only tagged. Seeds run in parallel; failures are recorded per seed.
inline BranchPointSet find_branch_points(const PotentialSpec& spec,
                                         const Window& window,
                                         const std::vector<cplx>& seeds,
                                         const SpectrumOptions& opt = {}) {
    if (window.empty())
        throw std::invalid_argument("find_branch_points: empty window");

    NewtonOptions newton_opt;
    newton_opt.residual_tol = opt.newton_tol;
    newton_opt.max_iterations = opt.newton_max_iterations;

    std::vector<std::optional<cplx>> converged(seeds.size());
    std::vector<cplx> failed(seeds.size());
    parallel_for(seeds.size(), opt.jobs, [&](std::size_t i) {
        auto f = [&](cplx E) {
            const cplx d = discriminant(spec, E, opt.ode_tol);
            return d * d - 4.0;
        };
        const NewtonResult res = newton_complex(f, seeds[i], newton_opt);
        // A residual stuck just above the Newton target but below accept_tol
        // is the signature of a (near-)double root evaluated at integrator
        // accuracy; keep the best iterate in that case.
        if (std::abs(res.residual) < opt.accept_tol && window.contains(res.value))
            converged[i] = res.value;
        else
            failed[i] = seeds[i];
    });

    BranchPointSet set;
    std::vector<cplx> roots;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (converged[i])
            roots.push_back(*converged[i]);
        else
            set.failed_seeds.push_back(seeds[i]);
    }

    // Deduplicate: identical roots collapse; near-identical pairs merge into
    // a double-within-tolerance point at their mean.
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        cplx sum = roots[i];
        int count = 1;
        bool merged_pair = false;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            const double dist = std::abs(roots[j] - sum / double(count));
            if (dist < opt.double_point_distance) {
                merged_pair = merged_pair || dist >= opt.dedup_distance;
                sum += roots[j];
                ++count;
                used[j] = true;
            }
        }
        BranchPoint bp;
        bp.E = sum / double(count);
        const cplx dprime = detail::discriminant_derivative(spec, bp.E, opt.ode_tol);
        bp.multiplicity = (merged_pair || std::abs(dprime) <= opt.derivative_cutoff)
                              ? Multiplicity::DoubleWithinTolerance
                              : Multiplicity::Simple;
        set.points.push_back(bp);
    }
    std::sort(set.points.begin(), set.points.end(),
              [](const BranchPoint& a, const BranchPoint& b) {
                  if (a.E.real() != b.E.real()) return a.E.real() < b.E.real();
                  return a.E.imag() < b.E.imag();
              });
    return set;
}

/// Default seeds for a window scan: the resonant points n^2/4 together with
/// their first-order splittings.
inline std::vector<cplx> default_branch_seeds(const PotentialSpec& spec,
                                              int n_max) {
    std::vector<cplx> seeds;
    for (int n = 1; n <= n_max; ++n) {
        const auto rep = first_order_report(spec, n);
        seeds.push_back(rep.E0);
        if (rep.product != 0.0) {
            seeds.push_back(rep.first_order_branch_points.first);
            seeds.push_back(rep.first_order_branch_points.second);
        }
    }
    return seeds;
}

enum class ArcEnd { BranchPoint, WindowBoundary, Closed, Start };

struct LocusSample {
    cplx E;
    double theta = 0.0; // Delta = 2 cos(theta), theta in [0, pi]
};

struct LocusArc {
    std::vector<LocusSample> samples;
    ArcEnd front_end = ArcEnd::Start;
    ArcEnd back_end = ArcEnd::Start;
};

/// The spectral locus {E : Delta(E) in [-2, 2] subset of R} as polyline arcs.
struct SpectralLocus {
    std::vector<LocusArc> arcs;
};

struct TraceOptions {
    double ode_tol = 1e-10;
    double trace_tol = 1e-9; // corrector residual on Im Delta
    double initial_step = 1e-3;
    double min_step = 1e-9;
    double max_step = 0.05;
    std::size_t max_samples = 20000;
};

namespace detail {

struct TraceState {
    cplx E;
    cplx delta;
    cplx dprime;
};

/// One-dimensional Newton correction of E onto Im Delta = 0 along the fixed
/// complex direction `normal`. Returns false when the corrector stalls.
inline bool correct_onto_locus(const PotentialSpec& spec, cplx& E, cplx normal,
                               const TraceOptions& opt) {
    for (int it = 0; it < 10; ++it) {
        const cplx d = discriminant(spec, E, opt.ode_tol);
        if (std::abs(d.imag()) < opt.trace_tol) return true;
        const double h = 1e-6 * (1.0 + std::abs(E));
        const cplx dp = (discriminant(spec, E + h, opt.ode_tol) -
                         discriminant(spec, E - h, opt.ode_tol)) /
                        (2.0 * h);
        const double slope = (dp * normal).imag();
        if (std::abs(slope) < 1e-300) return false;
        E -= normal * (d.imag() / slope);
    }
    return std::abs(discriminant(spec, E, opt.ode_tol).imag()) < opt.trace_tol;
}

inline double theta_of(cplx delta) {
    return std::acos(std::clamp(0.5 * delta.real(), -1.0, 1.0));
}

} // namespace detail

/// Predictor-corrector continuation of the implicit curve Im Delta(E) = 0
/// restricted to |Re Delta| <= 2, started from a point on (or polished onto)
/// the locus. The tangent comes from the implicit function theorem: moving
/// along conj(Delta') changes Delta to first order by the real number
/// |Delta'|, so that direction follows the level set. Near critical points
/// of Delta (arc crossings) the previous direction is kept to pass through.
/// An arc terminates by polishing onto Delta = +-2 (a branch point), at the
/// window boundary, or on self-closure; both directions from the start are
/// traced and joined.
inline SpectralLocus trace_locus(const PotentialSpec& spec, cplx start,
                                 const Window& window,
                                 const TraceOptions& opt = {}) {
    // Polish the start onto the locus along the steepest direction for
    // Im Delta. Callers may hand in a first-order estimate.
    {
        cplx d = discriminant(spec, start, opt.ode_tol);
        for (int it = 0; it < 30 && std::abs(d.imag()) >= opt.trace_tol; ++it) {
            const double h = 1e-6 * (1.0 + std::abs(start));
            const cplx dp = (discriminant(spec, start + h, opt.ode_tol) -
                             discriminant(spec, start - h, opt.ode_tol)) /
                            (2.0 * h);
            if (std::abs(dp) < 1e-300) break;
            const cplx normal = cplx(0.0, 1.0) * std::conj(dp) / std::abs(dp);
            const double slope = (dp * normal).imag(); // = |dp|
            start -= normal * (d.imag() / slope);
            d = discriminant(spec, start, opt.ode_tol);
        }
        if (std::abs(d.imag()) >= opt.trace_tol)
            throw std::invalid_argument(
                "trace_locus: start could not be brought onto the locus");
        if (std::abs(d.real()) > 2.0 + opt.trace_tol)
            throw std::invalid_argument(
                "trace_locus: start lies in a gap (|Re Delta| > 2)");
        if (!window.contains(start))
            throw std::invalid_argument("trace_locus: start outside window");
    }

    const cplx d0 = discriminant(spec, start, opt.ode_tol);
    const cplx dp0 = detail::discriminant_derivative(spec, start, opt.ode_tol);

    auto trace_direction = [&](double orientation, std::vector<LocusSample>& out,
                               ArcEnd& end_flag) {
        cplx E = start;
        cplx tangent = std::abs(dp0) > 1e-12
                           ? orientation * std::conj(dp0) / std::abs(dp0)
                           : cplx(orientation, 0.0);
        double h = opt.initial_step;
        int stalls = 0;
        double arclen = 0.0;
        while (out.size() < opt.max_samples) {
            // refresh tangent; keep the previous one near critical points
            const cplx dp = detail::discriminant_derivative(spec, E, opt.ode_tol);
            if (std::abs(dp) > 1e-9) {
                cplx t = std::conj(dp) / std::abs(dp);
                if ((std::conj(tangent) * t).real() < 0.0) t = -t;
                tangent = t;
            }
            cplx Enew = E + h * tangent;
            const bool ok =
                detail::correct_onto_locus(spec, Enew, cplx(0.0, 1.0) * tangent, opt);
            if (!ok || (std::conj(Enew - E) * tangent).real() <= 0.0) {
                h *= 0.5;
                if (h < opt.min_step && ++stalls >= 5)
                    throw StallError("trace_locus: corrector stalled at minimal step");
                continue;
            }
            stalls = 0;

            const cplx d = discriminant(spec, Enew, opt.ode_tol);
            if (std::abs(d.real()) > 2.0) {
                // passed a band edge: polish onto Delta = +-2 and stop
                const double target = d.real() > 0.0 ? 2.0 : -2.0;
                auto f = [&](cplx z) {
                    return discriminant(spec, z, opt.ode_tol) - target;
                };
                NewtonOptions nopt;
                nopt.residual_tol = opt.trace_tol;
                const NewtonResult res = newton_complex(f, Enew, nopt);
                if (res.converged) {
                    out.push_back({res.value, detail::theta_of(target)});
                    end_flag = ArcEnd::BranchPoint;
                } else {
                    out.push_back({Enew, detail::theta_of(d)});
                    end_flag = ArcEnd::WindowBoundary;
                }
                return;
            }
            if (!window.contains(Enew)) {
                end_flag = ArcEnd::WindowBoundary;
                return;
            }
            arclen += std::abs(Enew - E);
            E = Enew;
            out.push_back({E, detail::theta_of(d)});
            if (arclen > 3.0 * opt.initial_step && std::abs(E - start) < h) {
                end_flag = ArcEnd::Closed;
                return;
            }
            h = std::min(opt.max_step, h * 1.25);
        }
        end_flag = ArcEnd::WindowBoundary; // sample budget acts like a boundary
    };

    LocusArc arc;
    std::vector<LocusSample> forward, backward;
    ArcEnd forward_end = ArcEnd::Start, backward_end = ArcEnd::Start;
    trace_direction(+1.0, forward, forward_end);
    const bool closed = forward_end == ArcEnd::Closed;
    if (!closed) trace_direction(-1.0, backward, backward_end);

    arc.samples.reserve(forward.size() + backward.size() + 1);
    for (auto it = backward.rbegin(); it != backward.rend(); ++it)
        arc.samples.push_back(*it);
    arc.samples.push_back({start, detail::theta_of(d0)});
    for (const auto& s : forward) arc.samples.push_back(s);
    arc.front_end = closed ? ArcEnd::Closed : backward_end;
    arc.back_end = forward_end;

    SpectralLocus locus;
    locus.arcs.push_back(std::move(arc));
    return locus;
}

/// First-order classification of resonance n refined by Newton-located
/// branch points near n^2/4.
inline ResonanceReport classify_resonance(const PotentialSpec& spec, int n,
                                          const SpectrumOptions& opt = {}) {
    ResonanceReport rep = first_order_report(spec, n);

    const double spread = std::sqrt(std::abs(rep.product));
    const double halfwidth =
        std::max({0.05, 4.0 * spread, 0.1 * (2 * n - 1) / 4.0});
    Window window{rep.E0 - halfwidth, rep.E0 + halfwidth, -halfwidth, halfwidth};

    std::vector<cplx> seeds{rep.first_order_branch_points.first,
                            rep.first_order_branch_points.second};
    if (rep.product == 0.0) seeds = {cplx(rep.E0, 0.0)};

    const BranchPointSet found = find_branch_points(spec, window, seeds, opt);
    if (found.points.empty()) {
        if (!found.failed_seeds.empty())
            throw NoConvergence("classify_resonance: no branch point converged");
        return rep;
    }
    // pair each numeric point with the nearest first-order prediction
    auto nearest = [&](cplx target) {
        cplx best = found.points.front().E;
        for (const auto& bp : found.points)
            if (std::abs(bp.E - target) < std::abs(best - target)) best = bp.E;
        return best;
    };
    rep.numeric_branch_points = {nearest(rep.first_order_branch_points.first),
                                 nearest(rep.first_order_branch_points.second)};
    return rep;
}

} // namespace ptbloch
