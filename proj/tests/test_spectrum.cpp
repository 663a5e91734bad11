#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ptbloch/spectrum.hpp"

using namespace ptbloch;
using Catch::Approx;

namespace {
const Window wide{-1.0, 5.0, -1.0, 1.0};
}

TEST_CASE("free resonant point is a double within tolerance", "[spectrum]") {
    const BranchPointSet set =
        find_branch_points(PotentialSpec{}, Window{0.0, 0.5, -0.2, 0.2}, {0.25});
    REQUIRE(set.points.size() == 1);
    CHECK(std::abs(set.points[0].E - 0.25) < 1e-7);
    CHECK(set.points[0].multiplicity == Multiplicity::DoubleWithinTolerance);
    CHECK(set.failed_seeds.empty());
}

TEST_CASE("cos potential opens a real gap at the first resonance", "[spectrum]") {
    const PotentialSpec spec({{1, 0.05}, {-1, 0.05}}); // 0.1 cos x
    const BranchPointSet set =
        find_branch_points(spec, wide, {cplx(0.2), cplx(0.3)});
    REQUIRE(set.points.size() == 2);
    // frozen oracle values (matrix truncation and shooting routes agree)
    CHECK(std::abs(set.points[0].E - cplx(0.19878096702106)) < 1e-6);
    CHECK(std::abs(set.points[1].E - cplx(0.29871851480111)) < 1e-6);
    CHECK(set.points[0].multiplicity == Multiplicity::Simple);
    CHECK(set.points[1].multiplicity == Multiplicity::Simple);
    // first-order prediction 0.25 +- 0.05 holds to O(eps^2)
    CHECK(std::abs(set.points[0].E - cplx(0.20)) < 2e-3);
    CHECK(std::abs(set.points[1].E - cplx(0.30)) < 2e-3);
}

TEST_CASE("PT potential with negative product yields a conjugate pair", "[spectrum]") {
    const PotentialSpec spec({{1, 0.2}, {-1, -0.05}});
    const BranchPointSet set =
        find_branch_points(spec, wide, {cplx(0.25, 0.1), cplx(0.25, -0.1)});
    REQUIRE(set.points.size() == 2);
    const cplx lower = set.points[0].E.imag() < 0 ? set.points[0].E : set.points[1].E;
    const cplx upper = set.points[0].E.imag() < 0 ? set.points[1].E : set.points[0].E;
    CHECK(std::abs(upper - std::conj(lower)) < 1e-8);
    // frozen oracle from two independent routes
    CHECK(std::abs(upper - cplx(0.25499574788145, 0.10025076144887)) < 1e-6);
    // residual invariant for simple points
    for (const auto& bp : set.points) {
        const cplx d = discriminant(spec, bp.E);
        CHECK(std::abs(d * d - 4.0) < 1e-9);
    }
}

TEST_CASE("one-sided potential keeps the double point at first order", "[spectrum]") {
    const PotentialSpec spec({{1, 0.1}});
    const BranchPointSet set =
        find_branch_points(spec, Window{0.0, 0.5, -0.2, 0.2}, {0.25});
    REQUIRE(set.points.size() == 1);
    CHECK(set.points[0].multiplicity == Multiplicity::DoubleWithinTolerance);
    CHECK(std::abs(set.points[0].E - 0.25) < 1e-5);
}

TEST_CASE("branch points of PT potentials close under conjugation", "[spectrum]") {
    const PotentialSpec spec({{1, 0.3}, {-1, -0.1}, {2, 0.05}});
    const auto seeds = default_branch_seeds(spec, 2);
    const BranchPointSet set = find_branch_points(spec, wide, seeds);
    REQUIRE(!set.points.empty());
    for (const auto& bp : set.points) {
        double nearest = 1e9;
        for (const auto& other : set.points)
            nearest = std::min(nearest, std::abs(std::conj(bp.E) - other.E));
        CHECK(nearest < 1e-8);
    }
}

TEST_CASE("real potentials have real branch points", "[spectrum]") {
    const PotentialSpec spec({{1, 0.08}, {-1, 0.08}, {2, 0.02}, {-2, 0.02}});
    const auto seeds = default_branch_seeds(spec, 2);
    const BranchPointSet set = find_branch_points(spec, wide, seeds);
    REQUIRE(!set.points.empty());
    for (const auto& bp : set.points) CHECK(std::abs(bp.E.imag()) < 1e-8);
}

TEST_CASE("gap agreement improves quadratically in the coefficient scale", "[spectrum]") {
    std::vector<double> eps{0.04, 0.02, 0.01};
    std::vector<double> errs;
    for (double e : eps) {
        const PotentialSpec spec({{1, e}, {-1, e}});
        const BranchPointSet set =
            find_branch_points(spec, wide, {cplx(0.25 - e), cplx(0.25 + e)});
        REQUIRE(set.points.size() == 2);
        const double err =
            std::max(std::abs(set.points[0].E - cplx(0.25 - e)),
                     std::abs(set.points[1].E - cplx(0.25 + e)));
        errs.push_back(err);
    }
    const double slope = std::log(errs.front() / errs.back()) /
                         std::log(eps.front() / eps.back());
    CHECK(slope > 1.7);
    CHECK(slope < 2.3);
}

TEST_CASE("failed seeds are recorded, not fatal", "[spectrum]") {
    // a seed far outside the window converges to a root not contained in it
    const BranchPointSet set = find_branch_points(
        PotentialSpec{}, Window{0.0, 0.5, -0.1, 0.1}, {cplx(0.25), cplx(4.1)});
    CHECK(set.points.size() == 1);
    CHECK(set.failed_seeds.size() == 1);
}

TEST_CASE("empty window is rejected", "[spectrum]") {
    CHECK_THROWS_AS(
        find_branch_points(PotentialSpec{}, Window{1.0, -1.0, 0.0, 0.0}, {}),
        std::invalid_argument);
}

TEST_CASE("free locus follows the positive real axis", "[spectrum]") {
    const SpectralLocus locus =
        trace_locus(PotentialSpec{}, cplx(0.1), Window{-0.5, 3.0, -0.5, 0.5});
    REQUIRE(locus.arcs.size() == 1);
    const auto& arc = locus.arcs[0];
    REQUIRE(arc.samples.size() > 10);
    double re_min = 1e9, re_max = -1e9;
    for (const auto& s : arc.samples) {
        CHECK(std::abs(s.E.imag()) < 1e-7);
        const cplx d = discriminant(PotentialSpec{}, s.E);
        CHECK(std::abs(d.imag()) < 1e-8);
        CHECK(d.real() > -2.0 - 1e-8);
        CHECK(d.real() < 2.0 + 1e-8);
        CHECK(std::abs(d.real() - 2.0 * std::cos(s.theta)) < 1e-8);
        re_min = std::min(re_min, s.E.real());
        re_max = std::max(re_max, s.E.real());
    }
    // the free spectrum is [0, infinity): the arc should span the window
    CHECK(re_min < 0.01);
    CHECK(re_max > 2.5);
}

TEST_CASE("self-adjoint locus stays on the real axis", "[spectrum]") {
    const PotentialSpec spec({{1, 0.05}, {-1, 0.05}});
    const SpectralLocus locus =
        trace_locus(spec, cplx(0.12), Window{-0.5, 1.1, -0.5, 0.5});
    REQUIRE(locus.arcs.size() == 1);
    for (const auto& s : locus.arcs[0].samples)
        CHECK(std::abs(s.E.imag()) < 1e-6);
    // this band ends at the gap edge near 0.19878
    CHECK(locus.arcs[0].back_end == ArcEnd::BranchPoint);
}

TEST_CASE("transversal arc joins the conjugate branch points", "[spectrum]") {
    const PotentialSpec spec({{1, 0.2}, {-1, -0.05}});
    const cplx bp_up(0.25499574788145, 0.10025076144887);
    const SpectralLocus locus =
        trace_locus(spec, cplx(0.2575, 0.05), Window{-0.5, 1.0, -0.5, 0.5});
    REQUIRE(locus.arcs.size() == 1);
    const auto& arc = locus.arcs[0];
    REQUIRE(arc.samples.size() > 5);
    CHECK(arc.front_end == ArcEnd::BranchPoint);
    CHECK(arc.back_end == ArcEnd::BranchPoint);
    const cplx first = arc.samples.front().E;
    const cplx last = arc.samples.back().E;
    const double d1 = std::min(std::abs(first - bp_up), std::abs(first - std::conj(bp_up)));
    const double d2 = std::min(std::abs(last - bp_up), std::abs(last - std::conj(bp_up)));
    CHECK(d1 < 1e-6);
    CHECK(d2 < 1e-6);
    CHECK(first.imag() * last.imag() < 0.0); // opposite half-planes

    // the arc crosses the real axis near E0 + |c_1 c_{-1}| (frozen oracle
    // value of the critical point: 0.26520189933550)
    double crossing = 1e9;
    for (std::size_t i = 1; i < arc.samples.size(); ++i) {
        const cplx a = arc.samples[i - 1].E, b = arc.samples[i].E;
        if (a.imag() * b.imag() <= 0.0 && std::abs(a.imag()) + std::abs(b.imag()) > 0) {
            const double t = std::abs(a.imag()) / (std::abs(a.imag()) + std::abs(b.imag()));
            crossing = a.real() + t * (b.real() - a.real());
            break;
        }
    }
    REQUIRE(crossing < 1e9);
    CHECK(crossing == Approx(0.26520189933550).margin(2e-3));
    CHECK(std::abs(crossing - 0.26) < 2e-2);
}

TEST_CASE("arc endpoints flagged as branch points match the root finder", "[spectrum]") {
    const PotentialSpec spec({{1, 0.05}, {-1, 0.05}});
    const SpectralLocus locus =
        trace_locus(spec, cplx(0.12), Window{-0.5, 1.1, -0.5, 0.5});
    // seed the resonances plus the ground band edge near 0
    auto seeds = default_branch_seeds(spec, 2);
    seeds.push_back(cplx(0.0));
    const BranchPointSet set = find_branch_points(spec, wide, seeds);
    int endpoint_count = 0;
    for (const auto& arc : locus.arcs) {
        for (const cplx endpoint :
             {arc.front_end == ArcEnd::BranchPoint ? arc.samples.front().E
                                                   : cplx(1e9),
              arc.back_end == ArcEnd::BranchPoint ? arc.samples.back().E
                                                  : cplx(1e9)}) {
            if (endpoint == cplx(1e9)) continue;
            ++endpoint_count;
            double nearest = 1e9;
            for (const auto& bp : set.points)
                nearest = std::min(nearest, std::abs(endpoint - bp.E));
            CHECK(nearest < 1e-6);
        }
    }
    CHECK(endpoint_count >= 1);
}

TEST_CASE("trace_locus rejects a start in a gap", "[spectrum]") {
    const PotentialSpec spec({{1, 0.05}, {-1, 0.05}});
    // 0.25 sits inside the opened gap (0.19878, 0.29872): Delta < -2 there
    CHECK_THROWS_AS(trace_locus(spec, cplx(0.25), Window{-0.5, 1.0, -0.5, 0.5}),
                    std::invalid_argument);
}

TEST_CASE("classify_resonance across the three coefficient cases", "[spectrum]") {
    SECTION("gap case") {
        const ResonanceReport rep =
            classify_resonance(PotentialSpec({{1, 0.05}, {-1, 0.05}}), 1);
        CHECK(rep.verdict == ResonanceVerdict::Gap);
        CHECK_FALSE(rep.inconclusive);
        REQUIRE(rep.numeric_branch_points.has_value());
        // paired with the first-order ordering (E0 + root, E0 - root)
        CHECK(std::abs(rep.numeric_branch_points->first - cplx(0.3)) < 2e-3);
        CHECK(std::abs(rep.numeric_branch_points->second - cplx(0.2)) < 2e-3);
        CHECK(std::abs(rep.numeric_branch_points->first.imag()) < 1e-8);
    }
    SECTION("one-sided case is inconclusive at first order") {
        const ResonanceReport rep = classify_resonance(PotentialSpec({{1, 0.1}}), 1);
        CHECK(rep.verdict == ResonanceVerdict::DoublePointAtFirstOrder);
        CHECK(rep.inconclusive);
        REQUIRE(rep.numeric_branch_points.has_value());
        CHECK(std::abs(rep.numeric_branch_points->first - 0.25) < 1e-5);
    }
    SECTION("transversal band case") {
        const ResonanceReport rep =
            classify_resonance(PotentialSpec({{1, 0.2}, {-1, -0.05}}), 1);
        CHECK(rep.verdict == ResonanceVerdict::TransversalBand);
        REQUIRE(rep.numeric_branch_points.has_value());
        const cplx up = rep.numeric_branch_points->first.imag() > 0
                            ? rep.numeric_branch_points->first
                            : rep.numeric_branch_points->second;
        CHECK(std::abs(up - cplx(0.25, 0.1)) < 6e-3); // first order + O(eps^2)
    }
}
