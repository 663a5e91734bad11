#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "ptbloch/common.hpp"
#include "ptbloch/errors.hpp"
#include "ptbloch/potential.hpp"

namespace ptbloch {

/// Outcome of the first-order analysis of the resonance at E = n^2/4.
/// The sign of c_n * c_{-n} decides the picture: a real gap opens for a
/// positive product, a conjugate pair of branch points bounding a spectral
/// arc transversal to the real axis appears for a negative one, and a zero
/// product leaves a double point at this order (a statement that higher
/// orders may overturn, hence the explicit inconclusive flag).
enum class ResonanceVerdict { Gap, DoublePointAtFirstOrder, TransversalBand };

struct ResonanceReport {
    int n = 0;
    double E0 = 0.0;     // n^2/4
    double product = 0.0; // c_n * c_{-n}
    std::pair<cplx, cplx> first_order_branch_points;
    std::optional<std::pair<cplx, cplx>> numeric_branch_points;
    ResonanceVerdict verdict = ResonanceVerdict::DoublePointAtFirstOrder;
    bool inconclusive = false; // set exactly when product == 0
};

/// First-order branch points at the resonance n: E0 +- sqrt(c_n c_{-n}),
/// which is a real pair for a positive product and a conjugate imaginary
/// pair for a negative one.
inline std::pair<cplx, cplx> first_order_branch_points(double E0, double product) {
    const cplx root = std::sqrt(cplx(product, 0.0));
    return {E0 + root, E0 - root};
}

/// First-order classification of resonance n from the coefficients alone
/// (absent coefficients count as zero). Numeric refinement is attached by
/// spectrum::classify_resonance.
inline ResonanceReport first_order_report(const PotentialSpec& spec, int n) {
    if (n < 1) throw std::invalid_argument("first_order_report: n must be >= 1");
    ResonanceReport rep;
    rep.n = n;
    rep.E0 = 0.25 * n * n;
    rep.product = spec.coefficient(n) * spec.coefficient(-n);
    rep.first_order_branch_points = first_order_branch_points(rep.E0, rep.product);
    if (rep.product > 0.0) {
        rep.verdict = ResonanceVerdict::Gap;
    } else if (rep.product < 0.0) {
        rep.verdict = ResonanceVerdict::TransversalBand;
    } else {
        rep.verdict = ResonanceVerdict::DoublePointAtFirstOrder;
        rep.inconclusive = true;
    }
    return rep;
}

/// Truncated Hill matrix of the operator restricted to the Bloch sector with
/// multiplier exp(2 pi i alpha): entries [m,n] = delta_{mn} (m+alpha)^2 +
/// c_{m-n} over m, n in {-N..N} in the Fourier basis exp(i(k+alpha)x).
inline Eigen::MatrixXcd hill_matrix(const PotentialSpec& spec, double alpha,
                                    int half_size) {
    if (half_size < 1)
        throw std::invalid_argument("hill_matrix: half_size must be >= 1");
    const int size = 2 * half_size + 1;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(size, size);
    for (int row = 0; row < size; ++row) {
        const double k = row - half_size + alpha;
        m(row, row) = k * k;
    }
    for (const auto& [l, c] : spec.coefficients()) {
        // entry [m, n] gains c_l where m - n = l
        for (int row = 0; row < size; ++row) {
            const int col = row - l;
            if (col >= 0 && col < size) m(row, col) += c;
        }
    }
    return m;
}

/// All eigenvalues of a dense complex matrix, sorted by real part (imaginary
/// part breaking ties). Backed by Schur decomposition; cross-validation tool,
/// not the primary spectral path.
inline std::vector<cplx> hill_eigenvalues(const Eigen::MatrixXcd& matrix) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, false);
    if (solver.info() != Eigen::Success)
        throw QRNoConvergence("hill_eigenvalues: eigenvalue iteration failed");
    std::vector<cplx> ev(solver.eigenvalues().data(),
                         solver.eigenvalues().data() + matrix.rows());
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return ev;
}

/// The 2x2 resonant block coupling the near-degenerate Fourier modes
/// exp(i(n/2+delta)x) and exp(i(-n/2+delta)x):
///   [[E0 + delta^2 + n delta, c_n], [c_{-n}, E0 + delta^2 - n delta]].
inline Eigen::Matrix2cd resonant_block(const PotentialSpec& spec, int n,
                                       double delta) {
    if (n < 1) throw std::invalid_argument("resonant_block: n must be >= 1");
    const double E0 = 0.25 * n * n;
    Eigen::Matrix2cd block;
    block << E0 + delta * delta + n * delta, spec.coefficient(n),
        spec.coefficient(-n), E0 + delta * delta - n * delta;
    return block;
}

/// Closed-form eigenvalues of the resonant block:
///   lambda_+- = E0 + delta^2 +- sqrt(n^2 delta^2 + c_n c_{-n}).
inline std::pair<cplx, cplx> block_eigenvalues(int n, double delta, double c_n,
                                               double c_minus_n) {
    const double E0 = 0.25 * n * n;
    const cplx root = std::sqrt(cplx(n * n * delta * delta + c_n * c_minus_n, 0.0));
    const cplx base = E0 + delta * delta;
    return {base + root, base - root};
}

enum class Branch { Plus, Minus };

/// First-order Bloch eigenvector near resonance n, up to scalar multiples:
/// a two-mode combination A_+ e^{i n x / 2} + A_- e^{-i n x / 2} times
/// e^{i delta x}. Two algebraically equivalent coefficient forms exist; the
/// one with the larger leading coefficient is chosen for numerical sanity.
/// The energy of this vector is E0 + delta^2 + lambda_tilde.
class BlochVector {
public:
    BlochVector(int n, double delta, cplx a_plus, cplx a_minus, cplx lambda_tilde)
        : n_(n), delta_(delta), a_plus_(a_plus), a_minus_(a_minus),
          lambda_tilde_(lambda_tilde) {}

    /// Accepts complex x: the zero set generally lies off the real axis.
    cplx operator()(cplx x) const {
        const cplx half = cplx(0.0, 0.5 * n_) * x;
        return (a_plus_ * std::exp(half) + a_minus_ * std::exp(-half)) *
               std::exp(cplx(0.0, delta_) * x);
    }

    cplx a_plus() const { return a_plus_; }
    cplx a_minus() const { return a_minus_; }
    cplx lambda_tilde() const { return lambda_tilde_; }
    double delta() const { return delta_; }
    int n() const { return n_; }

    /// Exact second derivative (the vector is a finite exponential sum).
    cplx second_derivative(cplx x) const {
        const cplx mu_p = cplx(0.5 * n_ + delta_, 0.0);
        const cplx mu_m = cplx(-0.5 * n_ + delta_, 0.0);
        return -(a_plus_ * mu_p * mu_p * std::exp(cplx(0.0, 1.0) * mu_p * x) +
                 a_minus_ * mu_m * mu_m * std::exp(cplx(0.0, 1.0) * mu_m * x));
    }

private:
    int n_;
    double delta_;
    cplx a_plus_, a_minus_;
    cplx lambda_tilde_;
};

inline BlochVector bloch_vector(int n, double delta, double c_n,
                                double c_minus_n, Branch branch) {
    if (n < 1) throw std::invalid_argument("bloch_vector: n must be >= 1");
    const cplx root = std::sqrt(cplx(n * n * delta * delta + c_n * c_minus_n, 0.0));
    const cplx lt = branch == Branch::Plus ? root : -root;

    // Form A: coefficients (-c_n, n delta - lambda_tilde); form B:
    // (-n delta - lambda_tilde, -c_{-n}). Both span the same eigenvector
    // when nondegenerate.
    const cplx a1p = -c_n, a1m = n * delta - lt;
    const cplx a2p = -n * delta - lt, a2m = -c_minus_n;
    const double norm1 = std::max(std::abs(a1p), std::abs(a1m));
    const double norm2 = std::max(std::abs(a2p), std::abs(a2m));
    const double scale = std::abs(lt) + std::abs(n * delta) + std::abs(c_n) +
                         std::abs(c_minus_n);
    if (std::max(norm1, norm2) <= 1e-15 * (1.0 + scale))
        throw DegenerateVector(
            "bloch_vector: both representations vanish (unperturbed double point)");
    if (norm1 >= norm2) return BlochVector(n, delta, a1p, a1m, lt);
    return BlochVector(n, delta, a2p, a2m, lt);
}

/// Closed-form first-order prediction for the divisor trajectory at
/// resonance n: gamma(x) = E0 - (c_n e^{inx} + c_{-n} e^{-inx})/2, an ellipse
/// centered at E0 with real semi-axis |c_n + c_{-n}|/2 and imaginary
/// semi-axis |c_n - c_{-n}|/2, whose foci are the first-order branch points.
/// A vanishing axis degenerates the ellipse to a segment; downstream fitters
/// must not divide by the zero axis, hence the explicit flag.
struct EllipsePrediction {
    int n = 0;
    double c_n = 0.0;
    double c_minus_n = 0.0;
    cplx center;
    double semi_axis_real = 0.0;
    double semi_axis_imag = 0.0;
    std::pair<cplx, cplx> foci;
    bool degenerate_segment = false;

    /// gamma(x) = E0 + lambda_tilde(x); entire in x.
    cplx parametrization(cplx x) const {
        const cplx e = std::exp(cplx(0.0, 1.0) * static_cast<double>(n) * x);
        return center - 0.5 * (c_n * e + c_minus_n / e);
    }
    /// The quasimomentum shift paired with parametrization(x).
    cplx delta_at(cplx x) const {
        const cplx e = std::exp(cplx(0.0, 1.0) * static_cast<double>(n) * x);
        return 0.5 * (c_n * e - c_minus_n / e);
    }
    cplx lambda_tilde_at(cplx x) const { return parametrization(x) - center; }
};

inline EllipsePrediction ellipse_prediction(const PotentialSpec& spec, int n) {
    if (n < 1) throw std::invalid_argument("ellipse_prediction: n must be >= 1");
    EllipsePrediction pred;
    pred.n = n;
    pred.c_n = spec.coefficient(n);
    pred.c_minus_n = spec.coefficient(-n);
    if (pred.c_n == 0.0 && pred.c_minus_n == 0.0)
        throw DegenerateDivisor("ellipse_prediction: c_n = c_{-n} = 0");
    pred.center = 0.25 * n * n;
    pred.semi_axis_real = 0.5 * std::abs(pred.c_n + pred.c_minus_n);
    pred.semi_axis_imag = 0.5 * std::abs(pred.c_n - pred.c_minus_n);
    pred.foci = first_order_branch_points(pred.center.real(),
                                          pred.c_n * pred.c_minus_n);
    pred.degenerate_segment =
        pred.semi_axis_real == 0.0 || pred.semi_axis_imag == 0.0;
    return pred;
}

} // namespace ptbloch
