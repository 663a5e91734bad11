#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "ptbloch/common.hpp"

namespace ptbloch {

/// A 2pi-periodic potential given by a finite Fourier series
///
///     u(x) = sum_l c_l exp(i l x),   l != 0.
///
/// Real coefficients are exactly the PT condition u(x) = conj(u(-x)) for this
/// form, so the public constructor takes real values and rejects l = 0 (a
/// constant term would shift every resonant energy n^2/4). Coefficients are
/// stored sparsely; c_l and c_{-l} are independent. Instances are immutable
/// and safe to share across threads.
class PotentialSpec {
public:
    PotentialSpec() = default;

    explicit PotentialSpec(const std::map<int, double>& coefficients) {
        for (const auto& [l, c] : coefficients) {
            if (l == 0)
                throw std::invalid_argument(
                    "PotentialSpec: index 0 is not allowed (constant offset)");
            if (!std::isfinite(c))
                throw std::invalid_argument(
                    "PotentialSpec: coefficient must be finite");
            if (c != 0.0) coeffs_[l] = cplx(c, 0.0);
        }
    }

    /// Unchecked construction from complex coefficients. Only useful to feed
    /// pt_check with inputs that violate the PT condition; the rest of the
    /// library assumes specs built through the checked constructor.
    static PotentialSpec raw_unchecked(const std::map<int, cplx>& coefficients) {
        PotentialSpec spec;
        for (const auto& [l, c] : coefficients)
            if (c != cplx(0.0)) spec.coeffs_[l] = c;
        return spec;
    }

    /// u(x) = sum_l c_l exp(i l x)
    cplx evaluate(double x) const {
        cplx sum = 0.0;
        for (const auto& [l, c] : coeffs_)
            sum += c * std::polar(1.0, static_cast<double>(l) * x);
        return sum;
    }

    const std::map<int, cplx>& coefficients() const { return coeffs_; }

    /// c_l, or 0 when the index is absent.
    double coefficient(int l) const {
        auto it = coeffs_.find(l);
        return it == coeffs_.end() ? 0.0 : it->second.real();
    }

    bool empty() const { return coeffs_.empty(); }

    /// sum_l |c_l|; the natural magnitude scale of the perturbation.
    double coefficient_norm() const {
        double s = 0.0;
        for (const auto& [l, c] : coeffs_) s += std::abs(c);
        return s;
    }

    int max_index() const {
        int m = 0;
        for (const auto& [l, c] : coeffs_) m = std::max(m, std::abs(l));
        return m;
    }

    /// The same potential with every coefficient multiplied by `factor`.
    PotentialSpec scaled(double factor) const {
        PotentialSpec spec;
        for (const auto& [l, c] : coeffs_)
            if (factor * c != cplx(0.0)) spec.coeffs_[l] = factor * c;
        return spec;
    }

private:
    std::map<int, cplx> coeffs_;
};

/// True iff the stored series defines a PT-symmetric potential: every
/// coefficient real, no constant term, and the sampled identity
/// u(x) = conj(u(-x)) holds on a grid to ~1e-14 relative.
inline bool pt_check(const PotentialSpec& spec) {
    for (const auto& [l, c] : spec.coefficients()) {
        if (l == 0) return false;
        if (c.imag() != 0.0) return false;
    }
    const double scale = 1.0 + spec.coefficient_norm();
    for (int k = 0; k < 17; ++k) {
        const double x = period * k / 17.0 - 2.0;
        if (std::abs(spec.evaluate(x) - std::conj(spec.evaluate(-x))) >
            1e-14 * scale)
            return false;
    }
    return true;
}

/// Builds a PotentialSpec from uniform samples of a real 2pi-periodic
/// function over one period (sample j at x = 2pi j / N). The mean of the
/// samples is returned through `c0` and dropped from the spec, so spectra of
/// the returned potential are shifted by -c0 relative to the sampled one.
/// Throws std::invalid_argument when the samples are not PT-representable
/// (imaginary Fourier residue above `tol` times the sample scale).
inline PotentialSpec spec_from_samples(const std::vector<double>& samples,
                                       double& c0, int max_modes = 0,
                                       double tol = 1e-8) {
    const int n = static_cast<int>(samples.size());
    if (n < 4) throw std::invalid_argument("spec_from_samples: need >= 4 samples");
    if (max_modes <= 0 || max_modes > n / 2 - 1) max_modes = n / 2 - 1;

    double scale = 0.0;
    for (double v : samples) scale = std::max(scale, std::abs(v));
    scale += 1.0;

    std::map<int, double> coeffs;
    for (int l = -max_modes; l <= max_modes; ++l) {
        cplx acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += samples[j] * std::polar(1.0, -l * period * j / n);
        acc /= static_cast<double>(n);
        if (l == 0) {
            c0 = acc.real();
            continue;
        }
        if (std::abs(acc.imag()) > tol * scale)
            throw std::invalid_argument(
                "spec_from_samples: samples are not PT-representable "
                "(complex Fourier coefficient)");
        if (std::abs(acc.real()) > 1e-14 * scale) coeffs[l] = acc.real();
    }
    return PotentialSpec(coeffs);
}

} // namespace ptbloch
