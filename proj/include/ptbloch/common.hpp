#pragma once

#include <complex>
#include <numbers>

namespace ptbloch {

using cplx = std::complex<double>;

inline constexpr double period = 2.0 * std::numbers::pi;

inline double sq(double v) { return v * v; }
inline cplx sq(cplx v) { return v * v; }

/// Axis-aligned rectangle in the complex E-plane.
struct Window {
    double re_min = -1.0;
    double re_max = 1.0;
    double im_min = -1.0;
    double im_max = 1.0;

    bool contains(cplx z) const {
        return z.real() >= re_min && z.real() <= re_max &&
               z.imag() >= im_min && z.imag() <= im_max;
    }
    bool empty() const { return re_min >= re_max || im_min >= im_max; }
    double diagonal() const {
        return std::hypot(re_max - re_min, im_max - im_min);
    }
};

} // namespace ptbloch
