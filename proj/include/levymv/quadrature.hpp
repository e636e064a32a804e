#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <stdexcept>

namespace levymv {

/// Fixed-order Gauss-Legendre rule on [a, b].
template <class F>
double gauss_panel(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 15>::integrate(f, a, b);
}

/// Integral of f over (0, upper] for an integrand that may blow up at 0 like
/// a power law. Dyadic panels shrink towards the origin; the remainder below
/// the last panel uses the locally fitted exponent f(y) ~ y^p. Throws when the
/// fitted exponent is not integrable (p <= -1).
template <class F>
double integrate_near_zero(F&& f, double upper, int halvings = 60) {
    double total = 0.0;
    double hi = upper;
    for (int k = 0; k < halvings; ++k) {
        const double lo = hi * 0.5;
        total += gauss_panel(f, lo, hi);
        hi = lo;
    }
    const double y0 = hi;
    const double f0 = f(y0);
    const double f1 = f(2.0 * y0);
    if (f0 == 0.0 && f1 == 0.0) return total;
    if (!(f0 > 0.0 && f1 > 0.0) && !(f0 < 0.0 && f1 < 0.0))
        throw std::invalid_argument("integrate_near_zero: integrand changes sign next to the origin");
    const double p = std::log(f1 / f0) / std::log(2.0);
    if (!(p > -1.0)) throw std::invalid_argument("integrate_near_zero: integrand is not integrable at 0");
    return total + f0 * y0 / (p + 1.0);
}

} // namespace levymv
