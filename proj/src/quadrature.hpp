#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace pflow::detail {

// Boost's recursive driver compares an unscaled round-off floor with a scaled
// tolerance, which forces full-depth recursion on short intervals; the
// bisection is therefore done here around the fixed 7/15 rules.
template <class F>
double gk_bisect(F& f, double a, double b, double k15, double abs_tol, int depth, double* err) {
    const double g7 = boost::math::quadrature::gauss<double, 7>::integrate(f, a, b);
    const double e = std::abs(k15 - g7);
    if (depth <= 0 || e <= abs_tol || e <= 1e-15 * std::abs(k15)) {
        if (err) *err += e;
        return k15;
    }
    const double mid = 0.5 * (a + b);
    const double kl = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, mid, 0);
    const double kr = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, mid, b, 0);
    return gk_bisect(f, a, mid, kl, 0.5 * abs_tol, depth - 1, err) +
           gk_bisect(f, mid, b, kr, 0.5 * abs_tol, depth - 1, err);
}

/// Adaptive Gauss-Kronrod (7/15) on [a, b] to relative tolerance tol;
/// a > b flips the sign. `err` accumulates the |K15 - G7| estimates.
template <class F>
double integrate_gk(F&& f, double a, double b, double tol = 1e-12, int max_depth = 30, double* err = nullptr) {
    if (a == b) return 0.0;
    if (a > b) return -integrate_gk(f, b, a, tol, max_depth, err);
    const double k = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0);
    return gk_bisect(f, a, b, k, tol * std::abs(k) + 1e-300, max_depth, err);
}

}  // namespace pflow::detail
