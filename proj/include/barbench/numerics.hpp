#pragma once

#include <cmath>
#include <functional>

#include "barbench/errors.hpp"

namespace barbench {

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

// `force` keeps splitting regardless of the error estimate; piecewise
// integrands with symmetric kinks can cancel the Richardson difference at a
// coarse level and trick the usual acceptance test.
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth, int force) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || (force <= 0 && std::abs(delta) <= 15.0 * tol))
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, force - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, force - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with absolute tolerance.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-12, int max_depth = 48) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth, 6);
}

// int_0^c t^p e^{-z t} dt for integer p >= 0, valid for z of either sign.
// For integer p this is p! (1 - e^{-zc} sum_{i<=p} (zc)^i / i!) / z^{p+1};
// near z = 0 the removable singularity is evaluated by series.
inline double truncated_power_exp_integral(int p, double z, double c) {
    if (c <= 0.0) return 0.0;
    if (std::abs(z) * c < 1e-6) {
        // sum_{m>=0} (-z)^m c^{p+m+1} / (m! (p+m+1)), four terms
        double term = 1.0;  // (-z)^m / m!
        double s = 0.0;
        for (int m = 0; m < 4; ++m) {
            s += term * std::pow(c, p + m + 1) / (p + m + 1);
            term *= -z / (m + 1);
        }
        return s;
    }
    double fact = 1.0;
    double zc_pow = 1.0;  // (zc)^i / i!
    double tail = 1.0;
    const double zc = z * c;
    for (int i = 1; i <= p; ++i) {
        fact *= i;
        zc_pow *= zc / i;
        tail += zc_pow;
    }
    return fact * (1.0 - std::exp(-zc) * tail) / std::pow(z, p + 1);
}

// Scalar root finding for strictly increasing g: returns x with g(x) = target.
// Expands a bracket from x0 by doubling, bisects, then polishes with Newton
// when a derivative is supplied. `tol` is an absolute tolerance on g(x)-target.
struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

inline RootResult solve_increasing(const std::function<double(double)>& g, double target,
                                   const std::function<double(double)>& dg,
                                   double x0 = 0.0, double tol = 1e-13,
                                   double bracket_limit = 1e6) {
    RootResult out;
    double lo = x0, hi = x0;
    double glo = g(lo), ghi = glo;
    int iters = 0;
    if (glo <= target) {
        double step = 1.0;
        while (ghi < target) {
            lo = hi;
            glo = ghi;
            hi = x0 + step;
            if (hi > bracket_limit)
                throw NonConvergenceError("root bracket exceeded limit (degenerate distribution?)");
            ghi = g(hi);
            step *= 2.0;
            ++iters;
        }
    } else {
        double step = 1.0;
        while (glo > target) {
            hi = lo;
            ghi = glo;
            lo = x0 - step;
            if (lo < -bracket_limit)
                throw NonConvergenceError("root bracket exceeded limit (degenerate distribution?)");
            glo = g(lo);
            step *= 2.0;
            ++iters;
        }
    }
    out.bracket_lo = lo;
    out.bracket_hi = hi;

    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 90 && hi - lo > 1e-14 * (1.0 + std::abs(x)); ++i) {
        x = 0.5 * (lo + hi);
        const double gx = g(x);
        if (gx < target)
            lo = x;
        else
            hi = x;
        ++iters;
        if (std::abs(gx - target) <= tol) break;
    }
    // Newton polish
    for (int i = 0; i < 5; ++i) {
        const double gx = g(x);
        if (std::abs(gx - target) <= tol * 0.01) break;
        const double d = dg(x);
        if (d <= 0.0) break;
        const double next = x - (gx - target) / d;
        if (next < lo || next > hi) break;
        x = next;
        ++iters;
    }
    out.x = x;
    out.residual = g(x) - target;
    out.iterations = iters;
    return out;
}

}  // namespace barbench
