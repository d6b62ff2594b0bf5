#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace preavg {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
};

namespace detail {

// Adaptive Simpson on one interval.
inline void adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                             double fa, double fm, double fb, double whole, double tol,
                             int depth, QuadResult& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        out.value += left + right + delta / 15.0;
        out.error += std::abs(delta) / 15.0;
        return;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out);
    adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

// Adaptive quadrature of f on [a,b] with optional interior breakpoints
// (placed at kinks of the integrand so the smooth pieces converge fast).
inline QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                            double tol = 1e-11, std::vector<double> breakpoints = {}) {
    if (!(b > a)) return {};
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    QuadResult out;
    double lo = a;
    for (double bp : breakpoints) {
        if (bp <= lo || bp > b) continue;
        const double hi = std::min(bp, b);
        const double m = 0.5 * (lo + hi);
        const double fa = f(lo), fm = f(m), fb = f(hi);
        const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        detail::adaptive_simpson(f, lo, hi, fa, fm, fb, whole, tol, 48, out);
        lo = hi;
    }
    return out;
}

}  // namespace preavg
