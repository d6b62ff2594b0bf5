#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadrature.hpp"

namespace preavg {

enum class WeightSupport { Bounded01, ExpDecay };
enum class Fn { G, Gprime };

// A weight function g with its derivative and the constants
// psi_1 = int g'^2, psi_2 = int g^2,
// Phi_22 = int_0^inf phi_{g,g}^2, Phi_12 = int_0^inf phi_{g,g} phi_{g',g'},
// Phi_11 = int_0^inf phi_{g',g'}^2,
// where phi_{u,v}(y) = int u(x-y) v(x) dx.
struct WeightSpec {
    std::string name;
    std::function<double(double)> g;
    std::function<double(double)> dg;
    WeightSupport support = WeightSupport::Bounded01;
    double decay_rate = 0.0;           // for ExpDecay: |g| ~ e^{-decay_rate |x|}
    std::vector<double> kinks;         // kink locations of g (quadrature breakpoints)

    double psi1 = 0.0, psi2 = 0.0;
    double phi22 = 0.0, phi12 = 0.0, phi11 = 0.0;
    double const_error = 0.0;          // quadrature error estimate for the constants

    // Closed forms, when registered; null otherwise.
    std::function<double(double)> phi_gg_closed;
    std::function<double(double)> phi_dgdg_closed;
};

struct WeightConstants {
    double psi1, psi2, phi22, phi12, phi11;
    double error;  // max quadrature error estimate
};

// Half width of the x-integration domain needed so the neglected tail of g
// is below `tail_tol`.
inline double support_halfwidth(const WeightSpec& spec, double tail_tol = 1e-14) {
    if (spec.support == WeightSupport::Bounded01) return 1.0;
    return std::log(1.0 / tail_tol) / spec.decay_rate;
}

// Cross-correlation phi_{u,v}(y) = int u(x-y) v(x) dx by adaptive quadrature,
// or the registered closed form when available.
inline QuadResult phi_quadrature(Fn u, Fn v, const WeightSpec& spec, double y, double tol = 1e-12) {
    const auto& fu = (u == Fn::G) ? spec.g : spec.dg;
    const auto& fv = (v == Fn::G) ? spec.g : spec.dg;
    double lo, hi;
    if (spec.support == WeightSupport::Bounded01) {
        lo = std::max(0.0, y);
        hi = std::min(1.0, 1.0 + y);
        if (hi <= lo) return {};
    } else {
        const double w = support_halfwidth(spec);
        lo = std::min(0.0, y) - w;
        hi = std::max(0.0, y) + w;
    }
    std::vector<double> bps;
    for (double k : spec.kinks) {
        bps.push_back(k);
        bps.push_back(k + y);
    }
    return integrate([&](double x) { return fu(x - y) * fv(x); }, lo, hi, tol, bps);
}

inline double phi(Fn u, Fn v, const WeightSpec& spec, double y) {
    if (u == Fn::G && v == Fn::G && spec.phi_gg_closed) return spec.phi_gg_closed(y);
    if (u == Fn::Gprime && v == Fn::Gprime && spec.phi_dgdg_closed) return spec.phi_dgdg_closed(y);
    const QuadResult r = phi_quadrature(u, v, spec, y);
    if (r.error > 1e-6) throw std::runtime_error("phi: quadrature did not converge, error estimate " +
                                                 std::to_string(r.error));
    return r.value;
}

// The five constants computed by quadrature (double quadrature for the Phi
// integrals; the inner phi evaluation uses a tighter tolerance).
inline WeightConstants constants_quadrature(const WeightSpec& spec, double outer_tol = 1e-11,
                                            double inner_tol = 1e-12, double tail_tol = 1e-14) {
    WeightConstants c{};
    double lo, hi;
    if (spec.support == WeightSupport::Bounded01) {
        lo = 0.0;
        hi = 1.0;
    } else {
        const double w = support_halfwidth(spec, tail_tol);
        lo = -w;
        hi = w;
    }
    const QuadResult q1 = integrate([&](double x) { double v = spec.dg(x); return v * v; },
                                    lo, hi, inner_tol, spec.kinks);
    const QuadResult q2 = integrate([&](double x) { double v = spec.g(x); return v * v; },
                                    lo, hi, inner_tol, spec.kinks);
    c.psi1 = q1.value;
    c.psi2 = q2.value;

    // phi_{g,g} and phi_{g',g'} vanish outside |y| <= (support width).
    // The three outer integrals evaluate the inner integrals at overlapping
    // abscissae, so cache them.
    const double ymax = (spec.support == WeightSupport::Bounded01) ? 1.0 : 2.0 * support_halfwidth(spec, tail_tol);
    std::map<double, double> gg_cache, dd_cache;
    auto pgg = [&](double y) -> double {
        if (spec.phi_gg_closed) return spec.phi_gg_closed(y);
        auto it = gg_cache.find(y);
        if (it != gg_cache.end()) return it->second;
        const double v = phi_quadrature(Fn::G, Fn::G, spec, y, inner_tol).value;
        gg_cache.emplace(y, v);
        return v;
    };
    auto pdd = [&](double y) -> double {
        if (spec.phi_dgdg_closed) return spec.phi_dgdg_closed(y);
        auto it = dd_cache.find(y);
        if (it != dd_cache.end()) return it->second;
        const double v = phi_quadrature(Fn::Gprime, Fn::Gprime, spec, y, inner_tol).value;
        dd_cache.emplace(y, v);
        return v;
    };
    const QuadResult q22 = integrate([&](double y) { double v = pgg(y); return v * v; }, 0.0, ymax, outer_tol, spec.kinks);
    const QuadResult q12 = integrate([&](double y) { return pgg(y) * pdd(y); }, 0.0, ymax, outer_tol, spec.kinks);
    const QuadResult q11 = integrate([&](double y) { double v = pdd(y); return v * v; }, 0.0, ymax, outer_tol, spec.kinks);
    c.phi22 = q22.value;
    c.phi12 = q12.value;
    c.phi11 = q11.value;
    c.error = std::max({q1.error, q2.error, q22.error, q12.error, q11.error});
    if (c.error > 1e-8) throw std::runtime_error("constants: quadrature error above 1e-8");
    return c;
}

inline WeightConstants constants(const WeightSpec& spec) {
    return {spec.psi1, spec.psi2, spec.phi22, spec.phi12, spec.phi11, spec.const_error};
}

// Tent weight g(x) = min(x, 1-x) on [0,1]. psi_1 = 1, psi_2 = 1/12 in closed
// form; the Phi constants come from quadrature.
inline WeightSpec make_tent() {
    WeightSpec s;
    s.name = "tent";
    s.support = WeightSupport::Bounded01;
    s.g = [](double x) { return (x <= 0.0 || x >= 1.0) ? 0.0 : std::min(x, 1.0 - x); };
    s.dg = [](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return x < 0.5 ? 1.0 : -1.0;
    };
    s.kinks = {0.0, 0.5, 1.0};
    const WeightConstants c = constants_quadrature(s);
    s.psi1 = 1.0;        // g' = +-1 a.e. on (0,1)
    s.psi2 = 1.0 / 12.0; // int_0^1 min(x,1-x)^2 dx
    s.phi22 = c.phi22;
    s.phi12 = c.phi12;
    s.phi11 = c.phi11;
    s.const_error = c.error;
    return s;
}

// Double exponential weight g(x) = e^{-r|x|}. All constants in closed form:
// psi_1 = r, psi_2 = 1/r, Phi_22 = 5/(4 r^3), Phi_12 = 1/(4 r), Phi_11 = r/4;
// phi_{g,g}(y) = (|y| + 1/r) e^{-r|y|}, phi_{g',g'}(y) = r (1 - r|y|) e^{-r|y|}.
inline WeightSpec make_double_exponential(double rate = 1.0) {
    if (rate <= 0.0) throw std::invalid_argument("make_double_exponential: rate must be positive");
    WeightSpec s;
    s.name = rate == 1.0 ? "doubleexp" : "doubleexp:" + std::to_string(rate);
    s.support = WeightSupport::ExpDecay;
    s.decay_rate = rate;
    s.g = [rate](double x) { return std::exp(-rate * std::abs(x)); };
    s.dg = [rate](double x) {
        if (x == 0.0) return 0.0;
        return (x > 0.0 ? -rate : rate) * std::exp(-rate * std::abs(x));
    };
    s.kinks = {0.0};
    s.psi1 = rate;
    s.psi2 = 1.0 / rate;
    s.phi22 = 5.0 / (4.0 * rate * rate * rate);
    s.phi12 = 1.0 / (4.0 * rate);
    s.phi11 = rate / 4.0;
    s.const_error = 0.0;
    s.phi_gg_closed = [rate](double y) {
        const double a = std::abs(y);
        return (a + 1.0 / rate) * std::exp(-rate * a);
    };
    s.phi_dgdg_closed = [rate](double y) {
        const double a = std::abs(y);
        return rate * (1.0 - rate * a) * std::exp(-rate * a);
    };
    return s;
}

// Parse "tent" or "doubleexp" / "doubleexp:<rate>".
inline WeightSpec make_weight(const std::string& name) {
    if (name == "tent") return make_tent();
    if (name == "doubleexp") return make_double_exponential(1.0);
    if (name.rfind("doubleexp:", 0) == 0) return make_double_exponential(std::stod(name.substr(10)));
    throw std::invalid_argument("unknown weight: " + name);
}

// Window size k_n = round(theta * sqrt(n)), floored at 2.
inline int window_size(double theta, long n) {
    if (theta <= 0.0 || n < 1) throw std::invalid_argument("window_size: theta > 0 and n >= 1 required");
    const long k = std::lround(theta * std::sqrt(static_cast<double>(n)));
    return static_cast<int>(std::max<long>(2, k));
}

// Discrete-sum counterparts of (psi_1, psi_2) for window k_n:
//   psi_2^k = (1/k_n) sum_j g(j/k_n)^2,
//   psi_1^k = k_n sum_j (g(j/k_n) - g((j-1)/k_n))^2,
// over the full integer support. Normalizing the estimator with these instead
// of the continuous integrals removes an O(1/k_n) finite-sample bias.
inline std::pair<double, double> discrete_psi(const WeightSpec& spec, int k_n) {
    if (k_n < 2) throw std::invalid_argument("discrete_psi: k_n >= 2 required");
    long J = k_n;
    if (spec.support == WeightSupport::ExpDecay)
        J = static_cast<long>(std::ceil(k_n * std::log(1e16) / spec.decay_rate)) + 1;
    double s1 = 0.0, s2 = 0.0;
    for (long j = -J; j <= J; ++j) {
        const double g = spec.g(static_cast<double>(j) / k_n);
        const double gm = spec.g(static_cast<double>(j - 1) / k_n);
        s2 += g * g;
        s1 += (g - gm) * (g - gm);
    }
    // close the telescoping difference sum at the right edge
    const double gj = spec.g(static_cast<double>(J) / k_n);
    s1 += gj * gj;
    return {k_n * s1, s2 / k_n};
}

// Weight samples g(j/k_n) for j = -d_n..d_n, plus first differences.
// For bounded support the effective range is j = 1..k_n-1.
struct DiscreteWeights {
    int k_n = 0;
    int d_n = 0;                 // truncation half width
    std::vector<double> s;       // s[j + d_n] = g(j / k_n)
    std::vector<double> diff;    // diff[j + d_n] = g((j+1)/k_n) - g(j/k_n)

    double at(int j) const { return (j < -d_n || j > d_n) ? 0.0 : s[j + d_n]; }
};

inline DiscreteWeights discretize(const WeightSpec& spec, int k_n, double tolerance = 1e-12) {
    if (k_n < 2) throw std::invalid_argument("discretize: k_n >= 2 required");
    DiscreteWeights dw;
    dw.k_n = k_n;
    if (spec.support == WeightSupport::Bounded01) {
        dw.d_n = k_n - 1;
    } else {
        // solve e^{-rate * d/k_n} = tolerance
        dw.d_n = static_cast<int>(std::ceil(k_n * std::log(1.0 / tolerance) / spec.decay_rate));
    }
    dw.s.resize(2 * dw.d_n + 1);
    for (int j = -dw.d_n; j <= dw.d_n; ++j) dw.s[j + dw.d_n] = spec.g(static_cast<double>(j) / k_n);
    dw.diff.resize(2 * dw.d_n + 1);
    for (int j = -dw.d_n; j <= dw.d_n; ++j) dw.diff[j + dw.d_n] = dw.at(j + 1) - dw.at(j);
    return dw;
}

}  // namespace preavg
