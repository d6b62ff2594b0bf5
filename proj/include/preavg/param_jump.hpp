#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace preavg {

// Parametric jump model: z_i = sigma W_{i/n} + sum_k gamma_k 1{S_k <= i/n} + eps_i,
// i = 1..n, with known sigma, Ups > 0 and jump times S_k in (0,1).
// The differencing matrix D_n is lower bidiagonal (1 / -1); the covariance of
// D_n z is the MA(1)-type tridiagonal V_n.

struct TriDiag {
    std::vector<double> diag;
    std::vector<double> off;  // sub/super diagonal (symmetric)
};

inline int jump_index(long n, double s) { return static_cast<int>(std::ceil(n * s)); }

// V_n: diag sigma^2/n + 2 Ups (first entry sigma^2/n + Ups), off-diag -Ups.
inline TriDiag build_v_matrix(long n, double sigma, double ups) {
    if (n < 2) throw std::invalid_argument("build_v_matrix: n >= 2 required");
    TriDiag v;
    v.diag.assign(n, sigma * sigma / static_cast<double>(n) + 2.0 * ups);
    v.diag[0] = sigma * sigma / static_cast<double>(n) + ups;
    v.off.assign(n - 1, -ups);
    return v;
}

// Apply D_n: (Dz)_1 = z_1, (Dz)_i = z_i - z_{i-1}.
inline std::vector<double> apply_differencing(const std::vector<double>& z) {
    std::vector<double> out(z.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = z[i] - prev;
        prev = z[i];
    }
    return out;
}

// Closed-form eigenvalues of V_n:
// lambda_i = sigma^2/n + 4 Ups sin^2[(pi/2)(2i-1)/(2n+1)], i = 1..n.
inline double eigenvalue(long n, double sigma, double ups, long i) {
    const double s = std::sin(M_PI / 2.0 * (2.0 * i - 1.0) / (2.0 * n + 1.0));
    return sigma * sigma / static_cast<double>(n) + 4.0 * ups * s * s;
}

// Closed-form entries of the orthogonal U_n diagonalizing V_n:
// U^{ij} = (2/sqrt(2n+1)) cos[(2 pi/(2n+1)) (i - 1/2)(j - 1/2)].
inline double u_entry(long n, long i, long j) {
    return 2.0 / std::sqrt(2.0 * n + 1.0) *
           std::cos(2.0 * M_PI / (2.0 * n + 1.0) * (i - 0.5) * (j - 0.5));
}

// Fisher-information entry n^{-1/2} sum_j U^{i(k)j} U^{i(l)j} / lambda_j,
// which converges to (2 sigma sqrt(Ups))^{-1} 1{k=l}.
inline double fisher_entry(long n, double sigma, double ups, double s_k, double s_l) {
    const int ik = jump_index(n, s_k), il = jump_index(n, s_l);
    double acc = 0.0;
    for (long j = 1; j <= n; ++j)
        acc += u_entry(n, ik, j) * u_entry(n, il, j) / eigenvalue(n, sigma, ups, j);
    return acc / std::sqrt(static_cast<double>(n));
}

// Thomas algorithm: solve V x = b for tridiagonal symmetric positive definite V.
inline std::vector<double> tridiag_solve(const TriDiag& v, std::vector<double> b) {
    const std::size_t n = v.diag.size();
    if (b.size() != n) throw std::invalid_argument("tridiag_solve: size mismatch");
    std::vector<double> c(n - 1);
    double piv = v.diag[0];
    if (piv == 0.0) throw std::runtime_error("tridiag_solve: singular matrix");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        c[i] = v.off[i] / piv;
        b[i] /= piv;
        piv = v.diag[i + 1] - v.off[i] * c[i];
        if (piv == 0.0) throw std::runtime_error("tridiag_solve: singular matrix");
        b[i + 1] -= v.off[i] * b[i];
    }
    b[n - 1] /= piv;
    for (std::size_t i = n - 1; i-- > 0;) b[i] -= c[i] * b[i + 1];
    return b;
}

// MLE-type jump-size estimator (Prop-style linear estimator): the i(k)-th
// components of 2 sigma sqrt(Ups) n^{-1/2} V_n^{-1} D_n z.
inline std::vector<double> jump_mle(const std::vector<double>& z, double sigma, double ups,
                                    const std::vector<double>& jump_times) {
    if (ups <= 0.0) throw std::invalid_argument("jump_mle: Ups must be positive");
    const long n = static_cast<long>(z.size());
    const TriDiag v = build_v_matrix(n, sigma, ups);
    const std::vector<double> x = tridiag_solve(v, apply_differencing(z));
    const double scale = 2.0 * sigma * std::sqrt(ups) / std::sqrt(static_cast<double>(n));
    std::vector<double> out;
    out.reserve(jump_times.size());
    for (double s : jump_times) out.push_back(scale * x[jump_index(n, s) - 1]);
    return out;
}

// Simulate one observation vector from the parametric jump model.
inline std::vector<double> simulate_jump_model(long n, double sigma, double ups,
                                               const std::vector<double>& jump_times,
                                               const std::vector<double>& jump_sizes, Rng& rng) {
    std::vector<double> z(n);
    double w = 0.0;
    const double sdt = sigma / std::sqrt(static_cast<double>(n));
    const double su = std::sqrt(ups);
    for (long i = 1; i <= n; ++i) {
        w += sdt * rng.normal();
        double jump = 0.0;
        for (std::size_t k = 0; k < jump_times.size(); ++k)
            if (jump_times[k] <= static_cast<double>(i) / static_cast<double>(n)) jump += jump_sizes[k];
        z[i - 1] = w + jump + su * rng.normal();
    }
    return z;
}

}  // namespace preavg
