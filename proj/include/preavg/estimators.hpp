#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "tick_data.hpp"
#include "timegrid.hpp"
#include "weights.hpp"

namespace preavg {

// ---- pre-averaging building blocks --------------------------------------

// Bounded-support pre-averaging on a synchronized value series v_0..v_N:
// Ybar_i = sum_{p=1}^{k_n-1} g(p/k_n) (v_{i+p} - v_{i+p-1}), i = 0..N-k_n+1.
inline std::vector<double> preaverage_bounded(const std::vector<double>& values, const WeightSpec& spec,
                                              int k_n) {
    const long N = static_cast<long>(values.size()) - 1;
    if (N < k_n) throw std::invalid_argument("preaverage_bounded: need N_T >= k_n");
    std::vector<double> w(k_n);
    for (int p = 1; p < k_n; ++p) w[p] = spec.g(static_cast<double>(p) / k_n);
    std::vector<double> out(N - k_n + 2);
    for (long i = 0; i <= N - k_n + 1; ++i) {
        double acc = 0.0;
        for (int p = 1; p < k_n; ++p) acc += w[p] * (values[i + p] - values[i + p - 1]);
        out[i] = acc;
    }
    return out;
}

// Adjusted (jittered) returns: the first and last k_n observations are
// replaced by their averages, and returns are re-anchored to those averages.
// Valid indices are p = k_n .. N - k_n + 1.
struct AdjustedReturns {
    int p_lo = 0;  // = k_n
    std::vector<double> r;

    long p_hi() const { return p_lo + static_cast<long>(r.size()) - 1; }
    double at(long p) const { return r[p - p_lo]; }
};

inline AdjustedReturns jitter(const std::vector<double>& values, int k_n) {
    const long N = static_cast<long>(values.size()) - 1;
    if (N < 2 * k_n + 1) throw std::invalid_argument("jitter: need N_T >= 2 k_n + 1");
    double head = 0.0, tail = 0.0;
    for (int p = 0; p < k_n; ++p) head += values[p];
    for (long p = N - k_n + 1; p <= N; ++p) tail += values[p];
    head /= k_n;
    tail /= k_n;

    AdjustedReturns adj;
    adj.p_lo = k_n;
    adj.r.resize(N - 2 * k_n + 2);
    adj.r.front() = values[k_n] - head;
    for (long p = k_n + 1; p <= N - k_n; ++p) adj.r[p - k_n] = values[p] - values[p - 1];
    adj.r.back() = tail - values[N - k_n];
    return adj;
}

// Jittered pre-averaging by direct summation with the truncated discrete
// weights: Ytil_i = sum_p g((p-i)/k_n) dtil_p, i over the same index range.
inline std::vector<double> preaverage_jittered(const AdjustedReturns& adj, const DiscreteWeights& dw) {
    const long lo = adj.p_lo, hi = adj.p_hi();
    std::vector<double> out(adj.r.size(), 0.0);
    for (long i = lo; i <= hi; ++i) {
        const long p0 = std::max(lo, i - dw.d_n), p1 = std::min(hi, i + static_cast<long>(dw.d_n));
        double acc = 0.0;
        for (long p = p0; p <= p1; ++p) acc += dw.at(static_cast<int>(p - i)) * adj.at(p);
        out[i - lo] = acc;
    }
    return out;
}

// O(N) pre-averaging for g(x) = e^{-rate |x|} via the forward/backward
// geometric recursions; exact (no truncation):
// Ytil_i = y+_i + y-_{(mirror of i)} - dtil_i.
inline std::vector<double> preaverage_exponential(const AdjustedReturns& adj, double rate, int k_n) {
    const double q = std::exp(-rate / static_cast<double>(k_n));
    const std::size_t m = adj.r.size();
    std::vector<double> fwd(m), bwd(m);
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        acc = q * acc + adj.r[j];
        fwd[j] = acc;
    }
    acc = 0.0;
    for (std::size_t j = m; j-- > 0;) {
        acc = q * acc + adj.r[j];
        bwd[j] = acc;
    }
    std::vector<double> out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = fwd[j] + bwd[j] - adj.r[j];
    return out;
}

// ---- MRC ----------------------------------------------------------------

struct EstimateReport {
    Mat estimate;
    Mat bias_correction;  // the matrix actually subtracted
    long N_T = 0;
    long n = 0;  // frequency parameter used (defaults to N_T)
    int k_n = 0;
    double theta = 0.0;
    std::string weight;
    bool jittered = true;
    bool grid_truncated = false;
    double long_run_variation = std::numeric_limits<double>::quiet_NaN();
};

struct MrcOptions {
    bool jittered = true;       // false: original bounded-support construction
    bool force_direct = false;  // bypass the O(N) exponential recursion
    long n_override = 0;        // 0: use n = N_T
    int lrv_m = 0;              // if > 0, compute the S_{n,m} diagnostic
};

namespace detail {

inline std::vector<std::vector<double>> synced_values(const std::vector<TickSchedule>& schedules,
                                                      const SyncGrid& sg) {
    std::vector<std::vector<double>> v(schedules.size());
    for (std::size_t k = 0; k < schedules.size(); ++k) {
        if (!schedules[k].has_values()) throw std::invalid_argument("mrc: schedule has no values");
        const auto& idx = sg.tau_index[k];
        v[k].resize(idx.size());
        for (std::size_t p = 0; p < idx.size(); ++p) v[k][p] = schedules[k].values[idx[p]];
    }
    return v;
}

}  // namespace detail

// The (adjusted) MRC estimator on possibly non-synchronous tick data:
// synchronize by refresh times + next-tick interpolation, pre-average with
// weight g and window k_n = round(theta sqrt(n)), and bias-correct with
// (psi_1 / (2 psi_2 k_n^2)) [Y,Y]^n_T.
inline EstimateReport mrc(const std::vector<TickSchedule>& schedules, const WeightSpec& spec,
                          double theta, double horizon, const MrcOptions& opts = {}) {
    const auto grid = refresh_times(schedules, horizon);
    const SyncGrid sg = next_tick_interpolate(schedules, grid, horizon);
    const int d = sg.assets();
    const long N = sg.last_index();
    const long n = opts.n_override > 0 ? opts.n_override : N;
    if (N < 1) throw std::invalid_argument("mrc: not enough synchronized observations");
    const int k_n = window_size(theta, n);

    EstimateReport rep;
    rep.N_T = N;
    rep.n = n;
    rep.k_n = k_n;
    rep.theta = theta;
    rep.weight = spec.name;
    rep.jittered = opts.jittered;
    rep.grid_truncated = sg.truncated;

    const auto v = detail::synced_values(schedules, sg);

    // pre-averaged vectors per asset
    std::vector<std::vector<double>> ybar(d);
    if (opts.jittered) {
        if (N < 2 * k_n + 1) throw std::invalid_argument("mrc: need N_T >= 2 k_n + 1");
        DiscreteWeights dw;
        const bool fast = spec.support == WeightSupport::ExpDecay && !opts.force_direct;
        if (!fast) dw = discretize(spec, k_n);
        for (int k = 0; k < d; ++k) {
            const AdjustedReturns adj = jitter(v[k], k_n);
            ybar[k] = fast ? preaverage_exponential(adj, spec.decay_rate, k_n)
                           : preaverage_jittered(adj, dw);
        }
    } else {
        if (spec.support != WeightSupport::Bounded01)
            throw std::invalid_argument("mrc: non-jittered form requires a bounded-support weight");
        for (int k = 0; k < d; ++k) ybar[k] = preaverage_bounded(v[k], spec, k_n);
    }

    Mat sum(d);
    std::vector<double> yi(d);
    const std::size_t blocks = ybar[0].size();
    for (std::size_t i = 0; i < blocks; ++i) {
        for (int k = 0; k < d; ++k) yi[k] = ybar[k][i];
        sum.add_outer(yi);
    }

    Mat yy(d);
    std::vector<double> dp(d);
    for (long p = 1; p <= N; ++p) {
        for (int k = 0; k < d; ++k) dp[k] = v[k][p] - v[k][p - 1];
        yy.add_outer(dp);
    }

    const auto [psi1, psi2] = discrete_psi(spec, k_n);
    // Finite-sample adjustments (both vanish asymptotically): scale the block
    // sum up to the N returns it would cover without edge truncation, and undo
    // the diffusion part the noise correction spuriously removes, whose
    // relative size is psi1/(2 psi2 k_n^2).
    const double edge = static_cast<double>(N) / static_cast<double>(blocks);
    const double eps = psi1 / (2.0 * psi2 * k_n * k_n);
    rep.bias_correction = yy * (psi1 / (2.0 * psi2 * k_n * k_n));
    rep.estimate = (sum * (edge / (psi2 * k_n)) - rep.bias_correction) * (1.0 / (1.0 - eps));
    if (opts.lrv_m > 0)
        rep.long_run_variation = long_run_variation(sg.grid, static_cast<double>(n), opts.lrv_m, horizon);
    return rep;
}

// MRC with the double exponential weight through the O(N) recursion.
inline EstimateReport mrc_fast_exponential(const std::vector<TickSchedule>& schedules, double rate,
                                           double theta, double horizon, MrcOptions opts = {}) {
    opts.jittered = true;
    opts.force_direct = false;
    return mrc(schedules, make_double_exponential(rate), theta, horizon, opts);
}

// ---- flat-top realized kernel -------------------------------------------

// RK(Y) = gamma_0 + sum_{h>=1} K((h-1)/H) (gamma_h + gamma_{-h}) on a return
// series, with realized autocovariances gamma_h = sum_j Delta_j Y Delta_{j-h} Y.
// h_max truncates the sum (0 means the full range).
inline double realized_kernel(const std::vector<double>& returns,
                              const std::function<double(double)>& kernel, double H, long h_max = 0) {
    if (H < 1.0) throw std::invalid_argument("realized_kernel: H >= 1 required");
    const long N = static_cast<long>(returns.size());
    if (h_max <= 0 || h_max > N - 1) h_max = N - 1;
    double gamma0 = 0.0;
    for (double r : returns) gamma0 += r * r;
    double acc = gamma0;
    for (long h = 1; h <= h_max; ++h) {
        double gh = 0.0;
        for (long j = h; j < N; ++j) gh += returns[j] * returns[j - h];
        acc += kernel(static_cast<double>(h - 1) / H) * 2.0 * gh;
    }
    return acc;
}

// O(N) evaluation of the flat-top realized kernel with K_opt(x) = (1+x)e^{-x}:
// the lag sums satisfy geometric recursions in j.
inline double realized_kernel_opt(const std::vector<double>& returns, double H) {
    if (H < 1.0) throw std::invalid_argument("realized_kernel_opt: H >= 1 required");
    const double q = std::exp(-1.0 / H);
    double a = 0.0, b = 0.0;  // a_j = sum_h e^{-(h-1)/H} r_{j-h}, b_j = sum_h (h-1) e^{-(h-1)/H} r_{j-h}
    double acc = 0.0;
    double prev = 0.0;
    bool first = true;
    for (double r : returns) {
        if (!first) {
            const double na = q * a + prev;
            const double nb = q * (a + b);
            a = na;
            b = nb;
        }
        acc += r * r + 2.0 * r * (a + b / H);
        prev = r;
        first = false;
    }
    return acc;
}

// ---- oracle asymptotic variance and studentization ----------------------

// Conditional covariance tensor of the limit of n^{1/4}(MRC - [X,X]) with
// constant Sigma, Ups, chi, G:
// (2/psi_2^2) t [ Phi_22 theta (S^{kk'}S^{ll'} + S^{kl'}S^{lk'}) G
//               + (Phi_11/theta^3)(U~^{kk'}U~^{ll'} + U~^{kl'}U~^{lk'}) / G
//               + (Phi_12/theta)(S^{kk'}U~^{ll'} + S^{lk'}U~^{kl'} + S^{ll'}U~^{kk'} + S^{kl'}U~^{lk'}) ]
// with U~ = Ups (hadamard) chi.
inline Tensor4 oracle_avar_const(const WeightSpec& spec, double theta, const Mat& Sigma, const Mat& Ups,
                                 const Mat& chi, double G, double t) {
    if (G <= 0.0) throw std::invalid_argument("oracle_avar: G must be positive");
    const int d = Sigma.dim();
    Mat U(d);
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) U(k, l) = Ups(k, l) * chi(k, l);
    Tensor4 out(d);
    const double c = 2.0 / (spec.psi2 * spec.psi2) * t;
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
            for (int k2 = 0; k2 < d; ++k2)
                for (int l2 = 0; l2 < d; ++l2) {
                    double val = spec.phi22 * theta * (Sigma(k, k2) * Sigma(l, l2) + Sigma(k, l2) * Sigma(l, k2)) * G;
                    val += spec.phi11 / (theta * theta * theta) *
                           (U(k, k2) * U(l, l2) + U(k, l2) * U(l, k2)) / G;
                    val += spec.phi12 / theta *
                           (Sigma(k, k2) * U(l, l2) + Sigma(l, k2) * U(k, l2) + Sigma(l, l2) * U(k, k2) +
                            Sigma(k, l2) * U(l, k2));
                    out.at(k, l, k2, l2) = c * val;
                }
    return out;
}

// Path version: trapezoid integration of the same integrand over the sampled
// (Sigma_s, Ups_s, chi_s, G_s) paths up to time t.
inline Tensor4 oracle_avar(const WeightSpec& spec, double theta, const std::vector<double>& times,
                           const std::vector<Mat>& Sigma, const std::vector<Mat>& Ups,
                           const std::vector<Mat>& chi, const std::vector<double>& G, double t) {
    if (times.size() < 2 || Sigma.size() != times.size() || Ups.size() != times.size() ||
        chi.size() != times.size() || G.size() != times.size())
        throw std::invalid_argument("oracle_avar: path length mismatch");
    const int d = Sigma[0].dim();
    Tensor4 out(d);
    Tensor4 prev(d);
    bool have_prev = false;
    double t_prev = 0.0;
    for (std::size_t j = 0; j < times.size() && times[j] <= t; ++j) {
        if (G[j] <= 0.0) throw std::invalid_argument("oracle_avar: G must be positive");
        Tensor4 cur = oracle_avar_const(spec, theta, Sigma[j], Ups[j], chi[j], G[j], 1.0);
        if (have_prev) {
            const double h = 0.5 * (times[j] - t_prev);
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                    for (int k2 = 0; k2 < d; ++k2)
                        for (int l2 = 0; l2 < d; ++l2)
                            out.at(k, l, k2, l2) += h * (cur.at(k, l, k2, l2) + prev.at(k, l, k2, l2));
        }
        prev = cur;
        t_prev = times[j];
        have_prev = true;
    }
    return out;
}

// Per-entry z-scores z^{kl} = n^{1/4} (estimate - truth)^{kl} / sqrt(avar^{kl,kl}).
// Entries with zero asymptotic variance are flagged as NaN.
inline Mat studentize(const Mat& estimate, const Mat& truth, const Tensor4& avar, long n) {
    const int d = estimate.dim();
    Mat z(d);
    const double scale = std::pow(static_cast<double>(n), 0.25);
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
            const double v = avar.at(k, l, k, l);
            z(k, l) = v > 0.0 ? scale * (estimate(k, l) - truth(k, l)) / std::sqrt(v)
                              : std::numeric_limits<double>::quiet_NaN();
        }
    return z;
}

// ---- threshold jump/diffusion split (univariate) ------------------------

struct JumpDecomposition {
    double iv = 0.0;       // diffusion part estimate (bias corrected)
    double jv = 0.0;       // jump part estimate
    double qv = 0.0;       // iv + jv
    double rho = 0.0;      // threshold actually used
    long blocks_over = 0;  // pre-averaged blocks exceeding the threshold
    long blocks_total = 0;
    int k_n = 0;
    long n = 0;
};

// Scenario default for the threshold constant: 5x the expected standard
// deviation of a pre-averaged block, rescaled so that rho_n = c n^{-w}.
inline double default_threshold_c(const WeightSpec& spec, double theta, double sigma, double ups,
                                  long n, double w) {
    const int k_n = window_size(theta, n);
    const double block_sd =
        std::sqrt(spec.psi1 * ups / k_n + spec.psi2 * k_n * sigma * sigma / static_cast<double>(n));
    return 5.0 * block_sd * std::pow(static_cast<double>(n), w);
}

// Threshold pre-averaging split of the quadratic variation of a univariate
// series: blocks with |Ztil| <= rho_n feed the diffusion estimate, the rest
// the jump estimate. IV and JV may use different weights.
inline JumpDecomposition threshold_estimators(const TickSchedule& data, const WeightSpec& spec_iv,
                                              const WeightSpec& spec_jv, double c, double w,
                                              double theta, double horizon, long n_override = 0) {
    if (!(w > 0.125 && w < 0.25)) throw std::invalid_argument("threshold_estimators: need w in (1/8, 1/4)");
    if (!data.has_values()) throw std::invalid_argument("threshold_estimators: schedule has no values");
    (void)horizon;
    const long N = static_cast<long>(data.times.size()) - 1;
    const long n = n_override > 0 ? n_override : N;
    const int k_n = window_size(theta, n);
    if (N < 2 * k_n + 1) throw std::invalid_argument("threshold_estimators: need N_T >= 2 k_n + 1");

    JumpDecomposition out;
    out.n = n;
    out.k_n = k_n;
    out.rho = c * std::pow(static_cast<double>(n), -w);

    auto preavg = [&](const WeightSpec& spec) {
        const AdjustedReturns adj = jitter(data.values, k_n);
        if (spec.support == WeightSupport::ExpDecay) return preaverage_exponential(adj, spec.decay_rate, k_n);
        return preaverage_jittered(adj, discretize(spec, k_n));
    };
    const auto z_iv = preavg(spec_iv);
    const auto z_jv = preavg(spec_jv);

    double zz = 0.0;
    for (long p = 1; p <= N; ++p) {
        const double r = data.values[p] - data.values[p - 1];
        zz += r * r;
    }

    double iv_sum = 0.0;
    for (double zt : z_iv)
        if (std::abs(zt) <= out.rho) iv_sum += zt * zt;
    double jv_sum = 0.0;
    for (double zt : z_jv)
        if (std::abs(zt) > out.rho) {
            jv_sum += zt * zt;
            ++out.blocks_over;
        }
    out.blocks_total = static_cast<long>(z_jv.size());

    const auto [psi1_iv, psi2_iv] = discrete_psi(spec_iv, k_n);
    const auto [psi1_jv, psi2_jv] = discrete_psi(spec_jv, k_n);
    // same finite-sample adjustments as in mrc(), applied to both parts so
    // that iv + jv equals the un-thresholded estimate exactly when the two
    // parts share a weight
    const double edge = static_cast<double>(N) / static_cast<double>(out.blocks_total);
    const double eps_iv = psi1_iv / (2.0 * psi2_iv * k_n * k_n);
    const double eps_jv = psi1_jv / (2.0 * psi2_jv * k_n * k_n);
    out.iv = (edge * iv_sum / (psi2_iv * k_n) - psi1_iv / (2.0 * psi2_iv * k_n * k_n) * zz) /
             (1.0 - eps_iv);
    out.jv = edge * jv_sum / (psi2_jv * k_n * (1.0 - eps_jv));
    out.qv = out.iv + out.jv;
    return out;
}

// Closed-form asymptotic variances of the threshold split:
// v_C^2 = (4/psi_2^2)(Phi_22 theta s^4 + 2 Phi_12 s^2 U / theta + Phi_11 U^2 / theta^3),
// v_J^2 = (8/psi_2^2)(Phi_22 theta s^2 + Phi_12 U / theta) * sum of squared jumps.
inline std::pair<double, double> v_C_v_J(const WeightSpec& spec, double theta, double sigma, double ups,
                                         double jump_sum_sq) {
    const double s2 = sigma * sigma;
    const double p2 = spec.psi2 * spec.psi2;
    const double vc = 4.0 / p2 *
                      (spec.phi22 * theta * s2 * s2 + 2.0 * spec.phi12 * s2 * ups / theta +
                       spec.phi11 * ups * ups / (theta * theta * theta));
    const double vj = 8.0 / p2 * (spec.phi22 * theta * s2 + spec.phi12 * ups / theta) * jump_sum_sq;
    return {vc, vj};
}

// theta minimizing v_J(g, theta): sqrt(Phi_12 Ups / (Phi_22 sigma^2)).
inline double optimal_theta_vj(const WeightSpec& spec, double sigma, double ups) {
    return std::sqrt(spec.phi12 * ups / (spec.phi22 * sigma * sigma));
}

// ---- tricity -------------------------------------------------------------

// Scaled cubic sum of pre-averaged latent blocks:
// (sqrt(n) / k_n^{3/2}) sum_i (Xtil_i)^3. Simulation-only diagnostic (needs
// the latent values on the synchronized grid).
inline double tricity(const std::vector<double>& latent_values, const WeightSpec& spec, double theta,
                      long n_override = 0) {
    const long N = static_cast<long>(latent_values.size()) - 1;
    const long n = n_override > 0 ? n_override : N;
    const int k_n = window_size(theta, n);
    if (N < 2 * k_n + 1) throw std::invalid_argument("tricity: need N_T >= 2 k_n + 1");
    const AdjustedReturns adj = jitter(latent_values, k_n);
    const auto xt = spec.support == WeightSupport::ExpDecay
                        ? preaverage_exponential(adj, spec.decay_rate, k_n)
                        : preaverage_jittered(adj, discretize(spec, k_n));
    double acc = 0.0;
    for (double x : xt) acc += x * x * x;
    return std::sqrt(static_cast<double>(n)) / std::pow(static_cast<double>(k_n), 1.5) * acc;
}

}  // namespace preavg
