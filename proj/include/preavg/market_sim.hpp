#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"
#include "tick_data.hpp"

namespace preavg {

// Latent log-price model X_t = X_0 + int a ds + int sigma dW. Either a
// constant d x d' volatility matrix or a univariate Heston-type variance
// process (d = d' = 1).
struct PathModel {
    int d = 1;
    std::vector<double> drift;  // empty means zero
    Mat sigma;                  // constant d x d' volatility matrix

    // Heston-type variance: dv = kappa (vbar - v) dt + xi sqrt(v) dB,
    // sigma_s = sqrt(v_s), corr(dW, dB) = leverage. Only for d = 1.
    bool heston = false;
    double heston_kappa = 0.0, heston_vbar = 0.0, heston_xi = 0.0, heston_v0 = 0.0;
    double heston_leverage = 0.0;

    static PathModel constant_vol(const Mat& sigma, std::vector<double> drift = {}) {
        PathModel m;
        m.d = sigma.dim();
        m.sigma = sigma;
        m.drift = std::move(drift);
        return m;
    }

    static PathModel heston_model(double kappa, double vbar, double xi, double v0, double leverage = 0.0) {
        PathModel m;
        m.d = 1;
        m.heston = true;
        m.heston_kappa = kappa;
        m.heston_vbar = vbar;
        m.heston_xi = xi;
        m.heston_v0 = v0;
        m.heston_leverage = leverage;
        return m;
    }
};

// Gaussian microstructure noise with covariance Ups; draws at distinct grid
// times are independent, draws at the same time instant share one d-dim draw.
struct NoiseModel {
    Mat ups;  // d x d, symmetric PSD

    static NoiseModel none(int d) { return {Mat(d)}; }
    static NoiseModel iid(int d, double variance) {
        NoiseModel n{Mat(d)};
        for (int i = 0; i < d; ++i) n.ups(i, i) = variance;
        return n;
    }
};

// Finite-activity jump component J_t = sum_{S_k <= t} gamma_k (added to every
// asset in the multivariate case).
struct JumpModel {
    std::vector<double> times;  // S_1 < ... < S_K in (0, horizon)
    std::vector<double> sizes;  // gamma_k

    double sum_squared() const {
        double s = 0.0;
        for (double g : sizes) s += g * g;
        return s;
    }
    double cumulative(double t) const {
        double s = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k)
            if (times[k] <= t) s += sizes[k];
        return s;
    }
};

// Euler realization of the latent path on a fine grid, together with the spot
// covariance and the accumulated quadratic covariation.
struct LatentPath {
    int d = 1;
    double horizon = 1.0;
    std::vector<double> times;               // fine grid, size m+1, times[0] = 0
    std::vector<double> x;                   // time major: x[j*d + k]
    bool constant_sigma = true;
    Mat sigma_const;                         // spot Sigma when constant
    std::vector<double> spot_var;            // Heston: v_j per grid time
    std::vector<double> qv;                  // cumulative [X,X], packed lower triangle per time
    std::vector<double> martingale;          // d = 1: the martingale part int sigma dW

    int packed_size() const { return d * (d + 1) / 2; }
    double qv_at(std::size_t j, int k, int l) const {
        if (k < l) std::swap(k, l);
        return qv[j * packed_size() + k * (k + 1) / 2 + l];
    }
    Mat qv_matrix(std::size_t j) const {
        Mat m(d);
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) m(k, l) = qv_at(j, k, l);
        return m;
    }
    // index of the last fine-grid time <= t
    std::size_t index_at(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        return static_cast<std::size_t>(it - times.begin()) - 1;
    }
    double value_at(double t, int k = 0) const { return x[index_at(t) * d + k]; }
};

inline LatentPath simulate_path(const PathModel& model, long fine_steps, double horizon, Rng& rng) {
    if (fine_steps < 1000) throw std::invalid_argument("simulate_path: fine_steps >= 1000 required");
    const int d = model.d;
    const double dt = horizon / static_cast<double>(fine_steps);
    const double sdt = std::sqrt(dt);

    LatentPath path;
    path.d = d;
    path.horizon = horizon;
    path.times.resize(fine_steps + 1);
    path.x.assign(static_cast<std::size_t>(fine_steps + 1) * d, 0.0);
    path.qv.assign(static_cast<std::size_t>(fine_steps + 1) * (d * (d + 1) / 2), 0.0);
    for (long j = 0; j <= fine_steps; ++j) path.times[j] = dt * static_cast<double>(j);

    if (model.heston) {
        path.constant_sigma = false;
        path.spot_var.assign(fine_steps + 1, 0.0);
        path.martingale.assign(fine_steps + 1, 0.0);
        double v = model.heston_v0;
        const double rho = model.heston_leverage;
        const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        path.spot_var[0] = v;
        for (long j = 1; j <= fine_steps; ++j) {
            const double zw = rng.normal();
            const double zb = rho * zw + rho_c * rng.normal();
            const double vol = std::sqrt(std::max(0.0, v));
            const double dx = vol * sdt * zw + (model.drift.empty() ? 0.0 : model.drift[0] * dt);
            path.x[j] = path.x[j - 1] + dx;
            path.martingale[j] = path.martingale[j - 1] + vol * sdt * zw;
            path.qv[j] = path.qv[j - 1] + std::max(0.0, v) * dt;
            v += model.heston_kappa * (model.heston_vbar - v) * dt +
                 model.heston_xi * std::sqrt(std::max(0.0, v)) * sdt * zb;
            path.spot_var[j] = std::max(0.0, v);
        }
        return path;
    }

    const Mat& s = model.sigma;
    const int dprime = s.dim();  // sigma is stored square; treat columns as Brownian factors
    Mat Sigma(d);
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
            double acc = 0.0;
            for (int m = 0; m < dprime; ++m) acc += s(k, m) * s(l, m);
            Sigma(k, l) = acc;
        }
    {
        // PSD check on the instantaneous covariance
        Mat chk = Sigma;
        cholesky_psd(chk);
    }
    path.constant_sigma = true;
    path.sigma_const = Sigma;
    if (d == 1) path.martingale.assign(fine_steps + 1, 0.0);

    const int ps = d * (d + 1) / 2;
    std::vector<double> z(dprime);
    for (long j = 1; j <= fine_steps; ++j) {
        for (int m = 0; m < dprime; ++m) z[m] = rng.normal();
        for (int k = 0; k < d; ++k) {
            double dx = model.drift.empty() ? 0.0 : model.drift[k] * dt;
            double dm = 0.0;
            for (int m = 0; m < dprime; ++m) dm += s(k, m) * sdt * z[m];
            dx += dm;
            path.x[static_cast<std::size_t>(j) * d + k] = path.x[static_cast<std::size_t>(j - 1) * d + k] + dx;
            if (d == 1) path.martingale[j] = path.martingale[j - 1] + dm;
        }
        int idx = 0;
        for (int k = 0; k < d; ++k)
            for (int l = 0; l <= k; ++l, ++idx)
                path.qv[static_cast<std::size_t>(j) * ps + idx] =
                    path.qv[static_cast<std::size_t>(j - 1) * ps + idx] + Sigma(k, l) * dt;
    }
    return path;
}

// Observed value at each tick: latent X at the nearest fine-grid point at or
// before the tick, plus a fresh noise draw, plus the cumulative jump. Ticks of
// different assets at the exact same time share one joint noise draw.
inline std::vector<TickSchedule> observe(const LatentPath& path, const std::vector<TickSchedule>& schedules,
                                         const NoiseModel& noise, const JumpModel* jumps, Rng& rng) {
    const int d = path.d;
    const Mat chol = cholesky_psd(noise.ups);

    // Group ticks by exact time so synchronous ticks share a noise vector.
    // map key is the bit pattern of the time (ticks are copied, never
    // recomputed, so equality is exact).
    std::map<double, std::vector<std::pair<int, std::size_t>>> by_time;
    for (std::size_t k = 0; k < schedules.size(); ++k)
        for (std::size_t i = 0; i < schedules[k].times.size(); ++i)
            by_time[schedules[k].times[i]].push_back({static_cast<int>(k), i});

    std::vector<TickSchedule> out = schedules;
    for (auto& s : out) s.values.assign(s.times.size(), 0.0);

    std::vector<double> z(d), eps(d);
    for (auto& [t, ticks] : by_time) {
        for (int m = 0; m < d; ++m) z[m] = rng.normal();
        for (int k = 0; k < d; ++k) {
            double acc = 0.0;
            for (int m = 0; m <= k; ++m) acc += chol(k, m) * z[m];
            eps[k] = acc;
        }
        const std::size_t j = path.index_at(t);
        const double jump = jumps ? jumps->cumulative(t) : 0.0;
        for (auto [k, i] : ticks) {
            const int asset = schedules[k].asset_id >= 1 && schedules[k].asset_id <= d
                                  ? schedules[k].asset_id - 1
                                  : k % d;
            out[k].values[i] = path.x[j * d + asset] + eps[asset] + jump;
        }
    }
    return out;
}

}  // namespace preavg
