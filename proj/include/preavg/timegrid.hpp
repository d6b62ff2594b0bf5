#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rng.hpp"
#include "tick_data.hpp"

namespace preavg {

// Refresh times: T_0 = max_k t^k_0, T_p = max_k min{t^k_i : t^k_i > T_{p-1}};
// the sequence stops as soon as some asset has no later tick.
inline std::vector<double> refresh_times(const std::vector<TickSchedule>& schedules, double horizon) {
    if (schedules.empty()) throw std::invalid_argument("refresh_times: no schedules");
    for (const auto& s : schedules) s.validate(horizon);

    const int d = static_cast<int>(schedules.size());
    std::vector<std::size_t> pos(d, 0);
    std::vector<double> grid;
    double t0 = 0.0;
    for (const auto& s : schedules) t0 = std::max(t0, s.times.front());
    grid.push_back(t0);
    for (;;) {
        double next = grid.back();
        bool exhausted = false;
        for (int k = 0; k < d; ++k) {
            const auto& times = schedules[k].times;
            while (pos[k] < times.size() && times[pos[k]] <= grid.back()) ++pos[k];
            if (pos[k] == times.size()) {
                exhausted = true;
                break;
            }
            next = std::max(next, times[pos[k]]);
        }
        if (exhausted) break;
        grid.push_back(next);
    }
    return grid;
}

// Next-tick interpolation: tau^k_0 = t^k_0, tau^k_p = min{t^k_i : t^k_i > T_{p-1}}.
// If some asset has no next tick for an interval, the grid is truncated to the
// last fully covered index and the result is flagged.
inline SyncGrid next_tick_interpolate(const std::vector<TickSchedule>& schedules,
                                      const std::vector<double>& grid, double horizon) {
    if (schedules.empty() || grid.empty()) throw std::invalid_argument("next_tick_interpolate: empty input");
    const int d = static_cast<int>(schedules.size());
    SyncGrid out;
    out.horizon = horizon;
    out.per_asset.assign(d, {});
    out.tau_index.assign(d, {});

    std::size_t covered = grid.size();
    for (int k = 0; k < d; ++k) {
        const auto& times = schedules[k].times;
        auto& tau = out.per_asset[k];
        auto& idx = out.tau_index[k];
        tau.push_back(times.front());
        idx.push_back(0);
        std::size_t i = 0;
        for (std::size_t p = 1; p < grid.size(); ++p) {
            while (i < times.size() && times[i] <= grid[p - 1]) ++i;
            if (i == times.size()) {
                covered = std::min(covered, p);
                break;
            }
            tau.push_back(times[i]);
            idx.push_back(i);
        }
    }
    if (covered < grid.size()) out.truncated = true;
    out.grid.assign(grid.begin(), grid.begin() + covered);
    for (int k = 0; k < d; ++k) {
        out.per_asset[k].resize(covered);
        out.tau_index[k].resize(covered);
    }
    return out;
}

inline TickSchedule sample_equidistant(long n, double horizon, int asset_id = 1) {
    if (n < 1) throw std::invalid_argument("sample_equidistant: n >= 1 required");
    TickSchedule s;
    s.asset_id = asset_id;
    s.times.reserve(n + 1);
    for (long i = 0; i <= n; ++i) s.times.push_back(horizon * static_cast<double>(i) / static_cast<double>(n));
    return s;
}

// Independent Poisson arrival schedules with rates n * p_k on [0, horizon].
inline std::vector<TickSchedule> sample_poisson(const std::vector<double>& intensities, long n,
                                                double horizon, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_poisson: n >= 1 required");
    std::vector<TickSchedule> out;
    int id = 1;
    for (double p : intensities) {
        if (p <= 0.0) throw std::invalid_argument("sample_poisson: intensity must be positive");
        TickSchedule s;
        s.asset_id = id++;
        double t = rng.exponential(n * p);
        while (t <= horizon) {
            s.times.push_back(t);
            t += rng.exponential(n * p);
        }
        if (s.times.empty()) s.times.push_back(horizon);  // degenerate, keeps schedules nonempty
        out.push_back(std::move(s));
    }
    return out;
}

// Coupon-collector limit of the scaled refresh duration for independent
// Poisson sampling: G = sum_k sum_{subsets of size k} (-1)^{k-1} / sum(p).
inline double poisson_G_limit(const std::vector<double>& intensities) {
    const int d = static_cast<int>(intensities.size());
    if (d == 0) throw std::invalid_argument("poisson_G_limit: empty intensity list");
    for (double p : intensities)
        if (p <= 0.0) throw std::invalid_argument("poisson_G_limit: intensity must be positive");
    double g = 0.0;
    for (unsigned mask = 1; mask < (1u << d); ++mask) {
        double sum = 0.0;
        int bits = 0;
        for (int k = 0; k < d; ++k)
            if (mask & (1u << k)) {
                sum += intensities[k];
                ++bits;
            }
        g += ((bits % 2 == 1) ? 1.0 : -1.0) / sum;
    }
    return g;
}

struct HittingResult {
    TickSchedule schedule;
    std::vector<int> signs;  // +1 for an up-hit (+beta/sqrt(n)), -1 for a down-hit
    bool too_coarse = false; // fewer than ~10 fine steps per generated duration
};

// First-passage scan on a fine-grid martingale path: t_{i+1} is the first
// fine-grid time after t_i with M_t - M_{t_i} <= -alpha/sqrt(n) or >= beta/sqrt(n).
// Monitoring only on the fine grid misses excursions between grid points, which
// biases durations upward; the barriers are therefore shrunk by the standard
// continuity correction 0.5826 * (per-step sd), estimated from the path itself.
inline HittingResult sample_hitting_barriers(double alpha, double beta, long n,
                                             const std::vector<double>& fine_times,
                                             const std::vector<double>& martingale,
                                             int asset_id = 1) {
    if (alpha <= 0.0 || beta <= 0.0) throw std::invalid_argument("sample_hitting_barriers: barriers must be positive");
    if (fine_times.size() != martingale.size() || fine_times.size() < 2)
        throw std::invalid_argument("sample_hitting_barriers: bad path");
    double qv = 0.0;
    for (std::size_t j = 1; j < martingale.size(); ++j) {
        const double dm = martingale[j] - martingale[j - 1];
        qv += dm * dm;
    }
    const double step_sd = std::sqrt(qv / static_cast<double>(martingale.size() - 1));
    const double shift = 0.5826 * step_sd;
    const double root_n = std::sqrt(static_cast<double>(n));
    // only correct when the barrier is well resolved; otherwise leave it alone
    const double lo = -(alpha / root_n - (shift < 0.5 * alpha / root_n ? shift : 0.0));
    const double hi = beta / root_n - (shift < 0.5 * beta / root_n ? shift : 0.0);

    HittingResult out;
    out.schedule.asset_id = asset_id;
    out.schedule.times.push_back(fine_times.front());
    double anchor = martingale.front();
    std::size_t last_hit = 0;
    std::size_t steps_sum = 0;
    for (std::size_t j = 1; j < fine_times.size(); ++j) {
        const double dm = martingale[j] - anchor;
        if (dm <= lo || dm >= hi) {
            out.schedule.times.push_back(fine_times[j]);
            out.signs.push_back(dm >= hi ? +1 : -1);
            anchor = martingale[j];
            steps_sum += j - last_hit;
            last_hit = j;
        }
    }
    if (!out.signs.empty() && static_cast<double>(steps_sum) / out.signs.size() < 10.0)
        out.too_coarse = true;
    return out;
}

// N_t, r_n(t) and the mean scaled duration of the grid up to time t
// (T_{-1} = 0 convention).
inline DurationStats duration_stats(const std::vector<double>& grid, double n, double t) {
    DurationStats st;
    st.n = n;
    double prev = 0.0;
    for (double T : grid) {
        st.r_n = std::max(st.r_n, std::min(T, t) - std::min(prev, t));
        if (T > 0.0 && T <= t) ++st.count;  // N_t counts grid points in (0, t]
        prev = T;
    }
    double sum = 0.0;
    int m = 0;
    for (std::size_t p = 1; p < grid.size() && grid[p] <= t; ++p) {
        sum += grid[p] - grid[p - 1];
        ++m;
    }
    if (m > 0) st.mean_scaled_duration = n * sum / m;
    return st;
}

// Long-run variation of time:
// S_{n,m}(t) = (n/m) sum_{p=1}^{N_t} D_p * sum_{q=1}^{m^p} D_{p-q+1},
// with D_j = T_j - T_{j-1} over the grid T_0..T_P.
inline double long_run_variation(const std::vector<double>& grid, double n, int m, double t) {
    if (m < 1) throw std::invalid_argument("long_run_variation: m >= 1 required");
    double rolling = 0.0;  // sum of the last (up to m) durations
    std::vector<double> durations;
    double total = 0.0;
    for (std::size_t p = 1; p < grid.size() && grid[p] <= t; ++p) {
        const double dur = grid[p] - grid[p - 1];
        durations.push_back(dur);
        rolling += dur;
        if (static_cast<int>(durations.size()) > m) rolling -= durations[durations.size() - 1 - m];
        total += dur * rolling;
    }
    return n / m * total;
}

}  // namespace preavg
