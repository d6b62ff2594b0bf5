#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace preavg {

// Per-asset observation times (strictly increasing, in [0, horizon]) with
// optional observed values aligned 1:1 with the times.
struct TickSchedule {
    int asset_id = 0;
    std::vector<double> times;
    std::vector<double> values;  // empty, or same length as times

    bool has_values() const { return !values.empty(); }

    void validate(double horizon) const {
        if (times.empty()) throw std::invalid_argument("empty tick schedule");
        if (!values.empty() && values.size() != times.size())
            throw std::invalid_argument("values/times length mismatch");
        double prev = -1.0;
        for (double t : times) {
            if (t <= prev) throw std::invalid_argument("tick times not strictly increasing");
            if (t < 0.0 || t > horizon) throw std::invalid_argument("tick time outside [0, horizon]");
            prev = t;
        }
    }
};

// Synchronized grid (T_p) with per-asset next-tick interpolated times
// tau^k_p. tau_index[k][p] is the position of tau^k_p in the asset's
// original time list, so values are copied, never recomputed.
struct SyncGrid {
    std::vector<double> grid;                        // T_0 < T_1 < ... <= horizon
    std::vector<std::vector<double>> per_asset;      // tau[k][p], same length as grid
    std::vector<std::vector<std::size_t>> tau_index; // index into the source schedule
    double horizon = 0.0;
    bool truncated = false;  // grid was cut because an asset ran out of ticks

    int assets() const { return static_cast<int>(per_asset.size()); }
    // N^n_t convention: grid points are T_0..T_P, so N_T = P.
    int last_index() const { return static_cast<int>(grid.size()) - 1; }

    // Check condition [H](ii): tau^k_0 <= T_0 and T_{p-1} < tau^k_p <= T_p.
    bool satisfies_H() const {
        for (const auto& tau : per_asset) {
            if (tau.size() != grid.size()) return false;
            if (tau[0] > grid[0]) return false;
            for (std::size_t p = 1; p < grid.size(); ++p)
                if (!(grid[p - 1] < tau[p] && tau[p] <= grid[p])) return false;
        }
        return true;
    }
};

struct DurationStats {
    double n = 0.0;                    // asymptotic frequency parameter
    int count = 0;                     // N_t: grid points with T_p <= t (index of last one)
    double r_n = 0.0;                  // max duration sup_p (T_p ^ t - T_{p-1} ^ t)
    double mean_scaled_duration = 0.0; // average of n * (T_p - T_{p-1})
};

// ---- CSV ----------------------------------------------------------------

// Format: header "asset_id,time,value" (value column optional), rows sorted
// ascending in time per asset.
inline void write_ticks_csv(std::ostream& os, const std::vector<TickSchedule>& schedules) {
    bool any_values = false;
    for (const auto& s : schedules) any_values |= s.has_values();
    os << (any_values ? "asset_id,time,value\n" : "asset_id,time\n");
    char buf[64];
    for (const auto& s : schedules) {
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            os << s.asset_id << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", s.times[i]);
            os << buf;
            if (any_values) {
                os << ',';
                std::snprintf(buf, sizeof(buf), "%.17g", s.has_values() ? s.values[i] : 0.0);
                os << buf;
            }
            os << '\n';
        }
    }
}

inline std::vector<TickSchedule> read_ticks_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("tick CSV: missing header");
    bool has_value_col;
    if (line.rfind("asset_id,time,value", 0) == 0) has_value_col = true;
    else if (line.rfind("asset_id,time", 0) == 0) has_value_col = false;
    else throw std::invalid_argument("tick CSV: bad header: " + line);

    std::map<int, TickSchedule> by_asset;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f;
        std::getline(ss, f, ',');
        const int id = std::stoi(f);
        std::getline(ss, f, ',');
        const double t = std::stod(f);
        double v = 0.0;
        if (has_value_col) {
            std::getline(ss, f, ',');
            v = std::stod(f);
        }
        auto& s = by_asset[id];
        s.asset_id = id;
        s.times.push_back(t);
        if (has_value_col) s.values.push_back(v);
    }
    std::vector<TickSchedule> out;
    out.reserve(by_asset.size());
    for (auto& [id, s] : by_asset) out.push_back(std::move(s));
    return out;
}

// Format: "p,T_p,tau_1,...,tau_d".
inline void write_syncgrid_csv(std::ostream& os, const SyncGrid& g) {
    os << "p,T_p";
    for (int k = 0; k < g.assets(); ++k) os << ",tau_" << (k + 1);
    os << '\n';
    char buf[64];
    for (std::size_t p = 0; p < g.grid.size(); ++p) {
        os << p;
        std::snprintf(buf, sizeof(buf), ",%.17g", g.grid[p]);
        os << buf;
        for (int k = 0; k < g.assets(); ++k) {
            std::snprintf(buf, sizeof(buf), ",%.17g", g.per_asset[k][p]);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace preavg
