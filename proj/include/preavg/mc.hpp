#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "estimators.hpp"
#include "market_sim.hpp"
#include "param_jump.hpp"
#include "rng.hpp"
#include "timegrid.hpp"

namespace preavg {

using json = nlohmann::ordered_json;

enum class Scheme { Equidistant, Poisson, Hitting };
enum class EstimatorKind { Mrc, MrcFast, Rk, Threshold, ParamJump };

// Full description of a Monte Carlo experiment, parsed from a key=value
// config file (see README for the schema).
struct ScenarioConfig {
    // path model (constant volatility; d assets with common sigma and
    // pairwise correlation rho)
    int d = 1;
    double sigma = 1.0;
    double rho = 0.0;
    double drift = 0.0;

    // noise
    double ups = 0.0;

    // jumps
    std::vector<double> jump_times;
    std::vector<double> jump_sizes;

    // sampling scheme
    Scheme scheme = Scheme::Equidistant;
    std::vector<double> intensities;  // poisson
    double alpha = 1.0, beta = 1.0;   // hitting
    double fine_mult = 100.0;         // fine-grid density relative to expected tick spacing

    // estimator
    EstimatorKind estimator = EstimatorKind::Mrc;
    std::string weight = "doubleexp";
    std::string weight_jv = "doubleexp:2.2360679774997896";  // rate sqrt(5)
    bool theta_oracle = false;
    double theta = 0.0;
    double c = 0.0;  // 0: scenario default
    double w = 0.1875;

    std::vector<long> n_list = {10000};
    long reps = 100;
    std::uint64_t seed = 1;
    int workers = 0;  // 0: PREAVG_WORKERS env var, else 1
    double horizon = 1.0;
    std::string out_dir;

    double resolve_theta() const {
        if (!theta_oracle) return theta;
        if (ups <= 0.0 || sigma <= 0.0)
            throw std::invalid_argument("theta=oracle requires sigma > 0 and ups > 0");
        return std::sqrt(ups) / sigma;
    }

    Mat sigma_matrix() const {
        // sigma * chol of correlation matrix with common off-diagonal rho
        Mat corr(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) corr(i, j) = i == j ? 1.0 : rho;
        Mat l = cholesky_psd(corr);
        return l * sigma;
    }

    Mat instantaneous_cov() const {
        Mat s(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s(i, j) = sigma * sigma * (i == j ? 1.0 : rho);
        return s;
    }

    double scheme_G() const {
        switch (scheme) {
            case Scheme::Equidistant: return 1.0;
            case Scheme::Poisson: return poisson_G_limit(intensities);
            case Scheme::Hitting: return alpha * beta / (sigma * sigma);
        }
        return 1.0;
    }

    Mat scheme_chi() const {
        // synchronous (equidistant) ticks share times: chi = all-ones;
        // independent Poisson / univariate schemes: chi = identity.
        if (scheme == Scheme::Equidistant) return Mat(d, 1.0);
        return Mat::identity(d);
    }

    double jump_sum_sq() const {
        double s = 0.0;
        for (double g : jump_sizes) s += g * g;
        return s;
    }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline ScenarioConfig parse_config(std::istream& is) {
    ScenarioConfig cfg;
    std::vector<std::string> bad_keys;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bad_keys.push_back(line);
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        try {
            if (key == "d") cfg.d = std::stoi(val);
            else if (key == "sigma") cfg.sigma = std::stod(val);
            else if (key == "rho") cfg.rho = std::stod(val);
            else if (key == "drift") cfg.drift = std::stod(val);
            else if (key == "ups") cfg.ups = std::stod(val);
            else if (key == "jump_times") cfg.jump_times = detail::parse_list(val);
            else if (key == "jump_sizes") cfg.jump_sizes = detail::parse_list(val);
            else if (key == "scheme") {
                if (val == "equidistant") cfg.scheme = Scheme::Equidistant;
                else if (val.rfind("poisson:", 0) == 0) {
                    cfg.scheme = Scheme::Poisson;
                    cfg.intensities = detail::parse_list(val.substr(8));
                    cfg.d = static_cast<int>(cfg.intensities.size());
                } else if (val.rfind("hitting:", 0) == 0) {
                    cfg.scheme = Scheme::Hitting;
                    const auto ab = detail::parse_list(val.substr(8));
                    if (ab.size() != 2) throw std::invalid_argument("hitting needs alpha,beta");
                    cfg.alpha = ab[0];
                    cfg.beta = ab[1];
                    cfg.d = 1;
                } else throw std::invalid_argument("unknown scheme");
            } else if (key == "estimator") {
                if (val == "mrc") cfg.estimator = EstimatorKind::Mrc;
                else if (val == "mrc-fast") cfg.estimator = EstimatorKind::MrcFast;
                else if (val == "rk") cfg.estimator = EstimatorKind::Rk;
                else if (val == "threshold") cfg.estimator = EstimatorKind::Threshold;
                else if (val == "param-jump") cfg.estimator = EstimatorKind::ParamJump;
                else throw std::invalid_argument("unknown estimator");
            } else if (key == "weight") cfg.weight = val;
            else if (key == "weight_jv") cfg.weight_jv = val;
            else if (key == "theta") {
                if (val == "oracle") cfg.theta_oracle = true;
                else cfg.theta = std::stod(val);
            } else if (key == "c") cfg.c = (val == "auto") ? 0.0 : std::stod(val);
            else if (key == "w") cfg.w = std::stod(val);
            else if (key == "n") {
                cfg.n_list.clear();
                for (double x : detail::parse_list(val)) cfg.n_list.push_back(static_cast<long>(x));
            } else if (key == "reps") cfg.reps = std::stol(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "workers") cfg.workers = std::stoi(val);
            else if (key == "horizon") cfg.horizon = std::stod(val);
            else if (key == "fine_mult") cfg.fine_mult = std::stod(val);
            else if (key == "out") cfg.out_dir = val;
            else bad_keys.push_back(key);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        }
    }
    if (!bad_keys.empty()) {
        std::string msg = "invalid config keys:";
        for (const auto& k : bad_keys) msg += " " + k;
        throw std::invalid_argument(msg);
    }
    if (cfg.reps < 1) throw std::invalid_argument("invalid config: reps >= 1 required");
    if (!cfg.theta_oracle && cfg.theta <= 0.0 && cfg.estimator != EstimatorKind::ParamJump)
        throw std::invalid_argument("invalid config: theta missing");
    if (cfg.scheme == Scheme::Poisson && cfg.intensities.empty())
        throw std::invalid_argument("invalid config: poisson scheme needs intensities");
    return cfg;
}

// ---- single replication --------------------------------------------------

// One replication's flattened statistics. Layout depends on the estimator:
//   mrc/mrc-fast: per matrix entry (k<=l): estimate, error, z
//   rk:           estimate, error, z
//   threshold:    iv, jv, err_iv, err_jv, z_iv, z_jv
//   param-jump:   per jump k: gamma_hat, error, z
struct RepResult {
    bool ok = false;
    std::string what;
    std::vector<double> stats;
};

// Latent path + observed (noisy, jumpy) tick schedules for one draw of the
// configured scenario at frequency n.
struct SimulatedMarket {
    LatentPath path;
    std::vector<TickSchedule> observed;
};

inline SimulatedMarket simulate_observed(const ScenarioConfig& cfg, long n, Rng& rng) {
    const int d = cfg.d;
    PathModel pm = PathModel::constant_vol(cfg.sigma_matrix(),
                                           cfg.drift != 0.0 ? std::vector<double>(d, cfg.drift)
                                                            : std::vector<double>{});
    long fine_steps = n;
    std::vector<TickSchedule> schedules;
    SimulatedMarket mkt;
    if (cfg.scheme == Scheme::Equidistant) {
        fine_steps = std::max<long>(1000, n);  // ticks land exactly on the fine grid
        mkt.path = simulate_path(pm, fine_steps, cfg.horizon, rng);
        for (int k = 0; k < d; ++k) schedules.push_back(sample_equidistant(n, cfg.horizon, k + 1));
    } else if (cfg.scheme == Scheme::Poisson) {
        double pmax = 0.0;
        for (double p : cfg.intensities) pmax = std::max(pmax, p);
        fine_steps = std::max<long>(1000, static_cast<long>(cfg.fine_mult * n * pmax));
        mkt.path = simulate_path(pm, fine_steps, cfg.horizon, rng);
        schedules = sample_poisson(cfg.intensities, n, cfg.horizon, rng);
    } else {
        const double g = cfg.alpha * cfg.beta / (cfg.sigma * cfg.sigma);
        fine_steps = std::max<long>(1000, static_cast<long>(cfg.fine_mult * n / g));
        mkt.path = simulate_path(pm, fine_steps, cfg.horizon, rng);
        auto hit = sample_hitting_barriers(cfg.alpha, cfg.beta, n, mkt.path.times, mkt.path.martingale);
        schedules.push_back(std::move(hit.schedule));
    }

    JumpModel jm{cfg.jump_times, cfg.jump_sizes};
    const NoiseModel noise{[&] {
        Mat u(d);
        for (int i = 0; i < d; ++i) u(i, i) = cfg.ups;
        return u;
    }()};
    mkt.observed = observe(mkt.path, schedules, noise, jm.times.empty() ? nullptr : &jm, rng);
    return mkt;
}

inline RepResult run_replication(const ScenarioConfig& cfg, long n, std::uint64_t rep_seed) {
    RepResult res;
    try {
        Rng rng(rep_seed);
        const double theta = cfg.resolve_theta();

        if (cfg.estimator == EstimatorKind::ParamJump) {
            const auto z = simulate_jump_model(n, cfg.sigma, cfg.ups, cfg.jump_times, cfg.jump_sizes, rng);
            const auto gh = jump_mle(z, cfg.sigma, cfg.ups, cfg.jump_times);
            const double avar = 2.0 * cfg.sigma * std::sqrt(cfg.ups);
            const double scale = std::pow(static_cast<double>(n), 0.25);
            for (std::size_t k = 0; k < gh.size(); ++k) {
                const double err = gh[k] - cfg.jump_sizes[k];
                res.stats.push_back(gh[k]);
                res.stats.push_back(err);
                res.stats.push_back(scale * err / std::sqrt(avar));
            }
            res.ok = true;
            return res;
        }

        const int d = cfg.d;
        SimulatedMarket mkt = simulate_observed(cfg, n, rng);
        const auto& observed = mkt.observed;
        const Mat truth = mkt.path.qv_matrix(mkt.path.times.size() - 1);
        const double scale = std::pow(static_cast<double>(n), 0.25);

        if (cfg.estimator == EstimatorKind::Mrc || cfg.estimator == EstimatorKind::MrcFast) {
            const WeightSpec spec = make_weight(cfg.weight);
            MrcOptions opts;
            opts.n_override = n;  // mrc and mrc-fast share the exact recursion for exp-decay weights
            const EstimateReport rep = mrc(observed, spec, theta, cfg.horizon, opts);
            const Tensor4 avar = oracle_avar_const(spec, theta, cfg.instantaneous_cov(),
                                                   NoiseModel::iid(d, cfg.ups).ups, cfg.scheme_chi(),
                                                   cfg.scheme_G(), cfg.horizon);
            const Mat z = studentize(rep.estimate, truth, avar, n);
            for (int k = 0; k < d; ++k)
                for (int l = k; l < d; ++l) {
                    res.stats.push_back(rep.estimate(k, l));
                    res.stats.push_back(rep.estimate(k, l) - truth(k, l));
                    res.stats.push_back(z(k, l));
                }
        } else if (cfg.estimator == EstimatorKind::Rk) {
            if (d != 1) throw std::invalid_argument("rk estimator is univariate");
            // realized kernel on jitter-adjusted synchronized returns with
            // bandwidth H = theta sqrt(n)
            const auto grid = refresh_times(observed, cfg.horizon);
            const SyncGrid sg = next_tick_interpolate(observed, grid, cfg.horizon);
            const auto v = detail::synced_values(observed, sg)[0];
            const int H = window_size(theta, n);
            const AdjustedReturns adj = jitter(v, H);
            const double rk = realized_kernel_opt(adj.r, static_cast<double>(H));
            const double err = rk - truth(0, 0);
            const double bound = 8.0 * std::pow(cfg.sigma, 3) * std::sqrt(cfg.ups);
            res.stats.push_back(rk);
            res.stats.push_back(err);
            res.stats.push_back(bound > 0.0 ? scale * err / std::sqrt(bound)
                                            : std::numeric_limits<double>::quiet_NaN());
        } else {  // Threshold
            if (d != 1) throw std::invalid_argument("threshold estimator is univariate");
            const WeightSpec g1 = make_weight(cfg.weight);
            const WeightSpec g2 = make_weight(cfg.weight_jv);
            double c = cfg.c;
            if (c <= 0.0)
                c = std::max(default_threshold_c(g1, theta, cfg.sigma, cfg.ups, n, cfg.w),
                             default_threshold_c(g2, theta, cfg.sigma, cfg.ups, n, cfg.w));
            const JumpDecomposition jd =
                threshold_estimators(observed[0], g1, g2, c, cfg.w, theta, cfg.horizon, n);
            const double sig2 = truth(0, 0);
            const double jsum = cfg.jump_sum_sq();
            const auto [vc1, _unused] = v_C_v_J(g1, theta, cfg.sigma, cfg.ups, jsum);
            const auto [_unused2, vj2] = v_C_v_J(g2, theta, cfg.sigma, cfg.ups, jsum);
            res.stats.push_back(jd.iv);
            res.stats.push_back(jd.jv);
            res.stats.push_back(jd.iv - sig2);
            res.stats.push_back(jd.jv - jsum);
            res.stats.push_back(vc1 > 0.0 ? scale * (jd.iv - sig2) / std::sqrt(vc1)
                                          : std::numeric_limits<double>::quiet_NaN());
            res.stats.push_back(vj2 > 0.0 ? scale * (jd.jv - jsum) / std::sqrt(vj2)
                                          : std::numeric_limits<double>::quiet_NaN());
        }
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.what = e.what();
    }
    return res;
}

// ---- aggregation ---------------------------------------------------------

struct StatSummary {
    std::string label;
    double mean = 0.0, bias = 0.0, rmse = 0.0;
    double var_scaled_error = 0.0;  // MC variance of n^{1/4} error
    double z_mean = 0.0, z_var = 0.0, z_skew = 0.0, z_kurt = 0.0;
    double coverage = 0.0;  // fraction with |z| <= 1.96
};

struct NSummary {
    long n = 0;
    long failures = 0;
    std::vector<StatSummary> stats;
    std::vector<std::vector<double>> z_samples;  // per tracked statistic, for qq plots
};

struct MCSummary {
    ScenarioConfig cfg;
    std::vector<NSummary> per_n;
    double wall_seconds = 0.0;  // reported separately, never in the summary JSON
};

namespace detail {

inline std::vector<std::string> stat_labels(const ScenarioConfig& cfg) {
    std::vector<std::string> out;
    switch (cfg.estimator) {
        case EstimatorKind::Mrc:
        case EstimatorKind::MrcFast:
            for (int k = 0; k < cfg.d; ++k)
                for (int l = k; l < cfg.d; ++l)
                    out.push_back("cov_" + std::to_string(k + 1) + std::to_string(l + 1));
            break;
        case EstimatorKind::Rk:
            out.push_back("rk");
            break;
        case EstimatorKind::Threshold:
            out.push_back("iv");
            out.push_back("jv");
            break;
        case EstimatorKind::ParamJump:
            for (std::size_t k = 0; k < cfg.jump_times.size(); ++k)
                out.push_back("gamma_" + std::to_string(k + 1));
            break;
    }
    return out;
}

// Moments with pairwise summation so worker count cannot change results.
inline void moments(const std::vector<double>& x, double& mean, double& var, double& skew, double& kurt) {
    const double m = pairwise_sum(x) / x.size();
    std::vector<double> c2(x.size()), c3(x.size()), c4(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - m;
        c2[i] = d * d;
        c3[i] = d * d * d;
        c4[i] = d * d * d * d;
    }
    const double v = pairwise_sum(c2) / x.size();
    mean = m;
    var = v;
    skew = v > 0.0 ? pairwise_sum(c3) / x.size() / std::pow(v, 1.5) : 0.0;
    kurt = v > 0.0 ? pairwise_sum(c4) / x.size() / (v * v) : 0.0;
}

}  // namespace detail

inline MCSummary run_scenario(const ScenarioConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    int workers = cfg.workers;
    if (workers <= 0) {
        const char* env = std::getenv("PREAVG_WORKERS");
        workers = env ? std::max(1, std::atoi(env)) : 1;
    }

    MCSummary summary;
    summary.cfg = cfg;
    const auto labels = detail::stat_labels(cfg);

    for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
        const long n = cfg.n_list[ni];
        std::vector<RepResult> results(cfg.reps);
        std::atomic<long> next{0};
        auto work = [&] {
            for (;;) {
                const long r = next.fetch_add(1);
                if (r >= cfg.reps) break;
                const std::uint64_t rep_seed = stream_seed(cfg.seed, ni * 1000003ULL + static_cast<std::uint64_t>(r));
                results[r] = run_replication(cfg, n, rep_seed);
            }
        };
        if (workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int wk = 0; wk < workers; ++wk) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }

        NSummary ns;
        ns.n = n;
        const std::size_t nstats = labels.size();
        std::vector<std::vector<double>> est(nstats), err(nstats), zs(nstats);
        for (const auto& r : results) {
            if (!r.ok) {
                ++ns.failures;
                continue;
            }
            if (cfg.estimator == EstimatorKind::Threshold) {
                // layout: iv, jv, err_iv, err_jv, z_iv, z_jv
                est[0].push_back(r.stats[0]);
                est[1].push_back(r.stats[1]);
                err[0].push_back(r.stats[2]);
                err[1].push_back(r.stats[3]);
                zs[0].push_back(r.stats[4]);
                zs[1].push_back(r.stats[5]);
            } else {
                for (std::size_t s = 0; s < nstats; ++s) {
                    est[s].push_back(r.stats[3 * s]);
                    err[s].push_back(r.stats[3 * s + 1]);
                    zs[s].push_back(r.stats[3 * s + 2]);
                }
            }
        }
        const double scale = std::sqrt(std::pow(static_cast<double>(n), 0.5));
        for (std::size_t s = 0; s < nstats; ++s) {
            StatSummary st;
            st.label = labels[s];
            if (!err[s].empty()) {
                const std::size_t m = err[s].size();
                st.bias = pairwise_sum(err[s]) / m;
                std::vector<double> sq(m), scaled(m);
                for (std::size_t i = 0; i < m; ++i) {
                    sq[i] = err[s][i] * err[s][i];
                    scaled[i] = scale * err[s][i];  // n^{1/4} * err, squared below
                }
                st.rmse = std::sqrt(pairwise_sum(sq) / m);
                st.mean = pairwise_sum(est[s]) / m;
                double zm, zv, zskew, zkurt;
                detail::moments(scaled, zm, zv, zskew, zkurt);
                st.var_scaled_error = zv;
                bool any_z = false;
                for (double z : zs[s]) any_z |= !std::isnan(z);
                if (any_z) {
                    detail::moments(zs[s], st.z_mean, st.z_var, st.z_skew, st.z_kurt);
                    std::vector<double> cov(zs[s].size());
                    for (std::size_t i = 0; i < zs[s].size(); ++i)
                        cov[i] = std::abs(zs[s][i]) <= 1.959963984540054 ? 1.0 : 0.0;
                    st.coverage = pairwise_sum(cov) / cov.size();
                }
            }
            ns.stats.push_back(st);
            ns.z_samples.push_back(zs[s]);
        }
        summary.per_n.push_back(std::move(ns));
    }
    summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return summary;
}

// Deterministic summary JSON: depends only on (config, seed), not on worker
// count or timing.
inline json summary_json(const MCSummary& s) {
    json j;
    j["seed"] = s.cfg.seed;
    j["reps"] = s.cfg.reps;
    json per_n = json::array();
    for (const auto& ns : s.per_n) {
        json block;
        block["n"] = ns.n;
        block["failures"] = ns.failures;
        json stats = json::array();
        for (const auto& st : ns.stats) {
            json e;
            e["label"] = st.label;
            e["mean"] = st.mean;
            e["bias"] = st.bias;
            e["rmse"] = st.rmse;
            e["var_scaled_error"] = st.var_scaled_error;
            e["z_mean"] = st.z_mean;
            e["z_var"] = st.z_var;
            e["z_skew"] = st.z_skew;
            e["z_kurt"] = st.z_kurt;
            e["coverage"] = st.coverage;
            stats.push_back(e);
        }
        block["stats"] = stats;
        per_n.push_back(block);
    }
    j["per_n"] = per_n;
    return j;
}

// Ranking table for the efficiency comparison: MC variance of n^{1/4} error
// and its ratio to the parametric bound 8 sigma^3 sqrt(Ups).
inline json compare_efficiency(const std::vector<ScenarioConfig>& configs) {
    json rows = json::array();
    for (const auto& cfg : configs) {
        MCSummary s = run_scenario(cfg);
        const double bound = 8.0 * std::pow(cfg.sigma, 3) * std::sqrt(cfg.ups);
        for (const auto& ns : s.per_n) {
            json row;
            row["estimator"] = cfg.estimator == EstimatorKind::Rk ? "rk" : ("mrc:" + cfg.weight);
            row["n"] = ns.n;
            row["var_scaled_error"] = ns.stats[0].var_scaled_error;
            row["bound"] = bound;
            row["ratio"] = bound > 0.0 ? ns.stats[0].var_scaled_error / bound : 0.0;
            row["degenerate"] = !(bound > 0.0);
            rows.push_back(row);
        }
    }
    return rows;
}

// Standard normal quantile (Acklam's approximation, ~1e-9 absolute error).
inline double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                3.754408661907416e+00};
    const double plow = 0.02425;
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("normal_quantile: p in (0,1) required");
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// QQ-plot points of studentized errors and RMSE-vs-n points, as plain CSV.
inline void emit_plot_data(const MCSummary& s, std::ostream& qq_csv, std::ostream& rmse_csv) {
    qq_csv << "n,label,theoretical_quantile,sample_quantile\n";
    for (const auto& ns : s.per_n) {
        for (std::size_t st = 0; st < ns.z_samples.size(); ++st) {
            std::vector<double> z = ns.z_samples[st];
            std::sort(z.begin(), z.end());
            const std::size_t m = z.size();
            for (std::size_t i = 0; i < m; ++i) {
                // inverse normal CDF via Acklam-style rational approximation
                const double p = (static_cast<double>(i) + 0.5) / m;
                qq_csv << ns.n << ',' << ns.stats[st].label << ',' << normal_quantile(p) << ',' << z[i]
                       << '\n';
            }
        }
    }
    rmse_csv << "n,label,log10_n,log10_rmse\n";
    for (const auto& ns : s.per_n)
        for (const auto& st : ns.stats)
            rmse_csv << ns.n << ',' << st.label << ',' << std::log10(static_cast<double>(ns.n)) << ','
                     << (st.rmse > 0.0 ? std::log10(st.rmse) : 0.0) << '\n';
}

// summary.json (deterministic), plot CSVs, and the wall-clock time in a
// separate file so the JSON stays reproducible across machines.
inline void write_scenario_outputs(const MCSummary& s, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream js(dir + "/summary.json");
    js << summary_json(s).dump(2) << '\n';
    std::ofstream qq(dir + "/qq.csv"), rm(dir + "/rmse.csv");
    emit_plot_data(s, qq, rm);
    std::ofstream tm(dir + "/timing.txt");
    tm << "wall_seconds=" << s.wall_seconds << '\n';
}

}  // namespace preavg
