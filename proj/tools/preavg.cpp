// Command-line front end for the pre-averaging toolkit.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "preavg/estimators.hpp"
#include "preavg/mc.hpp"
#include "preavg/param_jump.hpp"
#include "preavg/tick_data.hpp"

using preavg::json;

namespace {

preavg::ScenarioConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CLI::ValidationError("config", "cannot open " + path);
    return preavg::parse_config(is);
}

std::vector<preavg::TickSchedule> load_ticks(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CLI::ValidationError("input", "cannot open " + path);
    return preavg::read_ticks_csv(is);
}

json report_to_json(const preavg::EstimateReport& rep) {
    json j;
    j["weight"] = rep.weight;
    j["theta"] = rep.theta;
    j["k_n"] = rep.k_n;
    j["N_T"] = rep.N_T;
    j["n"] = rep.n;
    j["jittered"] = rep.jittered;
    j["grid_truncated"] = rep.grid_truncated;
    const int d = rep.estimate.dim();
    json est = json::array(), bias = json::array();
    for (int k = 0; k < d; ++k) {
        json er = json::array(), br = json::array();
        for (int l = 0; l < d; ++l) {
            er.push_back(rep.estimate(k, l));
            br.push_back(rep.bias_correction(k, l));
        }
        est.push_back(er);
        bias.push_back(br);
    }
    j["estimate"] = est;
    j["bias_correction"] = bias;
    if (!std::isnan(rep.long_run_variation)) j["long_run_variation"] = rep.long_run_variation;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pre-averaging estimators for noisy, non-synchronous tick data"};
    app.require_subcommand(1);

    // ---- simulate --------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Draw one market scenario and write tick data as CSV");
    std::string sim_config, sim_out;
    long sim_n = 0;
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    sim->add_option("--config", sim_config, "scenario config file")->required();
    sim->add_option("--n", sim_n, "override the (first) frequency parameter n");
    sim->add_option("--seed", sim_seed, "override the master seed")->each([&](const std::string&) { sim_seed_set = true; });
    sim->add_option("--out", sim_out, "output CSV path (default stdout)");

    // ---- estimate --------------------------------------------------------
    auto* est = app.add_subcommand("estimate", "Pre-averaged covariance estimate from tick CSV");
    std::string est_input, est_weight = "doubleexp";
    double est_theta = 1.0, est_horizon = 1.0;
    long est_n = 0;
    int est_lrv_m = 0;
    bool est_no_jitter = false;
    est->add_option("--input", est_input, "tick CSV with values")->required();
    est->add_option("--weight", est_weight, "weight: tent | doubleexp | doubleexp:<rate>");
    est->add_option("--theta", est_theta, "window scale theta")->required();
    est->add_option("--horizon", est_horizon, "time horizon T");
    est->add_option("--n", est_n, "frequency parameter (default: observed N_T)");
    est->add_option("--lrv-m", est_lrv_m, "window for the long-run variation diagnostic");
    est->add_flag("--no-jitter", est_no_jitter, "plain construction without end-point averaging");

    // ---- decompose -------------------------------------------------------
    auto* dec = app.add_subcommand("decompose", "Threshold split into diffusion and jump parts");
    std::string dec_input, dec_weight = "doubleexp", dec_weight_jv = "doubleexp:2.2360679774997896";
    double dec_theta = 1.0, dec_horizon = 1.0, dec_c = 0.0, dec_w = 0.1875;
    double dec_sigma = 0.0, dec_ups = 0.0;
    long dec_n = 0;
    dec->add_option("--input", dec_input, "tick CSV with values (univariate)")->required();
    dec->add_option("--weight", dec_weight, "weight for the diffusion part");
    dec->add_option("--weight-jv", dec_weight_jv, "weight for the jump part");
    dec->add_option("--theta", dec_theta, "window scale theta")->required();
    dec->add_option("--c", dec_c, "threshold constant (omit for the scale-based default)");
    dec->add_option("--w", dec_w, "threshold exponent, in (1/8, 1/4)");
    dec->add_option("--sigma", dec_sigma, "volatility scale for the default threshold");
    dec->add_option("--ups", dec_ups, "noise variance for the default threshold");
    dec->add_option("--horizon", dec_horizon, "time horizon T");
    dec->add_option("--n", dec_n, "frequency parameter (default: observed N_T)");

    // ---- param-jump ------------------------------------------------------
    auto* pj = app.add_subcommand("param-jump", "Jump sizes in the parametric model (known sigma, Ups)");
    std::string pj_input;
    double pj_sigma = 1.0, pj_ups = 0.0;
    std::vector<double> pj_times;
    pj->add_option("--input", pj_input, "file with one observation z_i per line")->required();
    pj->add_option("--sigma", pj_sigma, "known volatility")->required();
    pj->add_option("--ups", pj_ups, "known noise variance")->required();
    pj->add_option("--jump-times", pj_times, "jump times S_k in (0,1)")->required()->delimiter(',');

    // ---- montecarlo ------------------------------------------------------
    auto* mc = app.add_subcommand("montecarlo", "Run a Monte Carlo scenario from a config file");
    std::string mc_config, mc_out;
    int mc_workers = -1;
    mc->add_option("config", mc_config, "scenario config file")->required();
    mc->add_option("--out", mc_out, "output directory (overrides the config's `out`)");
    mc->add_option("--workers", mc_workers, "worker threads (default: config, then PREAVG_WORKERS, then 1)");

    // ---- report ----------------------------------------------------------
    auto* rep = app.add_subcommand("report", "Readable table from a summary.json");
    std::string rep_input;
    rep->add_option("summary", rep_input, "summary.json from `montecarlo`")->required();

    // ---- weights ---------------------------------------------------------
    auto* wt = app.add_subcommand("weights", "Weight-function constants and correlation table");
    std::string wt_name = "doubleexp";
    bool wt_table = false;
    wt->add_option("name", wt_name, "tent | doubleexp | doubleexp:<rate>");
    wt->add_flag("--table", wt_table, "also print phi_{g,g} and phi_{g',g'} on a y-grid");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            preavg::ScenarioConfig cfg = load_config(sim_config);
            if (sim_n > 0) cfg.n_list = {sim_n};
            if (sim_seed_set) cfg.seed = sim_seed;
            preavg::Rng rng(preavg::stream_seed(cfg.seed, 0));
            const auto mkt = preavg::simulate_observed(cfg, cfg.n_list.front(), rng);
            if (sim_out.empty()) {
                preavg::write_ticks_csv(std::cout, mkt.observed);
            } else {
                std::ofstream os(sim_out);
                preavg::write_ticks_csv(os, mkt.observed);
                const preavg::Mat truth = mkt.path.qv_matrix(mkt.path.times.size() - 1);
                json j;
                j["out"] = sim_out;
                json qv = json::array();
                for (int k = 0; k < truth.dim(); ++k) {
                    json row = json::array();
                    for (int l = 0; l < truth.dim(); ++l) row.push_back(truth(k, l));
                    qv.push_back(row);
                }
                j["true_qv"] = qv;
                std::cout << j.dump(2) << '\n';
            }
        } else if (*est) {
            const auto ticks = load_ticks(est_input);
            preavg::MrcOptions opts;
            opts.jittered = !est_no_jitter;
            opts.n_override = est_n;
            opts.lrv_m = est_lrv_m;
            const auto r = preavg::mrc(ticks, preavg::make_weight(est_weight), est_theta, est_horizon, opts);
            std::cout << report_to_json(r).dump(2) << '\n';
        } else if (*dec) {
            const auto ticks = load_ticks(dec_input);
            if (ticks.size() != 1) throw std::invalid_argument("decompose: expects exactly one asset");
            const auto g1 = preavg::make_weight(dec_weight);
            const auto g2 = preavg::make_weight(dec_weight_jv);
            double c = dec_c;
            if (c <= 0.0) {
                if (dec_sigma <= 0.0 || dec_ups <= 0.0)
                    throw std::invalid_argument("decompose: pass --c, or --sigma and --ups for the default");
                const long n = dec_n > 0 ? dec_n : static_cast<long>(ticks[0].times.size()) - 1;
                c = std::max(preavg::default_threshold_c(g1, dec_theta, dec_sigma, dec_ups, n, dec_w),
                             preavg::default_threshold_c(g2, dec_theta, dec_sigma, dec_ups, n, dec_w));
            }
            const auto jd = preavg::threshold_estimators(ticks[0], g1, g2, c, dec_w, dec_theta,
                                                         dec_horizon, dec_n);
            json j;
            j["iv"] = jd.iv;
            j["jv"] = jd.jv;
            j["qv"] = jd.qv;
            j["rho"] = jd.rho;
            j["c"] = c;
            j["w"] = dec_w;
            j["k_n"] = jd.k_n;
            j["n"] = jd.n;
            j["blocks_over"] = jd.blocks_over;
            j["blocks_total"] = jd.blocks_total;
            std::cout << j.dump(2) << '\n';
        } else if (*pj) {
            std::ifstream is(pj_input);
            if (!is) throw std::invalid_argument("param-jump: cannot open " + pj_input);
            std::vector<double> z;
            double v;
            while (is >> v) z.push_back(v);
            const auto gamma = preavg::jump_mle(z, pj_sigma, pj_ups, pj_times);
            json j;
            j["n"] = z.size();
            j["jump_times"] = pj_times;
            j["gamma"] = gamma;
            j["avar"] = 2.0 * pj_sigma * std::sqrt(pj_ups);
            std::cout << j.dump(2) << '\n';
        } else if (*mc) {
            preavg::ScenarioConfig cfg = load_config(mc_config);
            if (mc_workers >= 0) cfg.workers = mc_workers;
            if (!mc_out.empty()) cfg.out_dir = mc_out;
            const auto summary = preavg::run_scenario(cfg);
            if (!cfg.out_dir.empty()) preavg::write_scenario_outputs(summary, cfg.out_dir);
            std::cout << preavg::summary_json(summary).dump(2) << '\n';
            std::cerr << "wall_seconds=" << summary.wall_seconds << '\n';
        } else if (*rep) {
            std::ifstream is(rep_input);
            if (!is) throw std::invalid_argument("report: cannot open " + rep_input);
            json j;
            is >> j;
            std::cout << "seed=" << j["seed"] << " reps=" << j["reps"] << "\n\n";
            for (const auto& block : j["per_n"]) {
                std::cout << "n=" << block["n"] << " failures=" << block["failures"] << '\n';
                std::printf("  %-10s %12s %12s %12s %8s %8s %8s\n", "stat", "bias", "rmse",
                            "var(n^1/4 e)", "z_mean", "z_var", "cover");
                for (const auto& st : block["stats"])
                    std::printf("  %-10s %12.5g %12.5g %12.5g %8.3f %8.3f %8.3f\n",
                                st["label"].get<std::string>().c_str(), st["bias"].get<double>(),
                                st["rmse"].get<double>(), st["var_scaled_error"].get<double>(),
                                st["z_mean"].get<double>(), st["z_var"].get<double>(),
                                st["coverage"].get<double>());
                std::cout << '\n';
            }
        } else if (*wt) {
            const auto spec = preavg::make_weight(wt_name);
            const auto c = preavg::constants(spec);
            json j;
            j["name"] = spec.name;
            j["psi1"] = c.psi1;
            j["psi2"] = c.psi2;
            j["phi22"] = c.phi22;
            j["phi12"] = c.phi12;
            j["phi11"] = c.phi11;
            j["quadrature_error"] = c.error;
            std::cout << j.dump(2) << '\n';
            if (wt_table) {
                std::cout << "y,phi_gg,phi_dgdg\n";
                const double ymax = spec.support == preavg::WeightSupport::Bounded01 ? 1.0 : 5.0;
                for (int i = 0; i <= 50; ++i) {
                    const double y = ymax * i / 50.0;
                    std::printf("%.4f,%.12g,%.12g\n", y, preavg::phi(preavg::Fn::G, preavg::Fn::G, spec, y),
                                preavg::phi(preavg::Fn::Gprime, preavg::Fn::Gprime, spec, y));
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
