#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "preavg/estimators.hpp"
#include "preavg/market_sim.hpp"
#include "preavg/timegrid.hpp"

using namespace preavg;

namespace {

TickSchedule with_values(std::vector<double> values) {
    TickSchedule s;
    s.asset_id = 1;
    s.values = std::move(values);
    s.times.resize(s.values.size());
    const long n = static_cast<long>(s.values.size()) - 1;
    for (long i = 0; i <= n; ++i) s.times[i] = static_cast<double>(i) / n;
    return s;
}

std::vector<double> random_walk(long n, Rng& rng, double noise = 0.0) {
    std::vector<double> v(n + 1);
    for (long i = 1; i <= n; ++i) v[i] = v[i - 1] + rng.normal() / std::sqrt(static_cast<double>(n));
    if (noise > 0.0)
        for (auto& x : v) x += std::sqrt(noise) * rng.normal();
    return v;
}

}  // namespace

TEST_CASE("bounded pre-averaging: tent expansions") {
    const auto tent = make_tent();
    // k_n = 2: single term 0.5 * (v_{i+1} - v_i)
    const std::vector<double> v{0.0, 1.0, 3.0, 6.0, 10.0};
    const auto out = preaverage_bounded(v, tent, 2);
    REQUIRE(out.size() == 4);
    for (std::size_t i = 0; i < out.size(); ++i)
        REQUIRE(out[i] == Catch::Approx(0.5 * (v[i + 1] - v[i])).margin(1e-14));

    // constant values -> zero
    const auto zero = preaverage_bounded(std::vector<double>(20, 3.14), tent, 5);
    for (double x : zero) REQUIRE(x == 0.0);

    // alternating 0,1 with k_n = 4: first block cancels exactly
    const std::vector<double> alt{0, 1, 0, 1, 0, 1, 0, 1};
    const auto a = preaverage_bounded(alt, tent, 4);
    REQUIRE(a[0] == Catch::Approx(0.0).margin(1e-15));

    REQUIRE_THROWS_AS(preaverage_bounded({0.0, 1.0}, tent, 5), std::invalid_argument);
}

TEST_CASE("jitter: endpoint averages and adjusted returns") {
    // linear series V_p = p, k_n = 2, N_T = 6
    std::vector<double> v{0, 1, 2, 3, 4, 5, 6};
    const auto adj = jitter(v, 2);
    REQUIRE(adj.p_lo == 2);
    REQUIRE(adj.p_hi() == 5);
    REQUIRE(adj.at(2) == Catch::Approx(2.0 - 0.5));   // V_2 - mean(V_0, V_1)
    REQUIRE(adj.at(3) == Catch::Approx(1.0));
    REQUIRE(adj.at(4) == Catch::Approx(1.0));
    REQUIRE(adj.at(5) == Catch::Approx(5.5 - 4.0));   // mean(V_5, V_6) - V_4

    const auto flat = jitter(std::vector<double>(11, 2.0), 3);
    for (double x : flat.r) REQUIRE(x == 0.0);

    REQUIRE_THROWS_AS(jitter(std::vector<double>(4, 0.0), 2), std::invalid_argument);
}

TEST_CASE("jittered pre-averaging matches the bounded construction on interior blocks") {
    Rng rng(5);
    const auto tent = make_tent();
    const long N = 200;
    const int k_n = 10;
    const auto v = random_walk(N, rng, 0.01);
    const auto bounded = preaverage_bounded(v, tent, k_n);
    const auto adj = jitter(v, k_n);
    const auto jit = preaverage_jittered(adj, discretize(tent, k_n));
    // Ytil_i = Ybar_i whenever the window stays clear of the jittered ends
    for (long i = 2 * k_n; i <= N - 2 * k_n; ++i)
        REQUIRE(jit[i - k_n] == Catch::Approx(bounded[i]).margin(1e-12));
}

TEST_CASE("single unit return gives the weight profile") {
    const long N = 50;
    const int k_n = 5;
    const long p0 = 25;
    std::vector<double> v(N + 1, 0.0);
    for (long p = p0; p <= N; ++p) v[p] = 1.0;
    const auto de = make_double_exponential(1.0);
    const auto adj = jitter(v, k_n);
    const auto direct = preaverage_jittered(adj, discretize(de, k_n));
    const auto fast = preaverage_exponential(adj, 1.0, k_n);
    for (long i = k_n; i <= N - k_n + 1; ++i) {
        const double expected = std::exp(-std::abs(static_cast<double>(p0 - i)) / k_n);
        REQUIRE(direct[i - k_n] == Catch::Approx(expected).margin(1e-11));
        REQUIRE(fast[i - k_n] == Catch::Approx(expected).margin(1e-13));
    }
}

TEST_CASE("fast exponential recursion equals direct summation") {
    Rng rng(6);
    for (int rep = 0; rep < 100; ++rep) {
        const long N = 100 + static_cast<long>(rng.raw() % 4000);
        const double theta = 0.2 + 0.6 * rng.uniform();
        const auto v = random_walk(N, rng, 0.001);
        const auto sched = with_values(v);
        MrcOptions direct_opts, fast_opts;
        direct_opts.force_direct = true;
        const auto spec = make_double_exponential(1.0);
        const auto a = mrc({sched}, spec, theta, 1.0, direct_opts);
        const auto b = mrc({sched}, spec, theta, 1.0, fast_opts);
        const auto c = mrc_fast_exponential({sched}, 1.0, theta, 1.0);
        REQUIRE(b.estimate(0, 0) ==
                Catch::Approx(a.estimate(0, 0)).epsilon(1e-9).margin(1e-12));
        REQUIRE(c.estimate(0, 0) == b.estimate(0, 0));
    }
}

TEST_CASE("mrc scale equivariance") {
    Rng rng(7);
    const auto v = random_walk(500, rng, 0.01);
    auto sched = with_values(v);
    const auto spec = make_double_exponential(1.0);
    const auto base = mrc({sched}, spec, 0.5, 1.0);
    for (auto& x : sched.values) x *= 3.0;
    const auto scaled = mrc({sched}, spec, 0.5, 1.0);
    REQUIRE(scaled.estimate(0, 0) == Catch::Approx(9.0 * base.estimate(0, 0)).epsilon(1e-13));
    REQUIRE(scaled.bias_correction(0, 0) ==
            Catch::Approx(9.0 * base.bias_correction(0, 0)).epsilon(1e-13));
}

TEST_CASE("mrc recovers the integrated variance of pure latent data") {
    Rng rng(8);
    const auto tent = make_tent();
    const long n = 10000;
    int hits = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        const auto v = random_walk(n, rng);  // sigma = 1, Ups = 0
        MrcOptions opts;
        opts.jittered = false;
        const auto r = mrc({with_values(v)}, tent, 1.0, 1.0, opts);
        // truth for a standard random walk: realized variance of the fine path
        double truth = 0.0;
        for (long p = 1; p <= n; ++p) {
            const double d = v[p] - v[p - 1];
            truth += d * d;
        }
        const Tensor4 av = oracle_avar_const(tent, 1.0, Mat::identity(1), Mat(1), Mat::identity(1), 1.0, 1.0);
        const double se = std::sqrt(av.at(0, 0, 0, 0)) / std::pow(static_cast<double>(n), 0.25);
        if (std::abs(r.estimate(0, 0) - truth) <= 4.0 * se) ++hits;
    }
    REQUIRE(hits >= 19);
}

TEST_CASE("mrc of pure noise goes to zero") {
    Rng rng(9);
    const auto de = make_double_exponential(1.0);
    const double c = 0.01;
    const long n = 10000;
    int hits = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> v(n + 1);
        for (auto& x : v) x = std::sqrt(c) * rng.normal();
        const auto r = mrc({with_values(v)}, de, 0.3, 1.0);
        Mat ups(1);
        ups(0, 0) = c;
        const Tensor4 av = oracle_avar_const(de, 0.3, Mat(1), ups, Mat::identity(1), 1.0, 1.0);
        const double se = std::sqrt(av.at(0, 0, 0, 0)) / std::pow(static_cast<double>(n), 0.25);
        if (std::abs(r.estimate(0, 0)) <= 4.0 * se) ++hits;
    }
    REQUIRE(hits >= 19);
}

TEST_CASE("bivariate mrc recovers the off-diagonal covariance") {
    Rng rng(10);
    Mat corr(2);
    corr(0, 0) = corr(1, 1) = 1.0;
    corr(0, 1) = corr(1, 0) = 0.5;
    auto pm = PathModel::constant_vol(cholesky_psd(corr));
    const long n = 5000;
    double acc = 0.0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
        const auto path = simulate_path(pm, n, 1.0, rng);
        std::vector<TickSchedule> ss{sample_equidistant(n, 1.0, 1), sample_equidistant(n, 1.0, 2)};
        const auto obs = observe(path, ss, NoiseModel::iid(2, 0.001), nullptr, rng);
        const auto r = mrc(obs, make_double_exponential(1.0), 0.3, 1.0);
        REQUIRE(r.estimate.symmetric(1e-12));
        acc += r.estimate(0, 1);
    }
    REQUIRE(acc / reps == Catch::Approx(0.5).margin(0.08));
}

TEST_CASE("realized kernel definitions") {
    REQUIRE(realized_kernel(std::vector<double>(100, 0.0), [](double) { return 1.0; }, 5.0) == 0.0);

    Rng rng(11);
    std::vector<double> r(200);
    for (auto& x : r) x = rng.normal();
    double g0 = 0.0, g1 = 0.0;
    for (double x : r) g0 += x * x;
    for (std::size_t j = 1; j < r.size(); ++j) g1 += r[j] * r[j - 1];
    // K(0)=1, K(x)=0 for x>=1, H=1: RK = gamma_0 + gamma_1 + gamma_{-1}
    const auto k01 = [](double x) { return x < 1.0 ? 1.0 : 0.0; };
    REQUIRE(realized_kernel(r, k01, 1.0) == Catch::Approx(g0 + 2.0 * g1).epsilon(1e-12));

    // O(N) evaluation of the flat-top kernel K_opt matches the generic path
    const auto k_opt = [](double x) { return (1.0 + x) * std::exp(-x); };
    REQUIRE(realized_kernel_opt(r, 7.0) ==
            Catch::Approx(realized_kernel(r, k_opt, 7.0)).epsilon(1e-9));
    REQUIRE_THROWS_AS(realized_kernel_opt(r, 0.5), std::invalid_argument);
}

TEST_CASE("oracle asymptotic variance closed forms") {
    const auto de = make_double_exponential(1.0);
    const double sigma = 1.3, ups = 0.02, theta = 0.4;
    Mat S(1), U(1);
    S(0, 0) = sigma * sigma;
    U(0, 0) = ups;
    const Tensor4 av = oracle_avar_const(de, theta, S, U, Mat::identity(1), 1.0, 1.0);
    const double p2 = de.psi2 * de.psi2;
    const double expected = 4.0 / p2 *
                            (de.phi22 * theta * sigma * sigma * sigma * sigma +
                             2.0 * de.phi12 * sigma * sigma * ups / theta +
                             de.phi11 * ups * ups / (theta * theta * theta));
    REQUIRE(av.at(0, 0, 0, 0) == Catch::Approx(expected).epsilon(1e-12));

    // oracle theta hits the parametric bound exactly
    const double th_star = std::sqrt(ups) / sigma;
    const Tensor4 opt = oracle_avar_const(de, th_star, S, U, Mat::identity(1), 1.0, 1.0);
    REQUIRE(opt.at(0, 0, 0, 0) ==
            Catch::Approx(8.0 * sigma * sigma * sigma * std::sqrt(ups)).epsilon(1e-10));

    // zero-noise reduction
    const Tensor4 nn = oracle_avar_const(de, theta, S, Mat(1), Mat::identity(1), 2.0, 0.7);
    REQUIRE(nn.at(0, 0, 0, 0) ==
            Catch::Approx(4.0 / p2 * de.phi22 * theta * sigma * sigma * sigma * sigma * 2.0 * 0.7)
                .epsilon(1e-12));

    REQUIRE_THROWS_AS(oracle_avar_const(de, theta, S, U, Mat::identity(1), 0.0, 1.0),
                      std::invalid_argument);
}

TEST_CASE("path-integrated avar reduces to the constant case") {
    const auto de = make_double_exponential(1.0);
    std::vector<double> times;
    std::vector<Mat> S, U, chi;
    std::vector<double> G;
    for (int j = 0; j <= 50; ++j) {
        times.push_back(j / 50.0);
        S.push_back(Mat::identity(1));
        Mat u(1);
        u(0, 0) = 0.01;
        U.push_back(u);
        chi.push_back(Mat::identity(1));
        G.push_back(1.5);
    }
    const Tensor4 a = oracle_avar(de, 0.3, times, S, U, chi, G, 1.0);
    const Tensor4 b = oracle_avar_const(de, 0.3, S[0], U[0], chi[0], 1.5, 1.0);
    REQUIRE(a.at(0, 0, 0, 0) == Catch::Approx(b.at(0, 0, 0, 0)).epsilon(1e-12));
}

TEST_CASE("studentize") {
    Mat est = Mat::identity(2), truth = Mat::identity(2);
    Tensor4 av(2);
    av.at(0, 0, 0, 0) = 1.0;
    av.at(1, 1, 1, 1) = 0.0;  // degenerate entry
    const Mat z = studentize(est, truth, av, 10000);
    REQUIRE(z(0, 0) == 0.0);
    REQUIRE(std::isnan(z(1, 1)));

    est(0, 0) = 1.1;
    const Mat z2 = studentize(est, truth, av, 10000);
    REQUIRE(z2(0, 0) == Catch::Approx(10.0 * 0.1).epsilon(1e-12));
}

TEST_CASE("threshold split: no jumps and additivity") {
    Rng rng(12);
    const auto de = make_double_exponential(1.0);
    const auto v = random_walk(4000, rng, 0.0001);
    const auto sched = with_values(v);
    // huge threshold: everything is diffusion
    const auto jd = threshold_estimators(sched, de, de, 100.0, 0.1875, 0.3, 1.0);
    REQUIRE(jd.jv == 0.0);
    REQUIRE(jd.blocks_over == 0);
    const auto r = mrc({sched}, de, 0.3, 1.0);
    REQUIRE(jd.iv == Catch::Approx(r.estimate(0, 0)).epsilon(1e-12));

    // same weight for both parts: IV + JV is the un-thresholded estimate
    const auto jd2 = threshold_estimators(sched, de, de, 0.05, 0.1875, 0.3, 1.0);
    REQUIRE(jd2.qv == Catch::Approx(jd2.iv + jd2.jv));
    REQUIRE(jd2.iv + jd2.jv == Catch::Approx(r.estimate(0, 0)).epsilon(1e-12));
    REQUIRE(jd2.jv >= 0.0);
    REQUIRE(jd2.blocks_over <= jd2.blocks_total);

    REQUIRE_THROWS_AS(threshold_estimators(sched, de, de, 1.0, 0.3, 0.3, 1.0),
                      std::invalid_argument);
}

TEST_CASE("threshold split separates a single jump") {
    Rng rng(13);
    const auto g1 = make_double_exponential(1.0);
    const auto g2 = make_double_exponential(std::sqrt(5.0));
    const long n = 10000;
    const double sigma = 1.0, ups = 0.01, theta = 0.1;
    double acc_jv = 0.0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        auto v = random_walk(n, rng, ups);
        for (long p = n / 2; p <= n; ++p) v[p] += 1.0;  // jump of size 1 at t=0.5
        const double c = std::max(default_threshold_c(g1, theta, sigma, ups, n, 0.1875),
                                  default_threshold_c(g2, theta, sigma, ups, n, 0.1875));
        const auto jd = threshold_estimators(with_values(v), g1, g2, c, 0.1875, theta, 1.0);
        acc_jv += jd.jv;
        REQUIRE(jd.blocks_over > 0);
    }
    const auto [vc, vj] = v_C_v_J(g2, theta, sigma, ups, 1.0);
    (void)vc;
    const double se = std::sqrt(vj) / std::pow(static_cast<double>(n), 0.25);
    REQUIRE(std::abs(acc_jv / reps - 1.0) <= 4.0 * se);
}

TEST_CASE("closed-form variances and the efficiency ordering") {
    const auto de = make_double_exponential(1.0);
    const double sigma = 1.2, ups = 0.03;
    const auto [vc, vj0] = v_C_v_J(de, std::sqrt(ups) / sigma, sigma, ups, 0.0);
    REQUIRE(vc == Catch::Approx(8.0 * sigma * sigma * sigma * std::sqrt(ups)).epsilon(1e-12));
    REQUIRE(vj0 == 0.0);

    // optimal theta for the jump part and the 4 sqrt(5) minimum
    const double th = optimal_theta_vj(de, sigma, ups);
    const auto [vc2, vj] = v_C_v_J(de, th, sigma, ups, 1.0);
    (void)vc2;
    REQUIRE(vj == Catch::Approx(4.0 * std::sqrt(5.0) * sigma * std::sqrt(ups)).epsilon(1e-12));
    // scan: no theta beats the closed-form optimum
    for (double t = 0.1 * th; t < 10.0 * th; t *= 1.07) {
        const auto [a, b] = v_C_v_J(de, t, sigma, ups, 1.0);
        (void)a;
        REQUIRE(b >= vj * (1.0 - 1e-12));
    }

    // MLE bound < optimal v_J constant < spectral constant
    REQUIRE(8.0 < 4.0 * std::sqrt(5.0));
    REQUIRE(4.0 * std::sqrt(5.0) < 9.0);

    // g2 = e^{-sqrt(5)|x|} attains its jump optimum at the IV-oracle theta
    const auto g2 = make_double_exponential(std::sqrt(5.0));
    REQUIRE(optimal_theta_vj(g2, sigma, ups) == Catch::Approx(std::sqrt(ups) / sigma).epsilon(1e-12));
}

TEST_CASE("tricity: symmetry and degenerate cases") {
    Rng rng(14);
    const auto de = make_double_exponential(1.0);
    auto v = random_walk(500, rng);
    const double t1 = tricity(v, de, 0.5);
    for (auto& x : v) x = -x;
    const double t2 = tricity(v, de, 0.5);
    REQUIRE(t2 == Catch::Approx(-t1).epsilon(1e-12));
    REQUIRE(tricity(std::vector<double>(101, 0.0), de, 0.5) == 0.0);
}

TEST_CASE("jittered and plain mrc converge to each other") {
    // |MRC - jittered MRC| * n^{1/4} shrinks with n for a bounded weight
    Rng rng(15);
    const auto tent = make_tent();
    double gap_small = 0.0, gap_big = 0.0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
        for (long n : {1000L, 10000L}) {
            const auto v = random_walk(n, rng, 0.01);
            const auto sched = with_values(v);
            MrcOptions plain;
            plain.jittered = false;
            const auto a = mrc({sched}, tent, 1.0, 1.0, plain);
            const auto b = mrc({sched}, tent, 1.0, 1.0);
            const double gap =
                std::abs(a.estimate(0, 0) - b.estimate(0, 0)) * std::pow(static_cast<double>(n), 0.25);
            (n == 1000 ? gap_small : gap_big) += gap;
        }
    }
    REQUIRE(gap_big / reps < gap_small / reps);
}
