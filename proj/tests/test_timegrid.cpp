#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "preavg/market_sim.hpp"
#include "preavg/timegrid.hpp"

using namespace preavg;

namespace {

TickSchedule sched(int id, std::vector<double> times) {
    TickSchedule s;
    s.asset_id = id;
    s.times = std::move(times);
    return s;
}

// Brute-force refresh times straight from the definition, for cross-checking.
std::vector<double> refresh_brute(const std::vector<TickSchedule>& schedules) {
    std::vector<double> grid;
    double t0 = 0.0;
    for (const auto& s : schedules) t0 = std::max(t0, s.times.front());
    grid.push_back(t0);
    for (;;) {
        double next = -1.0;
        for (const auto& s : schedules) {
            double mn = -1.0;
            for (double t : s.times)
                if (t > grid.back() && (mn < 0.0 || t < mn)) mn = t;
            if (mn < 0.0) return grid;
            next = std::max(next, mn);
        }
        grid.push_back(next);
    }
}

}  // namespace

TEST_CASE("refresh times: two interleaved assets") {
    const auto grid = refresh_times({sched(1, {1, 3, 5}), sched(2, {2, 4, 6})}, 10.0);
    REQUIRE(grid == std::vector<double>{2, 4, 6});
}

TEST_CASE("refresh times: single asset is the identity") {
    const auto grid = refresh_times({sched(1, {0.1, 0.2, 0.3})}, 1.0);
    REQUIRE(grid == std::vector<double>{0.1, 0.2, 0.3});
}

TEST_CASE("refresh times: synchronous assets") {
    const auto grid = refresh_times({sched(1, {1, 2, 3}), sched(2, {1, 2, 3})}, 5.0);
    REQUIRE(grid == std::vector<double>{1, 2, 3});
}

TEST_CASE("refresh times: errors") {
    REQUIRE_THROWS_AS(refresh_times({}, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(refresh_times({sched(1, {})}, 1.0), std::invalid_argument);
}

TEST_CASE("refresh times match the brute-force definition on random schedules") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<TickSchedule> ss;
        const int d = 1 + static_cast<int>(rng.raw() % 3);
        for (int k = 0; k < d; ++k) {
            TickSchedule s;
            s.asset_id = k + 1;
            double t = 0.0;
            const int m = 5 + static_cast<int>(rng.raw() % 40);
            for (int i = 0; i < m; ++i) {
                t += rng.exponential(20.0);
                if (t > 1.0) break;
                s.times.push_back(t);
            }
            if (s.times.empty()) s.times.push_back(0.5);
            ss.push_back(std::move(s));
        }
        const auto grid = refresh_times(ss, 1.0);
        REQUIRE(grid == refresh_brute(ss));
        for (std::size_t p = 1; p < grid.size(); ++p) REQUIRE(grid[p] > grid[p - 1]);

        // condition [H](ii) on the interpolated grid
        const SyncGrid sg = next_tick_interpolate(ss, grid, 1.0);
        REQUIRE(sg.satisfies_H());
    }
}

TEST_CASE("next-tick interpolation: interleaved example") {
    const std::vector<TickSchedule> ss{sched(1, {1, 3, 5}), sched(2, {2, 4, 6})};
    const SyncGrid sg = next_tick_interpolate(ss, {2, 4, 6}, 10.0);
    REQUIRE(sg.per_asset[0] == std::vector<double>{1, 3, 5});
    REQUIRE(sg.per_asset[1] == std::vector<double>{2, 4, 6});
    REQUIRE_FALSE(sg.truncated);
    REQUIRE(sg.satisfies_H());
}

TEST_CASE("next-tick interpolation: synchronous and univariate identities") {
    const auto ss = std::vector<TickSchedule>{sched(1, {1, 2, 3}), sched(2, {1, 2, 3})};
    const SyncGrid sg = next_tick_interpolate(ss, {1, 2, 3}, 5.0);
    REQUIRE(sg.per_asset[0] == std::vector<double>{1, 2, 3});
    REQUIRE(sg.per_asset[1] == std::vector<double>{1, 2, 3});

    const SyncGrid sg1 = next_tick_interpolate({sched(1, {1, 2, 3})}, {1, 2, 3}, 5.0);
    REQUIRE(sg1.per_asset[0] == sg1.grid);
}

TEST_CASE("next-tick interpolation truncates when ticks run out") {
    // asset 2 has no tick after 4, so the grid point at 6 is not coverable
    const std::vector<TickSchedule> ss{sched(1, {1, 3, 5, 7}), sched(2, {2, 4})};
    const SyncGrid sg = next_tick_interpolate(ss, {2, 4, 6}, 10.0);
    REQUIRE(sg.truncated);
    REQUIRE(sg.grid.size() == 2);
}

TEST_CASE("equidistant sampling") {
    REQUIRE(sample_equidistant(4, 1.0).times == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    REQUIRE(sample_equidistant(1, 1.0).times == std::vector<double>{0, 1});
    REQUIRE(sample_equidistant(2, 2.0).times == std::vector<double>{0, 1, 2});
    REQUIRE_THROWS_AS(sample_equidistant(0, 1.0), std::invalid_argument);
}

TEST_CASE("poisson sampling: gap law and determinism") {
    Rng rng(11);
    // empirical mean gap for rate n*p = 2000 over ~1e5 gaps
    double sum = 0.0;
    long count = 0;
    for (int rep = 0; rep < 60; ++rep) {
        const auto ss = sample_poisson({2.0}, 1000, 1.0, rng);
        const auto& t = ss[0].times;
        for (std::size_t i = 1; i < t.size(); ++i) {
            sum += t[i] - t[i - 1];
            ++count;
        }
    }
    REQUIRE(count > 80000);
    const double mean = sum / count;
    const double se = (1.0 / 2000.0) / std::sqrt(static_cast<double>(count));
    REQUIRE(std::abs(mean - 1.0 / 2000.0) < 3.0 * se);

    Rng a(42), b(42);
    const auto s1 = sample_poisson({1.0}, 500, 1.0, a);
    const auto s2 = sample_poisson({1.0}, 500, 1.0, b);
    REQUIRE(s1[0].times == s2[0].times);
}

TEST_CASE("poisson sampling: assets are independent") {
    Rng rng(13);
    const auto ss = sample_poisson({1.0, 1.0}, 20000, 1.0, rng);
    // counts in 100 disjoint bins; empirical correlation should be near 0
    const int bins = 100;
    std::vector<double> c1(bins, 0.0), c2(bins, 0.0);
    for (double t : ss[0].times) ++c1[std::min(bins - 1, static_cast<int>(t * bins))];
    for (double t : ss[1].times) ++c2[std::min(bins - 1, static_cast<int>(t * bins))];
    double m1 = 0, m2 = 0;
    for (int i = 0; i < bins; ++i) m1 += c1[i], m2 += c2[i];
    m1 /= bins;
    m2 /= bins;
    double num = 0, v1 = 0, v2 = 0;
    for (int i = 0; i < bins; ++i) {
        num += (c1[i] - m1) * (c2[i] - m2);
        v1 += (c1[i] - m1) * (c1[i] - m1);
        v2 += (c2[i] - m2) * (c2[i] - m2);
    }
    REQUIRE(std::abs(num / std::sqrt(v1 * v2)) < 0.3);
}

TEST_CASE("poisson G limit") {
    REQUIRE(poisson_G_limit({2.0}) == Catch::Approx(0.5).epsilon(1e-14));
    REQUIRE(poisson_G_limit({3.0, 3.0}) == Catch::Approx(1.5 / 3.0).epsilon(1e-14));
    REQUIRE(poisson_G_limit({1.0, 2.0}) ==
            Catch::Approx(1.0 + 0.5 - 1.0 / 3.0).epsilon(1e-14));
    REQUIRE_THROWS_AS(poisson_G_limit({}), std::invalid_argument);
}

TEST_CASE("hitting-barrier sampling: hit probabilities and mean duration") {
    Rng rng(17);
    const long n = 10000;
    auto pm = PathModel::constant_vol(Mat::identity(1));
    const auto path = simulate_path(pm, 100 * n, 1.0, rng);
    const auto hit = sample_hitting_barriers(1.0, 1.0, n, path.times, path.martingale);
    REQUIRE_FALSE(hit.too_coarse);
    const long hits = static_cast<long>(hit.signs.size());
    REQUIRE(hits > 5000);

    long down = 0;
    for (int s : hit.signs) down += s < 0 ? 1 : 0;
    const double p = static_cast<double>(down) / hits;
    const double se = 0.5 / std::sqrt(static_cast<double>(hits));
    REQUIRE(std::abs(p - 0.5) < 3.0 * se);  // P(down) = beta/(alpha+beta) = 1/2

    // mean of n * duration -> G = alpha beta / sigma^2 = 1; average several paths
    double dsum = 0.0;
    long dcount = 0;
    for (int rep = 0; rep < 10; ++rep) {
        const auto pth = simulate_path(pm, 100 * n, 1.0, rng);
        const auto h = sample_hitting_barriers(1.0, 1.0, n, pth.times, pth.martingale);
        const auto& t = h.schedule.times;
        for (std::size_t i = 1; i < t.size(); ++i) dsum += t[i] - t[i - 1];
        dcount += static_cast<long>(t.size()) - 1;
    }
    REQUIRE(std::abs(n * dsum / dcount - 1.0) < 0.02);
}

TEST_CASE("hitting-barrier sampling: one-sided limit") {
    Rng rng(19);
    auto pm = PathModel::constant_vol(Mat::identity(1));
    const auto path = simulate_path(pm, 200000, 1.0, rng);
    const auto hit = sample_hitting_barriers(1.0, 1000.0, 2000, path.times, path.martingale);
    for (int s : hit.signs) REQUIRE(s == -1);
}

TEST_CASE("duration stats") {
    const auto st = duration_stats({0, 0.25, 0.5, 0.75, 1.0}, 4, 1.0);
    REQUIRE(st.count == 4);
    REQUIRE(st.r_n == Catch::Approx(0.25));
    REQUIRE(st.mean_scaled_duration == Catch::Approx(1.0));

    const auto st2 = duration_stats({2, 4, 6}, 1, 5.0);
    REQUIRE(st2.count == 2);
    REQUIRE(st2.r_n == Catch::Approx(2.0));

    const auto st3 = duration_stats({2, 4, 6}, 1, 1.0);  // t before T_0
    REQUIRE(st3.count == 0);
}

TEST_CASE("duration stats: N_t nondecreasing in t") {
    const std::vector<double> grid{0.1, 0.4, 0.5, 0.9};
    int prev = 0;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        const int c = duration_stats(grid, 1, t).count;
        REQUIRE(c >= prev);
        prev = c;
    }
}

TEST_CASE("max duration stays small for dense poisson schedules") {
    // With intensity p the expected max gap is ~ln(np)/(np); at n=1e4, p=10
    // this is safely below n^{-0.8}. (At p=1 it is not: ln(n)/n ~ 9e-4 exceeds
    // n^{-0.8} ~ 6.3e-4 until n is much larger.)
    Rng rng(23);
    const long n = 10000;
    int ok = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
        const auto ss = sample_poisson({10.0}, n, 1.0, rng);
        const auto st = duration_stats(ss[0].times, static_cast<double>(n), 1.0);
        if (st.r_n < std::pow(static_cast<double>(n), -0.8)) ++ok;
    }
    REQUIRE(ok >= 99);
}

TEST_CASE("long-run variation: equidistant closed form") {
    // all durations 1/n: S = 1 - (m-1)/(2n) exactly
    const long n = 100;
    const int m = 10;
    const auto s = sample_equidistant(n, 1.0);
    const double v = long_run_variation(s.times, static_cast<double>(n), m, 1.0);
    REQUIRE(v == Catch::Approx(1.0 - (m - 1) / (2.0 * n)).epsilon(1e-12));
    REQUIRE(std::abs(v - 1.0) <= static_cast<double>(m) / n);
}

TEST_CASE("long-run variation converges to the integrated G") {
    Rng rng(29);
    const long n = 10000;
    const int m = 100;

    // Poisson d=1, p=1: integral of G = 1
    double acc = 0.0;
    const int reps = 5;
    for (int rep = 0; rep < reps; ++rep) {
        const auto ss = sample_poisson({1.0}, n, 1.0, rng);
        const auto grid = refresh_times(ss, 1.0);
        acc += long_run_variation(grid, static_cast<double>(n), m, 1.0);
    }
    REQUIRE(std::abs(acc / reps - 1.0) < 0.05);

    // hitting barriers alpha=beta=sigma=1: integral of G = alpha*beta = 1
    auto pm = PathModel::constant_vol(Mat::identity(1));
    acc = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        const auto path = simulate_path(pm, 100 * n, 1.0, rng);
        const auto hit = sample_hitting_barriers(1.0, 1.0, n, path.times, path.martingale);
        acc += long_run_variation(hit.schedule.times, static_cast<double>(n), m, 1.0);
    }
    REQUIRE(std::abs(acc / reps - 1.0) < 0.05);
}

TEST_CASE("mean scaled refresh duration matches the poisson limit") {
    Rng rng(31);
    const long n = 10000;
    const std::vector<std::vector<double>> cases{{1.0}, {1.0, 1.0}, {1.0, 1.5, 0.7}};
    for (const auto& ps : cases) {
        const double g_limit = poisson_G_limit(ps);
        double acc = 0.0;
        const int reps = 20;
        for (int rep = 0; rep < reps; ++rep) {
            const auto ss = sample_poisson(ps, n, 1.0, rng);
            const auto grid = refresh_times(ss, 1.0);
            acc += duration_stats(grid, static_cast<double>(n), 1.0).mean_scaled_duration;
        }
        REQUIRE(std::abs(acc / reps - g_limit) / g_limit < 0.02);
    }
}
