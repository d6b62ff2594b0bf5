#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace preavg {

// splitmix64, used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for stream `id` derived from `master`. Two rounds of splitmix64 keep
// nearby ids statistically unrelated.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t id) {
    std::uint64_t s = master ^ (0xD1B54A32D192ED03ULL * (id + 1));
    splitmix64(s);
    return splitmix64(s);
}

// Deterministic RNG wrapper. Gaussian draws use the polar method rather than
// std::normal_distribution so results do not depend on the standard library
// implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {
        // in (0,1)
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace preavg
