#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace superdiff {

// ============================================================
// Counter-seeded RNG streams.
//
// Every Monte Carlo replica owns an independent generator derived
// from (base_seed, replica_index), so results do not depend on how
// replicas are scheduled across threads. The generator itself is
// xoshiro256++ with splitmix64 seeding; distributions are hand-rolled
// so output is identical across standard-library implementations.
// ============================================================

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}  // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = detail::splitmix64(sm);
        has_spare_ = false;
        spare_ = 0.0;
    }

    /// Generator for replica `index` of a run with the given base seed.
    static Rng stream(std::uint64_t base_seed, std::uint64_t index) {
        std::uint64_t sm = base_seed;
        std::uint64_t mixed = detail::splitmix64(sm);
        sm = mixed ^ (0xD1B54A32D192ED03ULL * (index + 1));
        return Rng(detail::splitmix64(sm));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal (Box-Muller, cached pair).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double a = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log1p(-uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Poisson by exponential arrival counting; exact for any mean.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        std::uint64_t count = 0;
        double acc = exponential();
        while (acc < mean) {
            ++count;
            acc += exponential();
        }
        return count;
    }

    /// Gamma(shape, scale) with shape >= 1 (Marsaglia-Tsang).
    double gamma(double shape, double scale) {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

  private:
    std::uint64_t state_[4];
    double spare_;
    bool has_spare_;
};

}  // namespace superdiff
