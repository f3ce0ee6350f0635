#pragma once

#include <cstdint>
#include <span>

namespace powsim {

/**
 * Seeded PRNG for deterministic simulation (xoshiro256++ core, splitmix64 seeding).
 *
 * The standard <random> distributions are implementation-defined, so every
 * sampler the simulator relies on is implemented here explicitly. Given the
 * same seed the sequence is identical across platforms, which is what makes
 * (config, seed) -> bit-identical run records possible.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0,1), 53-bit resolution.
    double next_double();

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    bool bernoulli(double p);

    /**
     * Binomial(n, p) by inverse-transform walk along the pmf. Cost is
     * O(mean + sqrt(mean)) which is fine for the small per-round means the
     * mining lottery produces; exact at the p = 0 and p = 1 edges.
     */
    long binomial(long n, double p);

    void fill_bytes(std::span<std::uint8_t> out);

private:
    std::uint64_t s_[4];
};

} // namespace powsim
