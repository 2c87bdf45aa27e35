#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace privsnn {

/**
 * Deterministic random generator: xoshiro256** with the 256-bit state
 * expanded from a 64-bit seed via splitmix64. Identical seeds produce
 * bit-identical streams on every platform.
 *
 * Gaussian draws use Box-Muller; both values of each pair are consumed
 * (the second is cached), so the uniform stream position depends only on
 * the number of gaussian() calls, never on the arguments.
 *
 * Single-owner: never share one instance between concurrent tasks.
 * Parallel work derives an independent child per task via derive(task_id).
 */
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_double();

    // Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    // Draw from Normal(mean, stddev^2). stddev == 0 returns exactly mean.
    // Throws ArgumentError for stddev < 0.
    double gaussian(double mean, double stddev);

    // Independent child stream, seed = hash(parent seed, stream id).
    // Pure: does not advance this generator.
    SeededRng derive(std::uint64_t stream) const;

private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
    double cached_gauss_ = 0.0;
    bool has_cached_gauss_ = false;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffle_indices(SeededRng& rng, std::size_t n);

// splitmix64 mixing step, also used for seed derivation and config fingerprints.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace privsnn
