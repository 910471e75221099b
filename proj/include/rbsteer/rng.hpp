#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rbsteer {

/// xoshiro256** seeded through SplitMix64.
///
/// Independent streams are derived from (seed, path...) by hashing, so the
/// numbers a replication or time step sees depend only on its own indices.
class Rng {
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    /// Stream for a path of indices below a root seed, e.g. stream(seed, {rep, t}).
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    std::int64_t binomial(std::int64_t n, double p);

  private:
    std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace rbsteer
