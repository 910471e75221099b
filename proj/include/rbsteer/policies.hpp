#pragma once

#include <cstdint>
#include <vector>

#include "rbsteer/control.hpp"
#include "rbsteer/model.hpp"
#include "rbsteer/rng.hpp"

namespace rbsteer {

using Counts = std::vector<std::int64_t>;

/// A point of the 1/N grid, stored as arm counts per state.
struct GridPopulation {
    std::int64_t N = 0;
    Counts counts;

    Vec fractions() const;
};

/// Snaps x onto the 1/N grid. Accepts |N x_s - round(N x_s)| <= 1e-6 only.
GridPopulation to_grid(std::span<const double> x, std::int64_t N);

/// alpha * N as an integer; throws InputError when it is not one.
std::int64_t budget_units(double alpha, std::int64_t N);

Vec to_fractions(const Counts& counts, std::int64_t N);

/// Floor-and-top-up rounding of u_bar onto the grid of x: floor(N u_bar_s)
/// plus one extra unit for the largest fractional parts (lowest index on ties)
/// until the budget alpha N is met. Returns counts per state.
Counts round_control(const GridPopulation& x, std::span<const double> u_bar, double alpha);

/// Unbiased variant: the extra units go to states with probability equal to
/// their fractional part (systematic sampling), so E[U] = u_bar.
Counts randomized_round(const GridPopulation& x, std::span<const double> u_bar, double alpha, Rng& rng);

enum class Rounding { deterministic, randomized };

/// N-armed policy induced by a deterministic control rule.
struct InducedPolicy {
    InducedPolicy(ControlRule rule, std::int64_t N, double alpha, Rounding rounding = Rounding::deterministic);

    ControlRule rule;
    std::int64_t N;
    double alpha;
    Rounding rounding;
};

/// Evaluates the rule at X and rounds the result onto U^N(X). `rng` is only
/// consulted for randomized rounding.
Counts policy_step(const InducedPolicy& policy, const GridPopulation& X, Rng& rng);

}  // namespace rbsteer
