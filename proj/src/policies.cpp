#include "rbsteer/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rbsteer {

Vec to_fractions(const Counts& counts, std::int64_t N) {
    Vec x(counts.size());
    for (std::size_t s = 0; s < counts.size(); ++s) x[s] = static_cast<double>(counts[s]) / static_cast<double>(N);
    return x;
}

Vec GridPopulation::fractions() const { return to_fractions(counts, N); }

GridPopulation to_grid(std::span<const double> x, std::int64_t N) {
    if (N <= 0) throw InputError("arm count N must be positive");
    GridPopulation g{N, Counts(x.size())};
    std::int64_t total = 0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        const double v = x[s] * static_cast<double>(N);
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-6 || r < 0) {
            std::ostringstream os;
            os << "state " << s << " is not on the 1/" << N << " grid (N x = " << v << ")";
            throw InputError(os.str());
        }
        g.counts[s] = static_cast<std::int64_t>(r);
        total += g.counts[s];
    }
    if (total != N) throw InputError("grid counts do not sum to N");
    return g;
}

std::int64_t budget_units(double alpha, std::int64_t N) {
    const double v = alpha * static_cast<double>(N);
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9) {
        std::ostringstream os;
        os << "alpha*N not integer (alpha=" << alpha << ", N=" << N << ")";
        throw InputError(os.str());
    }
    return static_cast<std::int64_t>(r);
}

namespace {

struct Floors {
    Counts units;
    Vec frac;
    std::int64_t deficit = 0;
};

Floors floor_units(const GridPopulation& x, std::span<const double> u_bar, double alpha) {
    const std::size_t S = x.counts.size();
    if (u_bar.size() != S) throw InputError("rounding: dimension mismatch");
    const std::int64_t budget = budget_units(alpha, x.N);
    if (!check_feasible(x.fractions(), u_bar, alpha)) throw InputError("rounding: u_bar is not feasible for x");
    Floors f{Counts(S, 0), Vec(S, 0.0), 0};
    std::int64_t used = 0;
    for (std::size_t s = 0; s < S; ++s) {
        double v = u_bar[s] * static_cast<double>(x.N);
        if (std::abs(v - std::round(v)) <= 1e-9) v = std::round(v);
        v = std::max(v, 0.0);
        const auto fl = std::min(static_cast<std::int64_t>(std::floor(v)), x.counts[s]);
        f.units[s] = fl;
        f.frac[s] = fl < x.counts[s] ? v - static_cast<double>(fl) : 0.0;
        used += fl;
    }
    f.deficit = budget - used;
    if (f.deficit < 0) throw NumericalError("rounding: floors exceed the budget");
    return f;
}

// States with headroom ordered by decreasing fractional part, lowest index first on ties.
std::vector<std::size_t> top_up_order(const GridPopulation& x, const Floors& f) {
    std::vector<std::size_t> order;
    for (std::size_t s = 0; s < f.units.size(); ++s)
        if (f.units[s] < x.counts[s]) order.push_back(s);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return f.frac[a] > f.frac[b]; });
    return order;
}

}  // namespace

Counts round_control(const GridPopulation& x, std::span<const double> u_bar, double alpha) {
    Floors f = floor_units(x, u_bar, alpha);
    const auto order = top_up_order(x, f);
    if (static_cast<std::int64_t>(order.size()) < f.deficit)
        throw InputError("rounding: not enough headroom to meet the budget");
    for (std::int64_t k = 0; k < f.deficit; ++k) ++f.units[order[static_cast<std::size_t>(k)]];
    return f.units;
}

Counts randomized_round(const GridPopulation& x, std::span<const double> u_bar, double alpha, Rng& rng) {
    Floors f = floor_units(x, u_bar, alpha);
    if (f.deficit == 0) return f.units;
    const std::size_t S = f.units.size();
    // Systematic sampling: state s receives an extra unit iff a point of
    // V + Z falls in its slice of the cumulative fractional parts.
    const double V = rng.uniform();
    double cum = 0.0;
    std::int64_t added = 0;
    std::vector<bool> chosen(S, false);
    for (std::size_t s = 0; s < S; ++s) {
        if (f.frac[s] <= 0.0) continue;
        const double prev = cum;
        cum += f.frac[s];
        if (std::floor(cum - V) > std::floor(prev - V)) {
            chosen[s] = true;
            ++f.units[s];
            ++added;
        }
    }
    // Round-off can leave the fractional parts summing just off an integer.
    if (added != f.deficit) {
        const auto order = top_up_order(x, f);
        if (added < f.deficit) {
            for (std::size_t s : order) {
                if (added == f.deficit) break;
                if (!chosen[s] && f.units[s] < x.counts[s]) {
                    ++f.units[s];
                    ++added;
                }
            }
        } else {
            for (auto it = order.rbegin(); it != order.rend() && added > f.deficit; ++it) {
                if (chosen[*it]) {
                    --f.units[*it];
                    --added;
                }
            }
        }
        if (added != f.deficit) throw NumericalError("randomized rounding could not meet the budget");
    }
    return f.units;
}

InducedPolicy::InducedPolicy(ControlRule rule_, std::int64_t N_, double alpha_, Rounding rounding_)
    : rule(std::move(rule_)), N(N_), alpha(alpha_), rounding(rounding_) {
    if (N <= 0) throw InputError("arm count N must be positive");
    budget_units(alpha, N);
}

Counts policy_step(const InducedPolicy& policy, const GridPopulation& X, Rng& rng) {
    if (X.N != policy.N) throw InputError("population grid does not match the policy's N");
    const Vec x = X.fractions();
    const Vec u_bar = policy.rule(x);
    return policy.rounding == Rounding::deterministic ? round_control(X, u_bar, policy.alpha)
                                                      : randomized_round(X, u_bar, policy.alpha, rng);
}

}  // namespace rbsteer
