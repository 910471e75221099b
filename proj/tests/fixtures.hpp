#pragma once

#include <random>

#include "rbsteer/model.hpp"

namespace rbsteer::testing {

inline ArmModel four_state_model() {
    RawModel raw;
    raw.num_states = 4;
    raw.P0 = {{1.0, 0.0, 0.0, 0.0}, {0.9, 0.0, 0.1, 0.0}, {0.0, 0.0, 0.9, 0.1}, {0.0, 0.0, 0.1, 0.9}};
    raw.P1 = {{0.9, 0.1, 0.0, 0.0}, {0.1, 0.9, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}, {0.1, 0.0, 0.9, 0.0}};
    raw.r0 = {0.0, 0.0, 1.0, 1.0};
    raw.r1 = {1.0, 1.0, 0.0, 0.0};
    raw.alpha = 0.5;
    return validate_model(raw);
}

inline const Vec kFourStateInit{0.4, 0.0, 0.6, 0.0};
inline const Vec kFourStateXStar{0.25, 0.25, 0.25, 0.25};
inline const Vec kFourStateUStar{0.25, 0.25, 0.0, 0.0};

inline ArmModel identity_model() {
    RawModel raw;
    raw.num_states = 2;
    raw.P0 = {{1.0, 0.0}, {0.0, 1.0}};
    raw.P1 = raw.P0;
    raw.r0 = {1.0, 0.0};
    raw.r1 = {0.0, 1.0};
    raw.alpha = 0.5;
    return validate_model(raw);
}

inline ArmModel two_cycle_model() {
    RawModel raw;
    raw.num_states = 2;
    raw.P0 = {{0.0, 1.0}, {1.0, 0.0}};
    raw.P1 = raw.P0;
    raw.r0 = {0.0, 1.0};
    raw.r1 = {1.0, 0.0};
    raw.alpha = 0.5;
    return validate_model(raw);
}

/// Random stochastic row; a fraction of entries is zeroed when `sparse`.
inline Vec random_row(std::mt19937_64& gen, std::size_t S, bool sparse = false) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vec row(S);
    double total = 0.0;
    for (auto& v : row) {
        v = (sparse && unif(gen) < 0.4) ? 0.0 : unif(gen) + 1e-3;
        total += v;
    }
    if (total == 0.0) {
        row[gen() % S] = 1.0;
        return row;
    }
    for (auto& v : row) v /= total;
    // Put the rounding remainder on the largest entry so the row sums to 1.
    std::size_t big = 0;
    double sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        sum += row[s];
        if (row[s] > row[big]) big = s;
    }
    row[big] += 1.0 - sum;
    return row;
}

inline ArmModel random_model(std::mt19937_64& gen, std::size_t S, double alpha, bool sparse = false) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    RawModel raw;
    raw.num_states = S;
    raw.alpha = alpha;
    for (std::size_t s = 0; s < S; ++s) {
        raw.P0.push_back(random_row(gen, S, sparse));
        raw.P1.push_back(random_row(gen, S, sparse));
        raw.r0.push_back(unif(gen));
        raw.r1.push_back(unif(gen));
    }
    return validate_model(raw);
}

inline Vec random_simplex_point(std::mt19937_64& gen, std::size_t S) {
    std::exponential_distribution<double> expo(1.0);
    Vec x(S);
    double total = 0.0;
    for (auto& v : x) {
        v = expo(gen);
        total += v;
    }
    for (auto& v : x) v /= total;
    return make_population(x);
}

/// alpha * x computed locally.
inline Vec linear_like(const Vec& x, double alpha) {
    Vec u(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) u[s] = alpha * x[s];
    return u;
}

/// Naive (x - u) P0 + u P1 with explicit loops.
inline Vec naive_phi(const ArmModel& m, const Vec& x, const Vec& u) {
    Vec out(m.num_states, 0.0);
    for (std::size_t j = 0; j < m.num_states; ++j)
        for (std::size_t i = 0; i < m.num_states; ++i)
            out[j] += (x[i] - u[i]) * m.P0(i, j) + u[i] * m.P1(i, j);
    return out;
}

}  // namespace rbsteer::testing
