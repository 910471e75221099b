#pragma once

#include <optional>
#include <vector>

#include "rbsteer/model.hpp"
#include "rbsteer/static_solver.hpp"

namespace rbsteer {

/// Communication structure of the single-armed MDP.
///
/// Classes are the strongly connected components of the union graph
/// (s -> s' iff P0 or P1 has a positive (s, s') entry). Since 0 < alpha < 1
/// this graph is also the positive-entry graph of P^alpha.
struct ChainStructure {
    std::vector<std::vector<std::size_t>> classes;
    std::vector<std::size_t> closed_classes;    ///< indices into classes
    std::vector<std::size_t> transient_states;  ///< states outside every closed class
    bool weakly_communicating = false;
    /// Period of each state under P^alpha. States with no return path are
    /// reported with period 1.
    std::vector<int> periods_under_Palpha;
};

ChainStructure analyze_chain(const ArmModel& model);

/// Witness that every state reaches the support of x* under linear steering:
/// min_{s, s' in support} (P^alpha)^T0_{s s'} = p0 > 0 and theta = p0 / max_s x*_s.
struct ReachabilityCertificate {
    int T0 = 0;
    double p0 = 0.0;
    double theta = 0.0;
};

/// Positivity threshold for matrix-power entries.
inline constexpr double kPositiveEntry = 1e-12;

inline int default_certificate_cap(std::size_t num_states) {
    return static_cast<int>(4 * num_states * num_states);
}

/// Smallest T0 <= cap whose power of P^alpha has all (S x support) entries above
/// 1e-12. nullopt means "no certificate within cap", which is inconclusive.
std::optional<ReachabilityCertificate> find_certificate(const ArmModel& model, const StationaryPoint& sp,
                                                        int cap);

}  // namespace rbsteer
