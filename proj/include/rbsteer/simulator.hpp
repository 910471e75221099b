#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rbsteer/model.hpp"
#include "rbsteer/policies.hpp"
#include "rbsteer/rng.hpp"
#include "rbsteer/static_solver.hpp"

namespace rbsteer {

struct SimConfig {
    std::int64_t N = 100;
    int T = 10000;
    int burn_in = 2500;
    std::uint64_t seed = 0;
    int replications = 5;
    /// Stride for recording (t, delta(X(t)), reward) on replication 0; 0 = off.
    int record_delta_every = 0;

    /// burn_in = T / 4.
    static SimConfig with_default_burn_in(std::int64_t N, int T, std::uint64_t seed, int replications);
};

/// Throws InputError unless burn_in < T, replications >= 1 and alpha N is an integer.
void validate_config(const SimConfig& cfg, double alpha);

struct TracePoint {
    int t = 0;
    std::optional<double> delta;
    double reward = 0.0;
};

struct SimResult {
    double mean_reward = 0.0;
    double std_error = 0.0;
    std::vector<TracePoint> delta_trace;
    std::vector<double> per_replication_means;
};

/// One step of the N-armed system: each state's passive and active arms move
/// by independent multinomial draws from the corresponding rows.
Counts sample_transition(const ArmModel& model, const GridPopulation& X, const Counts& U, Rng& rng);

/// One replication: T steps from X0 with the stream (seed, rep, t) at step t.
/// Returns the time-average of R over [burn_in, T). Records a trace at the
/// given stride when `trace` is non-null (delta only when `sp` is given).
double simulate_replication(const ArmModel& model, const InducedPolicy& policy, const GridPopulation& X0,
                            const SimConfig& cfg, int replication, const StationaryPoint* sp,
                            int trace_stride, std::vector<TracePoint>* trace);

/// Runs all replications (concurrently) and merges them by replication index.
SimResult run_policy(const ArmModel& model, const InducedPolicy& policy, const GridPopulation& X0,
                     const SimConfig& cfg, const StationaryPoint* sp = nullptr);

/// Summary of the noise E = X' - phi(X, U) over i.i.d. transitions.
struct NoiseStats {
    int reps = 0;
    double mean_l1_of_mean = 0.0;  ///< |mean of E|_1
    double mean_l1 = 0.0;          ///< mean of |E|_1
    double mean_l1_stderr = 0.0;   ///< standard error of mean_l1
    double xi = 0.0;
    double tail_freq = 0.0;        ///< fraction of draws with |E|_1 >= xi
    double tail_freq_stderr = 0.0;
};

NoiseStats noise_stats(const ArmModel& model, const GridPopulation& X, const Counts& U, Rng& rng, int reps,
                       double xi);

/// Exact optimal T-step total reward of the N-armed problem by backward
/// induction over the grid with exact multinomial transition laws.
/// Limited to S <= 3, N <= 6, T <= 5.
double brute_force_dp(const ArmModel& model, std::int64_t N, const GridPopulation& X0, int T);

/// Runs fn(i) for i in [0, count) on a pool of worker threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace rbsteer
