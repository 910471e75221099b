#include "rbsteer/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "rbsteer/control.hpp"

namespace rbsteer {

SimConfig SimConfig::with_default_burn_in(std::int64_t N, int T, std::uint64_t seed, int replications) {
    SimConfig cfg;
    cfg.N = N;
    cfg.T = T;
    cfg.burn_in = T / 4;
    cfg.seed = seed;
    cfg.replications = replications;
    return cfg;
}

void validate_config(const SimConfig& cfg, double alpha) {
    if (cfg.T < 1) throw InputError("horizon T must be at least 1");
    if (cfg.burn_in < 0 || cfg.burn_in >= cfg.T) throw InputError("burn_in must satisfy 0 <= burn_in < T");
    if (cfg.replications < 1) throw InputError("replications must be at least 1");
    if (cfg.record_delta_every < 0) throw InputError("record stride must be nonnegative");
    budget_units(alpha, cfg.N);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

// Adds a Multinomial(n, row) draw to out using sequential binomial conditioning.
void add_multinomial(std::int64_t n, std::span<const double> row, Rng& rng, Counts& out) {
    if (n == 0) return;
    std::size_t last = row.size();
    while (last > 0 && row[last - 1] <= 0.0) --last;
    if (last == 0) throw InputError("transition row has no positive entry");
    --last;
    std::int64_t remaining = n;
    double mass = 1.0;
    for (std::size_t k = 0; k < last && remaining > 0; ++k) {
        if (row[k] <= 0.0) continue;
        const double p = mass > 0.0 ? std::clamp(row[k] / mass, 0.0, 1.0) : 1.0;
        const std::int64_t c = rng.binomial(remaining, p);
        out[k] += c;
        remaining -= c;
        mass -= row[k];
    }
    out[last] += remaining;
}

void require_grid_feasible(const ArmModel& model, const GridPopulation& X, const Counts& U) {
    if (X.counts.size() != model.num_states || U.size() != model.num_states)
        throw InputError("grid state/control dimension does not match the model");
    std::int64_t total = 0;
    for (std::size_t s = 0; s < U.size(); ++s) {
        if (U[s] < 0 || U[s] > X.counts[s]) throw InputError("infeasible (X, U) pair");
        total += U[s];
    }
    if (total != budget_units(model.alpha, X.N)) throw InputError("infeasible (X, U) pair: budget");
}

double grid_reward(const ArmModel& model, const GridPopulation& X, const Counts& U) {
    double r = 0.0;
    for (std::size_t s = 0; s < U.size(); ++s)
        r += static_cast<double>(X.counts[s] - U[s]) * model.r0[s] + static_cast<double>(U[s]) * model.r1[s];
    return r / static_cast<double>(X.N);
}

}  // namespace

Counts sample_transition(const ArmModel& model, const GridPopulation& X, const Counts& U, Rng& rng) {
    require_grid_feasible(model, X, U);
    Counts next(model.num_states, 0);
    for (std::size_t s = 0; s < model.num_states; ++s) {
        add_multinomial(X.counts[s] - U[s], model.P0.row(s), rng, next);
        add_multinomial(U[s], model.P1.row(s), rng, next);
    }
    return next;
}

double simulate_replication(const ArmModel& model, const InducedPolicy& policy, const GridPopulation& X0,
                            const SimConfig& cfg, int replication, const StationaryPoint* sp,
                            int trace_stride, std::vector<TracePoint>* trace) {
    GridPopulation X = X0;
    double total = 0.0;
    for (int t = 0; t < cfg.T; ++t) {
        Rng rng = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(replication), static_cast<std::uint64_t>(t)});
        Counts U;
        try {
            U = policy_step(policy, X, rng);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (policy failed at step " + std::to_string(t) + ")");
        } catch (const InputError& e) {
            throw InputError(std::string(e.what()) + " (policy failed at step " + std::to_string(t) + ")");
        }
        const double r = grid_reward(model, X, U);
        if (t >= cfg.burn_in) total += r;
        if (trace && trace_stride > 0 && t % trace_stride == 0) {
            TracePoint p{t, std::nullopt, r};
            if (sp) p.delta = max_alignment_coef(X.fractions(), sp->x_star);
            trace->push_back(p);
        }
        X.counts = sample_transition(model, X, U, rng);
    }
    return total / static_cast<double>(cfg.T - cfg.burn_in);
}

SimResult run_policy(const ArmModel& model, const InducedPolicy& policy, const GridPopulation& X0,
                     const SimConfig& cfg, const StationaryPoint* sp) {
    validate_config(cfg, model.alpha);
    if (X0.N != cfg.N) throw InputError("initial state is not on the configured 1/N grid");
    if (policy.N != cfg.N) throw InputError("policy N does not match the configuration");

    SimResult result;
    result.per_replication_means.assign(static_cast<std::size_t>(cfg.replications), 0.0);
    parallel_for(result.per_replication_means.size(), [&](std::size_t rep) {
        const bool record = rep == 0 && cfg.record_delta_every > 0;
        result.per_replication_means[rep] =
            simulate_replication(model, policy, X0, cfg, static_cast<int>(rep), sp,
                                 cfg.record_delta_every, record ? &result.delta_trace : nullptr);
    });

    const auto& means = result.per_replication_means;
    const double n = static_cast<double>(means.size());
    double sum = 0.0;
    for (double m : means) sum += m;
    result.mean_reward = sum / n;
    if (means.size() > 1) {
        double ss = 0.0;
        for (double m : means) ss += (m - result.mean_reward) * (m - result.mean_reward);
        result.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return result;
}

NoiseStats noise_stats(const ArmModel& model, const GridPopulation& X, const Counts& U, Rng& rng, int reps,
                       double xi) {
    if (reps < 1) throw InputError("noise_stats needs at least one draw");
    require_grid_feasible(model, X, U);
    const std::size_t S = model.num_states;
    const Vec mean_next = phi(model, X.fractions(), to_fractions(U, X.N));
    Vec mean_noise(S, 0.0);
    double l1_sum = 0.0;
    double l1_sq = 0.0;
    int tail = 0;
    for (int i = 0; i < reps; ++i) {
        const Counts next = sample_transition(model, X, U, rng);
        double l1 = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double e = static_cast<double>(next[s]) / static_cast<double>(X.N) - mean_next[s];
            mean_noise[s] += e;
            l1 += std::abs(e);
        }
        l1_sum += l1;
        l1_sq += l1 * l1;
        if (l1 >= xi) ++tail;
    }
    const double n = static_cast<double>(reps);
    NoiseStats st;
    st.reps = reps;
    st.xi = xi;
    for (double& v : mean_noise) v /= n;
    st.mean_l1_of_mean = l1_norm(mean_noise);
    st.mean_l1 = l1_sum / n;
    const double var = reps > 1 ? std::max(0.0, (l1_sq - n * st.mean_l1 * st.mean_l1) / (n - 1.0)) : 0.0;
    st.mean_l1_stderr = std::sqrt(var / n);
    st.tail_freq = static_cast<double>(tail) / n;
    st.tail_freq_stderr = std::sqrt(st.tail_freq * (1.0 - st.tail_freq) / n);
    return st;
}

namespace {

// All vectors of `parts` nonnegative integers summing to n.
void compositions(std::int64_t n, std::size_t parts, Counts& cur, std::size_t k, std::vector<Counts>& out) {
    if (k + 1 == parts) {
        cur[k] = n;
        out.push_back(cur);
        return;
    }
    for (std::int64_t c = 0; c <= n; ++c) {
        cur[k] = c;
        compositions(n - c, parts, cur, k + 1, out);
    }
}

std::vector<Counts> compositions(std::int64_t n, std::size_t parts) {
    std::vector<Counts> out;
    Counts cur(parts, 0);
    compositions(n, parts, cur, 0, out);
    return out;
}

using Law = std::map<Counts, double>;

Law multinomial_law(std::int64_t n, std::span<const double> row) {
    Law law;
    for (const auto& c : compositions(n, row.size())) {
        double logp = std::lgamma(static_cast<double>(n) + 1.0);
        bool possible = true;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (c[k] == 0) continue;
            if (row[k] <= 0.0) {
                possible = false;
                break;
            }
            logp += static_cast<double>(c[k]) * std::log(row[k]) - std::lgamma(static_cast<double>(c[k]) + 1.0);
        }
        if (possible) law[c] += std::exp(logp);
    }
    return law;
}

Law convolve(const Law& a, const Law& b) {
    Law out;
    for (const auto& [ca, pa] : a) {
        for (const auto& [cb, pb] : b) {
            Counts c(ca.size());
            for (std::size_t k = 0; k < c.size(); ++k) c[k] = ca[k] + cb[k];
            out[c] += pa * pb;
        }
    }
    return out;
}

class ExactDp {
  public:
    ExactDp(const ArmModel& model, std::int64_t N) : model_(model), N_(N), budget_(budget_units(model.alpha, N)) {}

    double value(const Counts& X, int steps) {
        if (steps == 0) return 0.0;
        const auto key = std::make_pair(X, steps);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        double best = -kHuge;
        Counts U(X.size(), 0);
        enumerate_controls(X, U, 0, budget_, [&](const Counts& u) {
            const GridPopulation g{N_, X};
            double v = grid_reward(model_, g, u);
            for (const auto& [next, p] : transition_law(X, u)) v += p * value(next, steps - 1);
            best = std::max(best, v);
        });
        memo_[key] = best;
        return best;
    }

  private:
    static constexpr double kHuge = 1e300;

    template <typename Fn>
    void enumerate_controls(const Counts& X, Counts& U, std::size_t k, std::int64_t left, Fn&& fn) {
        if (k + 1 == X.size()) {
            if (left <= X[k]) {
                U[k] = left;
                fn(U);
            }
            return;
        }
        for (std::int64_t c = 0; c <= std::min(left, X[k]); ++c) {
            U[k] = c;
            enumerate_controls(X, U, k + 1, left - c, fn);
        }
    }

    const Law& transition_law(const Counts& X, const Counts& U) {
        const auto key = std::make_pair(X, U);
        if (auto it = laws_.find(key); it != laws_.end()) return it->second;
        Law law{{Counts(X.size(), 0), 1.0}};
        for (std::size_t s = 0; s < X.size(); ++s) {
            if (X[s] - U[s] > 0) law = convolve(law, multinomial_law(X[s] - U[s], model_.P0.row(s)));
            if (U[s] > 0) law = convolve(law, multinomial_law(U[s], model_.P1.row(s)));
        }
        return laws_.emplace(key, std::move(law)).first->second;
    }

    const ArmModel& model_;
    std::int64_t N_;
    std::int64_t budget_;
    std::map<std::pair<Counts, int>, double> memo_;
    std::map<std::pair<Counts, Counts>, Law> laws_;
};

}  // namespace

double brute_force_dp(const ArmModel& model, std::int64_t N, const GridPopulation& X0, int T) {
    if (model.num_states > 3 || N > 6 || T > 5) {
        std::ostringstream os;
        os << "instance too large for exact DP (S=" << model.num_states << ", N=" << N << ", T=" << T
           << "; limits S<=3, N<=6, T<=5)";
        throw InputError(os.str());
    }
    if (N < 1 || T < 1) throw InputError("exact DP needs N >= 1 and T >= 1");
    if (X0.N != N || X0.counts.size() != model.num_states) throw InputError("initial state does not match N");
    ExactDp dp(model, N);
    return dp.value(X0.counts, T);
}

}  // namespace rbsteer
