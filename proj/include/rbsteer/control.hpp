#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rbsteer/model.hpp"
#include "rbsteer/static_solver.hpp"

namespace rbsteer {

struct ReachabilityCertificate;

/// A deterministic feasible control rule x -> u in U(x).
using ControlRule = std::function<Vec(const Vec&)>;

/// How the unaligned part of the population is steered.
struct SteeringRule {
    enum class Kind { linear, mpc };

    Kind kind = Kind::linear;
    int window = 100;  ///< MPC look-ahead, only used for Kind::mpc

    static SteeringRule linear() { return {Kind::linear, 0}; }
    static SteeringRule mpc(int window = 100);

    std::string name() const;
};

/// Largest delta >= 0 with x >= delta * x_star, i.e. min over the support of
/// x_star of x_s / x*_s, capped to [0, 1].
double max_alignment_coef(std::span<const double> x, std::span<const double> x_star);

/// alpha * x.
Vec linear_steer(std::span<const double> x, double alpha);

/// Finite-horizon certainty-equivalent problem from a given state.
struct CecSolution {
    double objective = 0.0;      ///< sum_{t < T} R(x(t), u(t))
    std::vector<Vec> states;     ///< x(0..T-1)
    std::vector<Vec> controls;   ///< u(0..T-1)
};

/// Maximizes sum_{t<T} R(x(t), u(t)) subject to x(0) = x, x(t+1) = phi(x(t), u(t)),
/// u(t) in U(x(t)). No terminal condition.
CecSolution solve_cec_window(const ArmModel& model, std::span<const double> x, int horizon);

/// First control of the window-T_w certainty-equivalent plan.
Vec mpc_steer(const ArmModel& model, std::span<const double> x, int window);

/// Applies a steering rule to a state on the simplex.
Vec steer(const ArmModel& model, const SteeringRule& rule, std::span<const double> x);

/// delta(x) u* + (1 - delta(x)) steer((x - delta(x) x*) / (1 - delta(x))).
/// Returns u* exactly when 1 - delta(x) < 1e-9.
Vec align_and_steer_control(const ArmModel& model, std::span<const double> x,
                            const StationaryPoint& sp, const SteeringRule& rule);

ControlRule make_align_and_steer_rule(const ArmModel& model, const StationaryPoint& sp,
                                      const SteeringRule& rule);

struct TrajectoryStep {
    Vec x;
    Vec u;
};

/// x(0) = x0, u(t) = rule(x(t)), x(t+1) = phi(x(t), u(t)) for t < horizon.
std::vector<TrajectoryStep> deterministic_trajectory(const ArmModel& model, const ControlRule& rule,
                                                     const Vec& x0, int horizon);

struct DelayedStep {
    Vec x;
    double delta = 0.0;  ///< delta(x(t)) with respect to x*
};

/// Non-stationary comparison rule that keeps the aligned mass frozen for
/// blocks of T0 steps and steers the rest linearly. The aligned coefficient is
/// re-evaluated as delta(x(k T0)) at each block boundary. Returns x(0..horizon).
/// Throws InputError when no certificate is supplied.
std::vector<DelayedStep> delayed_align_trajectory(const ArmModel& model, const StationaryPoint& sp,
                                                  const std::optional<ReachabilityCertificate>& cert,
                                                  const Vec& x0, int horizon);

/// Truncated accumulated deviation sum_{t<T} (x(t), u(t)) - (x*, u*), laid out
/// as the S state entries followed by the S control entries.
struct BiasVector {
    Vec g;
    int horizon = 0;
};

BiasVector bias_truncated(const ArmModel& model, const ControlRule& rule, const Vec& x0,
                          const StationaryPoint& sp, int horizon);

}  // namespace rbsteer
