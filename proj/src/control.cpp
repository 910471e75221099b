#include "rbsteer/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rbsteer/chain.hpp"
#include "rbsteer/lp.hpp"

namespace rbsteer {

SteeringRule SteeringRule::mpc(int window) {
    if (window < 1) throw InputError("MPC window must be at least 1");
    return {Kind::mpc, window};
}

std::string SteeringRule::name() const {
    return kind == Kind::linear ? "align-linear" : "align-mpc";
}

double max_alignment_coef(std::span<const double> x, std::span<const double> x_star) {
    if (x.size() != x_star.size()) throw InputError("alignment: dimension mismatch");
    double delta = kInf;
    for (std::size_t s = 0; s < x.size(); ++s)
        if (x_star[s] > kSupportTol) delta = std::min(delta, x[s] / x_star[s]);
    if (!std::isfinite(delta)) throw InputError("alignment target has no positive coordinate");
    return std::clamp(delta, 0.0, 1.0);
}

Vec linear_steer(std::span<const double> x, double alpha) {
    Vec u(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) u[s] = alpha * x[s];
    return u;
}

CecSolution solve_cec_window(const ArmModel& model, std::span<const double> x, int horizon) {
    if (horizon < 1) throw InputError("look-ahead horizon must be at least 1");
    if (x.size() != model.num_states) throw InputError("state dimension does not match the model");
    const std::size_t S = model.num_states;
    const auto T = static_cast<std::size_t>(horizon);
    const std::size_t nvars = 2 * S * T;
    const std::size_t nrows = S + T + S * (T - 1);
    auto y = [S](std::size_t t, std::size_t s) { return 2 * S * t + s; };
    auto u = [S](std::size_t t, std::size_t s) { return 2 * S * t + S + s; };

    LinearProgram lp;
    lp.objective.assign(nvars, 0.0);
    lp.constraints = Matrix(nrows, nvars);
    lp.rhs.assign(nrows, 0.0);
    lp.lower.assign(nvars, 0.0);
    lp.upper.assign(nvars, kInf);
    auto& A = lp.constraints;

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            lp.objective[y(t, s)] = model.r0[s];
            lp.objective[u(t, s)] = model.r1[s];
        }
    }
    for (std::size_t s = 0; s < S; ++s) {
        A(s, y(0, s)) = 1.0;
        A(s, u(0, s)) = 1.0;
        lp.rhs[s] = x[s];
    }
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) A(S + t, u(t, s)) = 1.0;
        lp.rhs[S + t] = model.alpha;
    }
    for (std::size_t t = 0; t + 1 < T; ++t) {
        for (std::size_t next = 0; next < S; ++next) {
            const std::size_t row = S + T + S * t + next;
            A(row, y(t + 1, next)) = 1.0;
            A(row, u(t + 1, next)) = 1.0;
            for (std::size_t s = 0; s < S; ++s) {
                A(row, y(t, s)) -= model.P0(s, next);
                A(row, u(t, s)) -= model.P1(s, next);
            }
        }
    }

    // Starting basis: the myopic plan that activates states in decreasing
    // order of r1 - r0. Per step the basic columns are all y(t) plus the u(t)
    // entry that exhausts the budget, which makes the basis block triangular.
    std::vector<std::size_t> order(S);
    for (std::size_t s = 0; s < S; ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return model.r1[a] - model.r0[a] > model.r1[b] - model.r0[b];
    });
    std::vector<std::size_t> basis;
    basis.reserve(nrows);
    Vec cur(x.begin(), x.end());
    for (std::size_t t = 0; t < T; ++t) {
        Vec act(S, 0.0);
        double left = model.alpha;
        std::size_t last = order.front();
        for (std::size_t s : order) {
            if (left <= 0.0) break;
            act[s] = std::min(cur[s], left);
            left -= act[s];
            last = s;
        }
        for (std::size_t s = 0; s < S; ++s) basis.push_back(y(t, s));
        basis.push_back(u(t, last));
        Vec next(S, 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t k = 0; k < S; ++k)
                next[k] += (cur[s] - act[s]) * model.P0(s, k) + act[s] * model.P1(s, k);
        cur = std::move(next);
    }

    const LpSolution sol = solve_lp(lp, basis);
    if (sol.status != LpStatus::optimal) {
        std::ostringstream os;
        os << "look-ahead problem reported " << to_string(sol.status);
        throw NumericalError(os.str());
    }

    CecSolution out;
    out.objective = sol.objective_value;
    out.states.resize(T, Vec(S));
    out.controls.resize(T, Vec(S));
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            out.controls[t][s] = sol.z[u(t, s)];
            out.states[t][s] = sol.z[y(t, s)] + sol.z[u(t, s)];
        }
    }
    return out;
}

Vec mpc_steer(const ArmModel& model, std::span<const double> x, int window) {
    const CecSolution plan = solve_cec_window(model, x, window);
    return repair_control(x, plan.controls.front(), model.alpha);
}

Vec steer(const ArmModel& model, const SteeringRule& rule, std::span<const double> x) {
    switch (rule.kind) {
        case SteeringRule::Kind::linear: return linear_steer(x, model.alpha);
        case SteeringRule::Kind::mpc: return mpc_steer(model, x, rule.window);
    }
    throw InputError("unknown steering rule");
}

Vec align_and_steer_control(const ArmModel& model, std::span<const double> x,
                            const StationaryPoint& sp, const SteeringRule& rule) {
    const std::size_t S = model.num_states;
    const double delta = max_alignment_coef(x, sp.x_star);
    if (1.0 - delta < 1e-9) {
        if (check_feasible(x, sp.u_star, model.alpha)) return sp.u_star;
        return repair_control(x, sp.u_star, model.alpha);
    }
    Vec residual(S);
    double mass = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        residual[s] = std::max(0.0, (x[s] - delta * sp.x_star[s]) / (1.0 - delta));
        mass += residual[s];
    }
    for (double& v : residual) v /= mass;
    const Vec steer_u = steer(model, rule, residual);
    Vec u(S);
    for (std::size_t s = 0; s < S; ++s) u[s] = delta * sp.u_star[s] + (1.0 - delta) * steer_u[s];
    return repair_control(x, u, model.alpha);
}

ControlRule make_align_and_steer_rule(const ArmModel& model, const StationaryPoint& sp,
                                      const SteeringRule& rule) {
    return [model, sp, rule](const Vec& x) { return align_and_steer_control(model, x, sp, rule); };
}

std::vector<TrajectoryStep> deterministic_trajectory(const ArmModel& model, const ControlRule& rule,
                                                     const Vec& x0, int horizon) {
    if (horizon < 1) throw InputError("trajectory horizon must be at least 1");
    std::vector<TrajectoryStep> out;
    out.reserve(static_cast<std::size_t>(horizon));
    Vec x = x0;
    for (int t = 0; t < horizon; ++t) {
        Vec u;
        try {
            u = rule(x);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (at t=" + std::to_string(t) + ")");
        } catch (const InputError& e) {
            throw InputError(std::string(e.what()) + " (at t=" + std::to_string(t) + ")");
        }
        if (!check_feasible(x, u, model.alpha))
            throw InputError("control rule emitted an infeasible control at t=" + std::to_string(t));
        Vec next = phi(model, x, u);
        out.push_back({std::move(x), std::move(u)});
        x = std::move(next);
    }
    return out;
}

std::vector<DelayedStep> delayed_align_trajectory(const ArmModel& model, const StationaryPoint& sp,
                                                  const std::optional<ReachabilityCertificate>& cert,
                                                  const Vec& x0, int horizon) {
    if (!cert) throw InputError("delayed alignment requires a reachability certificate");
    if (horizon < 1) throw InputError("trajectory horizon must be at least 1");
    const std::size_t S = model.num_states;
    std::vector<DelayedStep> out;
    out.reserve(static_cast<std::size_t>(horizon) + 1);
    Vec x = x0;
    out.push_back({x, max_alignment_coef(x, sp.x_star)});
    double frozen = 0.0;
    for (int t = 0; t < horizon; ++t) {
        if (t % cert->T0 == 0) frozen = max_alignment_coef(x, sp.x_star);
        Vec u;
        if (1.0 - frozen < 1e-9) {
            u = check_feasible(x, sp.u_star, model.alpha) ? sp.u_star
                                                          : repair_control(x, sp.u_star, model.alpha);
        } else {
            u.resize(S);
            for (std::size_t s = 0; s < S; ++s) {
                const double residual = std::max(0.0, x[s] - frozen * sp.x_star[s]);
                u[s] = frozen * sp.u_star[s] + model.alpha * residual;
            }
            u = repair_control(x, u, model.alpha);
        }
        x = phi(model, x, u);
        out.push_back({x, max_alignment_coef(x, sp.x_star)});
    }
    return out;
}

BiasVector bias_truncated(const ArmModel& model, const ControlRule& rule, const Vec& x0,
                          const StationaryPoint& sp, int horizon) {
    const std::size_t S = model.num_states;
    BiasVector bias;
    bias.horizon = horizon;
    bias.g.assign(2 * S, 0.0);
    for (const auto& step : deterministic_trajectory(model, rule, x0, horizon)) {
        for (std::size_t s = 0; s < S; ++s) {
            bias.g[s] += step.x[s] - sp.x_star[s];
            bias.g[S + s] += step.u[s] - sp.u_star[s];
        }
    }
    return bias;
}

}  // namespace rbsteer
