#include "rbsteer/static_solver.hpp"

#include <cmath>
#include <sstream>

#include "rbsteer/lp.hpp"

namespace rbsteer {

namespace {

// Column blocks of the static LP: y = x - u (passive mass), u, h0, h1.
struct Layout {
    std::size_t S;
    std::size_t y(std::size_t s) const { return s; }
    std::size_t u(std::size_t s) const { return S + s; }
    std::size_t h0(std::size_t s) const { return 2 * S + s; }
    std::size_t h1(std::size_t s) const { return 3 * S + s; }
};

// Rows: S stationarity rows, one budget row, then either S deviation rows or
// one mass row.
LinearProgram build_static_lp(const ArmModel& model, const Vec* x_init) {
    const std::size_t S = model.num_states;
    const Layout L{S};
    const std::size_t nvars = x_init ? 4 * S : 2 * S;
    const std::size_t nrows = x_init ? 2 * S + 1 : S + 2;

    LinearProgram lp;
    lp.objective.assign(nvars, 0.0);
    lp.constraints = Matrix(nrows, nvars);
    lp.rhs.assign(nrows, 0.0);
    lp.lower.assign(nvars, 0.0);
    lp.upper.assign(nvars, kInf);

    for (std::size_t s = 0; s < S; ++s) {
        lp.objective[L.y(s)] = model.r0[s];
        lp.objective[L.u(s)] = model.r1[s];
    }
    auto& A = lp.constraints;
    for (std::size_t t = 0; t < S; ++t) {
        A(t, L.y(t)) += 1.0;
        A(t, L.u(t)) += 1.0;
        for (std::size_t s = 0; s < S; ++s) {
            A(t, L.y(s)) -= model.P0(s, t);
            A(t, L.u(s)) -= model.P1(s, t);
        }
    }
    for (std::size_t s = 0; s < S; ++s) A(S, L.u(s)) = 1.0;
    lp.rhs[S] = model.alpha;

    if (x_init) {
        for (std::size_t t = 0; t < S; ++t) {
            const std::size_t row = S + 1 + t;
            A(row, L.y(t)) = 1.0;
            A(row, L.u(t)) = 1.0;
            A(row, L.h0(t)) += 1.0;
            A(row, L.h1(t)) += 1.0;
            for (std::size_t s = 0; s < S; ++s) {
                A(row, L.h0(s)) -= model.P0(s, t);
                A(row, L.h1(s)) -= model.P1(s, t);
            }
            lp.rhs[row] = (*x_init)[t];
        }
    } else {
        for (std::size_t s = 0; s < S; ++s) {
            A(S + 1, L.y(s)) = 1.0;
            A(S + 1, L.u(s)) = 1.0;
        }
        lp.rhs[S + 1] = 1.0;
    }
    return lp;
}

StationaryPoint unpack(const ArmModel& model, const Vec& z, const Vec* x_init) {
    const std::size_t S = model.num_states;
    const Layout L{S};
    StationaryPoint sp;
    sp.x_star.resize(S);
    sp.u_star.resize(S);
    sp.h0.assign(S, 0.0);
    sp.h1.assign(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        sp.u_star[s] = z[L.u(s)];
        sp.x_star[s] = z[L.y(s)] + z[L.u(s)];
        if (x_init) {
            sp.h0[s] = z[L.h0(s)];
            sp.h1[s] = z[L.h1(s)];
        }
    }
    sp.value = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        sp.value += (sp.x_star[s] - sp.u_star[s]) * model.r0[s] + sp.u_star[s] * model.r1[s];
    if (x_init) sp.x_init = *x_init;
    return sp;
}

StationaryPoint solve_static(const ArmModel& model, const Vec* x_init) {
    const LinearProgram lp = build_static_lp(model, x_init);
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) {
        std::ostringstream os;
        os << "static problem reported " << to_string(sol.status)
           << "; this indicates an inconsistent model";
        throw NumericalError(os.str());
    }
    return unpack(model, sol.z, x_init);
}

}  // namespace

std::vector<std::size_t> support(const StationaryPoint& sp) {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < sp.x_star.size(); ++s)
        if (sp.x_star[s] > kSupportTol) out.push_back(s);
    return out;
}

StationaryPoint solve_refined_static(const ArmModel& model, const Vec& x_init) {
    if (x_init.size() != model.num_states) throw InputError("x_init: dimension mismatch");
    const Vec x0 = make_population(x_init);
    return solve_static(model, &x0);
}

StationaryPoint solve_conventional_static(const ArmModel& model) {
    return solve_static(model, nullptr);
}

std::optional<StationaryPoint> complete_stationary_point(const ArmModel& model, const Vec& x_star,
                                                         const Vec& u_star, const Vec& x_init) {
    const std::size_t S = model.num_states;
    if (x_star.size() != S || u_star.size() != S || x_init.size() != S)
        throw InputError("stationary point: dimension mismatch");
    LinearProgram lp = build_static_lp(model, &x_init);
    const Layout L{S};
    for (std::size_t s = 0; s < S; ++s) {
        lp.lower[L.y(s)] = lp.upper[L.y(s)] = x_star[s] - u_star[s];
        lp.lower[L.u(s)] = lp.upper[L.u(s)] = u_star[s];
    }
    // The stationarity and budget rows are fixed by the bounds already; only
    // feasibility of the deviation rows matters.
    std::fill(lp.objective.begin(), lp.objective.end(), 0.0);
    LpSolution sol;
    try {
        sol = solve_lp(lp);
    } catch (const InputError&) {
        return std::nullopt;
    }
    if (sol.status != LpStatus::optimal) return std::nullopt;
    StationaryPoint sp;
    sp.x_star = x_star;
    sp.u_star = u_star;
    sp.h0.resize(S);
    sp.h1.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        sp.h0[s] = sol.z[L.h0(s)];
        sp.h1[s] = sol.z[L.h1(s)];
    }
    sp.value = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        sp.value += (x_star[s] - u_star[s]) * model.r0[s] + u_star[s] * model.r1[s];
    sp.x_init = x_init;
    return sp;
}

StationaryCheck verify_stationary_point(const ArmModel& model, const StationaryPoint& sp) {
    StationaryCheck check;
    const std::size_t S = model.num_states;
    auto fail = [&](const std::string& what) { check.violations.push_back(what); };

    if (sp.x_star.size() != S || sp.u_star.size() != S || sp.h0.size() != S || sp.h1.size() != S) {
        fail("dimension mismatch");
        return check;
    }
    if (!on_simplex(sp.x_star)) fail("x_star is not on the simplex");

    double budget = 0.0;
    bool bounds_ok = true;
    for (std::size_t s = 0; s < S; ++s) {
        budget += sp.u_star[s];
        if (sp.u_star[s] < -kEntryTol || sp.u_star[s] > sp.x_star[s] + kEntryTol) bounds_ok = false;
    }
    if (std::abs(budget - model.alpha) > kSumTol) {
        std::ostringstream os;
        os << "budget violated: sum(u_star) = " << budget << ", alpha = " << model.alpha;
        fail(os.str());
    }
    if (!bounds_ok) fail("u_star violates 0 <= u <= x");

    // Stationarity, computed without the feasibility guard of phi().
    Vec next(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t t = 0; t < S; ++t)
            next[t] += (sp.x_star[s] - sp.u_star[s]) * model.P0(s, t) + sp.u_star[s] * model.P1(s, t);
    for (std::size_t t = 0; t < S; ++t) {
        if (std::abs(next[t] - sp.x_star[t]) > 1e-7) {
            std::ostringstream os;
            os << "stationarity violated at state " << t << ": phi = " << next[t]
               << ", x_star = " << sp.x_star[t];
            fail(os.str());
            break;
        }
    }

    for (std::size_t s = 0; s < S; ++s) {
        if (sp.h0[s] < -kEntryTol || sp.h1[s] < -kEntryTol) {
            fail("deviation measures must be nonnegative");
            break;
        }
    }

    if (sp.x_init) {
        const Vec& x0 = *sp.x_init;
        for (std::size_t t = 0; t < S; ++t) {
            double lhs = sp.x_star[t] + sp.h0[t] + sp.h1[t];
            for (std::size_t s = 0; s < S; ++s) lhs -= sp.h0[s] * model.P0(s, t) + sp.h1[s] * model.P1(s, t);
            if (std::abs(lhs - x0[t]) > 1e-7) {
                std::ostringstream os;
                os << "deviation identity violated at state " << t << ": lhs = " << lhs
                   << ", x_init = " << x0[t];
                fail(os.str());
                break;
            }
        }
    }

    double value = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        value += (sp.x_star[s] - sp.u_star[s]) * model.r0[s] + sp.u_star[s] * model.r1[s];
    if (std::abs(value - sp.value) > 1e-9) {
        std::ostringstream os;
        os << "value mismatch: stored " << sp.value << ", R(x*, u*) = " << value;
        fail(os.str());
    }
    return check;
}

}  // namespace rbsteer
