#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbsteer/model.hpp"

namespace rbsteer {

/// An optimal stationary point of the static problem together with the
/// deviation measures h0, h1 that tie it to the initial state.
struct StationaryPoint {
    Vec x_star;
    Vec u_star;
    Vec h0;
    Vec h1;
    double value = 0.0;
    /// Absent for the conventional formulation.
    std::optional<Vec> x_init;
};

/// Threshold above which x*_s counts as part of the support.
inline constexpr double kSupportTol = 1e-9;

/// States s with x*_s > 1e-9.
std::vector<std::size_t> support(const StationaryPoint& sp);

/// Maximizes R(x, u) over stationary feasible (x, u) whose deviation
/// measures reconcile x with x_init:
///   x + h0 + h1 - h0 P0 - h1 P1 = x_init,  x, h0, h1 >= 0.
/// Multiple optima are possible; the simplex vertex reached is returned.
StationaryPoint solve_refined_static(const ArmModel& model, const Vec& x_init);

/// Same objective with the deviation constraint replaced by sum(x) = 1.
StationaryPoint solve_conventional_static(const ArmModel& model);

/// Looks for h0, h1 >= 0 making (x_star, u_star) a feasible point of the
/// refined problem for x_init. Returns nullopt when none exists.
std::optional<StationaryPoint> complete_stationary_point(const ArmModel& model, const Vec& x_star,
                                                         const Vec& u_star, const Vec& x_init);

struct StationaryCheck {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    explicit operator bool() const { return ok(); }
};

/// Checks stationarity (1e-7), feasibility of u*, nonnegativity of h,
/// the deviation identity (1e-7, when x_init is present) and value = R(x*, u*) (1e-9).
StationaryCheck verify_stationary_point(const ArmModel& model, const StationaryPoint& sp);

}  // namespace rbsteer
