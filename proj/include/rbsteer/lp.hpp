#pragma once

#include <cstddef>
#include <limits>
#include <span>

#include "rbsteer/model.hpp"

namespace rbsteer {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// maximize c.z  s.t.  A z = b,  lower <= z <= upper.
struct LinearProgram {
    Vec objective;
    Matrix constraints;
    Vec rhs;
    Vec lower;
    Vec upper;

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rhs.size(); }
};

enum class LpStatus { optimal, infeasible, unbounded };

const char* to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    Vec z;
    double objective_value = 0.0;
    std::size_t pivots = 0;
};

/// Worst violations of a reported solution.
struct LpResiduals {
    double equality = 0.0;  ///< max_i |A_i z - b_i|
    double bounds = 0.0;    ///< max_j distance of z_j outside [lower_j, upper_j]
    double objective = 0.0; ///< |objective_value - c.z|
};

LpResiduals lp_residuals(const LinearProgram& lp, const LpSolution& sol);

/// True when sol satisfies the optimal-solution tolerances:
/// equality residual <= 1e-7 (1 + |b|_1), bounds within 1e-9,
/// objective within 1e-7 (1 + |c.z|).
bool within_tolerance(const LinearProgram& lp, const LpSolution& sol);

/// Bounded-variable revised simplex with an artificial-variable phase 1.
///
/// Pricing is Dantzig (largest reduced cost) and switches to Bland's rule
/// once the number of degenerate pivots exceeds 10 (m + n); ties break to the
/// lowest index, so identical inputs give bit-identical outputs. Throws
/// InputError on malformed programs and NumericalError when the basis cannot
/// be refactored or the final solution misses tolerance.
///
/// `start_basis` optionally lists m structural column indices forming a
/// primal feasible basis (nonbasic variables sit at their lower bound, or the
/// upper bound when the lower is infinite). Phase 1 is skipped when it is
/// usable; otherwise the solver silently starts cold.
LpSolution solve_lp(const LinearProgram& lp, std::span<const std::size_t> start_basis = {});

}  // namespace rbsteer
