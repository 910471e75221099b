#include "rbsteer/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rbsteer {

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

LpResiduals lp_residuals(const LinearProgram& lp, const LpSolution& sol) {
    LpResiduals res;
    const auto& A = lp.constraints;
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        const double ax = dot(A.row(i), sol.z);
        res.equality = std::max(res.equality, std::abs(ax - lp.rhs[i]));
    }
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        res.bounds = std::max(res.bounds, lp.lower[j] - sol.z[j]);
        res.bounds = std::max(res.bounds, sol.z[j] - lp.upper[j]);
    }
    res.objective = std::abs(sol.objective_value - dot(lp.objective, sol.z));
    return res;
}

bool within_tolerance(const LinearProgram& lp, const LpSolution& sol) {
    if (sol.z.size() != lp.num_vars()) return false;
    const auto res = lp_residuals(lp, sol);
    const double cz = dot(lp.objective, sol.z);
    return res.equality <= 1e-7 * (1.0 + l1_norm(lp.rhs)) && res.bounds <= 1e-9 &&
           res.objective <= 1e-7 * (1.0 + std::abs(cz));
}

namespace {

constexpr double kOptimalityTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kPhaseOneTol = 1e-7;
constexpr double kRatioTieTol = 1e-12;
constexpr double kHarrisTol = 1e-10;
constexpr double kDegenerateStep = 1e-12;
constexpr double kSingularTol = 1e-11;

struct Entry {
    std::size_t row;
    double value;
};

class Simplex {
  public:
    explicit Simplex(const LinearProgram& lp);
    LpSolution run();
    /// Installs a caller-supplied basis. Returns false (leaving the object
    /// unusable) when it is singular or not primal feasible.
    bool warm_start(std::span<const std::size_t> basis);
    LpSolution run_phase_two();

  private:
    enum class Where : unsigned char { basic, lower, upper, free_zero };
    enum class Outcome { optimal, unbounded };

    Outcome iterate();
    void refactor();
    void compute_basic_values();
    void pivot(std::size_t r, const Vec& w);
    Vec ftran(std::size_t j) const;
    void drive_out_artificials();
    bool is_artificial(std::size_t j) const { return j >= n_; }
    LpSolution extract() const;

    const LinearProgram& lp_;
    std::size_t m_;
    std::size_t n_;
    std::size_t total_;
    std::vector<std::vector<Entry>> cols_;
    Vec lo_, hi_, cost_, x_;
    std::vector<std::size_t> basis_;
    std::vector<Where> where_;
    Vec binv_;  // m x m, row-major
    std::size_t pivots_ = 0;
    std::size_t since_refactor_ = 0;
    std::size_t degenerate_ = 0;
    std::size_t refactor_interval_;
    bool bland_ = false;
};

Simplex::Simplex(const LinearProgram& lp)
    : lp_(lp), m_(lp.num_rows()), n_(lp.num_vars()), total_(lp.num_rows() + lp.num_vars()),
      refactor_interval_(std::max<std::size_t>(64, lp.num_rows())) {
    cols_.resize(total_);
    for (std::size_t i = 0; i < m_; ++i) {
        const auto row = lp.constraints.row(i);
        for (std::size_t j = 0; j < n_; ++j)
            if (row[j] != 0.0) cols_[j].push_back({i, row[j]});
    }
    lo_ = lp.lower;
    hi_ = lp.upper;
    lo_.resize(total_, 0.0);
    hi_.resize(total_, kInf);
    cost_.assign(total_, 0.0);
    x_.assign(total_, 0.0);
    where_.assign(total_, Where::lower);
    basis_.resize(m_);
    binv_.assign(m_ * m_, 0.0);

    for (std::size_t j = 0; j < n_; ++j) {
        if (std::isfinite(lo_[j])) {
            x_[j] = lo_[j];
            where_[j] = Where::lower;
        } else if (std::isfinite(hi_[j])) {
            x_[j] = hi_[j];
            where_[j] = Where::upper;
        } else {
            x_[j] = 0.0;
            where_[j] = Where::free_zero;
        }
    }
    // Artificial i carries the initial residual of row i with the sign that
    // makes it nonnegative.
    Vec residual = lp.rhs;
    for (std::size_t j = 0; j < n_; ++j)
        if (x_[j] != 0.0)
            for (const auto& e : cols_[j]) residual[e.row] -= e.value * x_[j];
    for (std::size_t i = 0; i < m_; ++i) {
        const double sign = residual[i] >= 0.0 ? 1.0 : -1.0;
        const std::size_t a = n_ + i;
        cols_[a].push_back({i, sign});
        x_[a] = std::abs(residual[i]);
        where_[a] = Where::basic;
        basis_[i] = a;
        binv_[i * m_ + i] = sign;
    }
}

Vec Simplex::ftran(std::size_t j) const {
    Vec w(m_, 0.0);
    for (const auto& e : cols_[j]) {
        for (std::size_t i = 0; i < m_; ++i) w[i] += binv_[i * m_ + e.row] * e.value;
    }
    return w;
}

void Simplex::refactor() {
    // Gauss-Jordan inversion of the basis matrix with partial pivoting.
    Vec B(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
        for (const auto& e : cols_[basis_[i]]) B[e.row * m_ + i] = e.value;
    Vec inv(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    for (std::size_t c = 0; c < m_; ++c) {
        std::size_t best = c;
        for (std::size_t r = c + 1; r < m_; ++r)
            if (std::abs(B[r * m_ + c]) > std::abs(B[best * m_ + c])) best = r;
        if (std::abs(B[best * m_ + c]) < kSingularTol) {
            std::ostringstream os;
            os << "LP basis became singular after " << pivots_ << " pivots";
            throw NumericalError(os.str());
        }
        if (best != c) {
            std::swap_ranges(B.begin() + c * m_, B.begin() + (c + 1) * m_, B.begin() + best * m_);
            std::swap_ranges(inv.begin() + c * m_, inv.begin() + (c + 1) * m_, inv.begin() + best * m_);
        }
        const double p = B[c * m_ + c];
        for (std::size_t k = 0; k < m_; ++k) {
            B[c * m_ + k] /= p;
            inv[c * m_ + k] /= p;
        }
        for (std::size_t r = 0; r < m_; ++r) {
            if (r == c) continue;
            const double f = B[r * m_ + c];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < m_; ++k) {
                B[r * m_ + k] -= f * B[c * m_ + k];
                inv[r * m_ + k] -= f * inv[c * m_ + k];
            }
        }
    }
    // B^{-1}: row i of inv corresponds to basic position i because column i of
    // B is the i-th basic column.
    binv_ = std::move(inv);
    since_refactor_ = 0;
    compute_basic_values();
}

void Simplex::compute_basic_values() {
    Vec r = lp_.rhs;
    for (std::size_t j = 0; j < total_; ++j) {
        if (where_[j] == Where::basic || x_[j] == 0.0) continue;
        for (const auto& e : cols_[j]) r[e.row] -= e.value * x_[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
        double v = 0.0;
        const double* row = binv_.data() + i * m_;
        for (std::size_t k = 0; k < m_; ++k) v += row[k] * r[k];
        x_[basis_[i]] = v;
    }
}

void Simplex::pivot(std::size_t r, const Vec& w) {
    double* prow = binv_.data() + r * m_;
    const double inv_p = 1.0 / w[r];
    std::vector<std::size_t> nz;
    nz.reserve(m_);
    for (std::size_t k = 0; k < m_; ++k) {
        if (prow[k] != 0.0) {
            prow[k] *= inv_p;
            nz.push_back(k);
        }
    }
    for (std::size_t i = 0; i < m_; ++i) {
        if (i == r || w[i] == 0.0) continue;
        double* row = binv_.data() + i * m_;
        const double f = w[i];
        for (std::size_t k : nz) row[k] -= f * prow[k];
    }
    ++pivots_;
    ++since_refactor_;
}

Simplex::Outcome Simplex::iterate() {
    Vec y(m_);
    const std::size_t degenerate_limit = 10 * (m_ + n_);
    // Duals y = c_B B^{-1}, recomputed after each refactor and otherwise
    // updated by the pivot row.
    auto compute_duals = [&] {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost_[basis_[i]];
            if (cb == 0.0) continue;
            const double* row = binv_.data() + i * m_;
            for (std::size_t k = 0; k < m_; ++k) y[k] += cb * row[k];
        }
    };
    compute_duals();
    for (;;) {
        if (since_refactor_ >= refactor_interval_) {
            refactor();
            compute_duals();
        }

        // Pricing.
        std::size_t enter = total_;
        double enter_dir = 0.0;
        double enter_d = 0.0;
        double best_score = 0.0;
        for (std::size_t j = 0; j < total_; ++j) {
            const Where wj = where_[j];
            if (wj == Where::basic || lo_[j] == hi_[j]) continue;
            double d = cost_[j];
            for (const auto& e : cols_[j]) d -= y[e.row] * e.value;
            double dir = 0.0;
            if (d > kOptimalityTol && (wj == Where::lower || wj == Where::free_zero))
                dir = 1.0;
            else if (d < -kOptimalityTol && (wj == Where::upper || wj == Where::free_zero))
                dir = -1.0;
            if (dir == 0.0) continue;
            const double score = std::abs(d);
            if (bland_) {
                enter = j;
                enter_dir = dir;
                enter_d = d;
                break;
            }
            if (score > best_score) {
                best_score = score;
                enter = j;
                enter_dir = dir;
                enter_d = d;
            }
        }
        if (enter == total_) return Outcome::optimal;

        const Vec w = ftran(enter);

        // Ratio test. Outside Bland mode this is the two-pass variant: the
        // first pass finds the largest step with bounds relaxed by
        // kHarrisTol, the second picks the largest pivot among rows that block
        // within that step.
        auto limit_of = [&](std::size_t i, double slack, bool& to_upper) {
            const double delta = -enter_dir * w[i];
            const std::size_t b = basis_[i];
            if (delta < -kPivotTol && std::isfinite(lo_[b])) {
                to_upper = false;
                return (x_[b] - lo_[b] + slack) / -delta;
            }
            if (delta > kPivotTol && std::isfinite(hi_[b])) {
                to_upper = true;
                return (hi_[b] - x_[b] + slack) / delta;
            }
            return kInf;
        };
        double step = kInf;
        std::size_t leave = m_;
        bool leave_to_upper = false;
        if (bland_) {
            for (std::size_t i = 0; i < m_; ++i) {
                bool to_upper = false;
                const double limit = std::max(limit_of(i, 0.0, to_upper), 0.0);
                if (!std::isfinite(limit)) continue;
                if (leave == m_ || limit < step - kRatioTieTol ||
                    (limit <= step + kRatioTieTol && basis_[i] < basis_[leave])) {
                    step = std::min(step, limit);
                    leave = i;
                    leave_to_upper = to_upper;
                }
            }
        } else {
            double relaxed = kInf;
            for (std::size_t i = 0; i < m_; ++i) {
                bool to_upper = false;
                relaxed = std::min(relaxed, limit_of(i, kHarrisTol, to_upper));
            }
            if (std::isfinite(relaxed)) {
                double best_pivot = 0.0;
                for (std::size_t i = 0; i < m_; ++i) {
                    bool to_upper = false;
                    const double limit = limit_of(i, 0.0, to_upper);
                    if (limit > relaxed) continue;
                    const double mag = std::abs(w[i]);
                    if (leave == m_ || mag > best_pivot || (mag == best_pivot && basis_[i] < basis_[leave])) {
                        best_pivot = mag;
                        leave = i;
                        leave_to_upper = to_upper;
                        step = std::max(limit, 0.0);
                    }
                }
            }
        }

        const double span = hi_[enter] - lo_[enter];
        const bool flip = std::isfinite(span) && span <= step;
        if (flip) step = span;
        if (!std::isfinite(step)) return Outcome::unbounded;

        if (step <= kDegenerateStep && ++degenerate_ > degenerate_limit) bland_ = true;

        x_[enter] += enter_dir * step;
        for (std::size_t i = 0; i < m_; ++i)
            if (w[i] != 0.0) x_[basis_[i]] -= enter_dir * w[i] * step;

        if (flip) {
            if (enter_dir > 0) {
                x_[enter] = hi_[enter];
                where_[enter] = Where::upper;
            } else {
                x_[enter] = lo_[enter];
                where_[enter] = Where::lower;
            }
            continue;
        }

        const std::size_t out = basis_[leave];
        x_[out] = leave_to_upper ? hi_[out] : lo_[out];
        where_[out] = leave_to_upper ? Where::upper : Where::lower;
        basis_[leave] = enter;
        where_[enter] = Where::basic;
        pivot(leave, w);
        const double* prow = binv_.data() + leave * m_;
        for (std::size_t k = 0; k < m_; ++k) y[k] += enter_d * prow[k];
    }
}

void Simplex::drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
        if (!is_artificial(basis_[i])) continue;
        const double* row = binv_.data() + i * m_;
        std::size_t best = total_;
        double best_abs = kPivotTol;
        for (std::size_t j = 0; j < n_; ++j) {
            if (where_[j] == Where::basic) continue;
            double a = 0.0;
            for (const auto& e : cols_[j]) a += row[e.row] * e.value;
            if (std::abs(a) > best_abs) {
                best_abs = std::abs(a);
                best = j;
            }
        }
        // No candidate: row i is redundant and the artificial stays basic at zero.
        if (best == total_) continue;
        const Vec w = ftran(best);
        const std::size_t out = basis_[i];
        x_[out] = 0.0;
        where_[out] = Where::lower;
        basis_[i] = best;
        where_[best] = Where::basic;
        pivot(i, w);
    }
}

LpSolution Simplex::extract() const {
    LpSolution sol;
    sol.status = LpStatus::optimal;
    sol.z.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) sol.z[j] = std::clamp(sol.z[j], lo_[j], hi_[j]);
    sol.objective_value = dot(lp_.objective, sol.z);
    sol.pivots = pivots_;
    return sol;
}

LpSolution Simplex::run() {
    // Phase 1: maximize minus the sum of artificials.
    for (std::size_t i = 0; i < m_; ++i) cost_[n_ + i] = -1.0;
    iterate();
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m_; ++i) infeasibility += x_[n_ + i];
    if (infeasibility > kPhaseOneTol) {
        LpSolution sol;
        sol.status = LpStatus::infeasible;
        sol.pivots = pivots_;
        return sol;
    }
    drive_out_artificials();
    for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t a = n_ + i;
        cost_[a] = 0.0;
        hi_[a] = 0.0;
        if (where_[a] != Where::basic) {
            where_[a] = Where::lower;
            x_[a] = 0.0;
        }
    }
    refactor();
    return run_phase_two();
}

bool Simplex::warm_start(std::span<const std::size_t> basis) {
    if (basis.size() != m_) return false;
    std::vector<char> seen(total_, 0);
    for (std::size_t j : basis) {
        if (j >= n_ || seen[j]) return false;
        seen[j] = 1;
    }
    for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t a = n_ + i;
        cost_[a] = 0.0;
        hi_[a] = 0.0;
        x_[a] = 0.0;
        where_[a] = Where::lower;
    }
    for (std::size_t i = 0; i < m_; ++i) {
        basis_[i] = basis[i];
        where_[basis[i]] = Where::basic;
    }
    try {
        refactor();
    } catch (const NumericalError&) {
        return false;
    }
    for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t b = basis_[i];
        if (x_[b] < lo_[b] - kHarrisTol || x_[b] > hi_[b] + kHarrisTol) return false;
    }
    return true;
}

LpSolution Simplex::run_phase_two() {
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp_.objective[j];
    degenerate_ = 0;
    bland_ = false;
    if (iterate() == Outcome::unbounded) {
        LpSolution sol;
        sol.status = LpStatus::unbounded;
        sol.pivots = pivots_;
        return sol;
    }

    refactor();
    LpSolution sol = extract();
    if (!within_tolerance(lp_, sol)) {
        std::ostringstream os;
        const auto res = lp_residuals(lp_, sol);
        os << "LP solution misses tolerance after " << pivots_ << " pivots (equality residual "
           << res.equality << ")";
        throw NumericalError(os.str());
    }
    return sol;
}

void validate(const LinearProgram& lp) {
    const std::size_t n = lp.num_vars();
    const std::size_t m = lp.num_rows();
    if (lp.constraints.rows() != m || (m > 0 && lp.constraints.cols() != n))
        throw InputError("linear program: constraint matrix has wrong shape");
    if (lp.lower.size() != n || lp.upper.size() != n)
        throw InputError("linear program: bound vectors have wrong length");
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isnan(lp.lower[j]) || std::isnan(lp.upper[j]) || lp.lower[j] > lp.upper[j])
            throw InputError("linear program: inconsistent bounds");
        if (!std::isfinite(lp.objective[j]))
            throw InputError("linear program: objective must be finite");
    }
    for (double b : lp.rhs)
        if (!std::isfinite(b)) throw InputError("linear program: rhs must be finite");
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, std::span<const std::size_t> start_basis) {
    validate(lp);
    if (!start_basis.empty()) {
        Simplex warm(lp);
        if (warm.warm_start(start_basis)) return warm.run_phase_two();
    }
    Simplex simplex(lp);
    return simplex.run();
}

}  // namespace rbsteer
