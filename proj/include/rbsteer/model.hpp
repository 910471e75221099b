#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbsteer {

using Vec = std::vector<double>;

/// Raised for malformed or inconsistent user input (exit code 2 in the CLI).
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a trustworthy answer (exit code 3).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Tolerance on simplex sums and budget sums.
inline constexpr double kSumTol = 1e-9;
/// Tolerance on entry nonnegativity and componentwise bounds.
inline constexpr double kEntryTol = 1e-12;

/// Dense row-major matrix.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    Matrix operator*(const Matrix& other) const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Row vector times matrix.
Vec row_times(std::span<const double> v, const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double l1_norm(std::span<const double> v);
double l1_distance(std::span<const double> a, std::span<const double> b);

/// The single-armed MDP shared by all N arms.
struct ArmModel {
    std::size_t num_states = 0;
    Matrix P0;
    Matrix P1;
    Vec r0;
    Vec r1;
    double alpha = 0.0;

    /// P^alpha = alpha * P1 + (1 - alpha) * P0.
    Matrix mixed_transition() const;
};

/// Unvalidated model description, as read from a file.
struct RawModel {
    std::size_t num_states = 0;
    std::vector<Vec> P0;
    std::vector<Vec> P1;
    Vec r0;
    Vec r1;
    double alpha = 0.0;
};

ArmModel validate_model(const RawModel& raw);

/// Contents of a model file.
struct ModelFile {
    ArmModel model;
    std::optional<Vec> x_init;
    std::vector<std::string> warnings;
};

ModelFile parse_model_json(const std::string& text);
ModelFile load_model_file(const std::string& path);

/// Validates that x lies on the simplex and clamps entries inside tolerance.
Vec make_population(Vec x);

bool on_simplex(std::span<const double> x);

/// u feasible for x: budget sums to alpha and 0 <= u <= x.
bool check_feasible(std::span<const double> x, std::span<const double> u, double alpha);

/// Deterministic transition (x - u) P0 + u P1.
Vec phi(const ArmModel& model, std::span<const double> x, std::span<const double> u);

/// Instant reward (x - u) r0 + u r1.
double reward(const ArmModel& model, std::span<const double> x, std::span<const double> u);

/// Clamps u into [0, x] and redistributes the budget residual. Only meant to
/// absorb round-off from LP solutions and mixtures; throws if the repair would
/// move any entry by more than 1e-6.
Vec repair_control(std::span<const double> x, std::span<const double> u, double alpha);

}  // namespace rbsteer
