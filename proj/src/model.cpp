#include "rbsteer/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rbsteer {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::operator*(const Matrix& other) const {
    if (cols_ != other.rows_) throw std::invalid_argument("matrix product: dimension mismatch");
    Matrix out(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < other.cols_; ++j) out(i, j) += a * other(k, j);
        }
    }
    return out;
}

Vec row_times(std::span<const double> v, const Matrix& m) {
    Vec out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (v[i] == 0.0) continue;
        const auto row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += v[i] * row[j];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l1_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

Matrix ArmModel::mixed_transition() const {
    Matrix m(num_states, num_states);
    for (std::size_t i = 0; i < num_states; ++i)
        for (std::size_t j = 0; j < num_states; ++j)
            m(i, j) = alpha * P1(i, j) + (1.0 - alpha) * P0(i, j);
    return m;
}

namespace {

Matrix to_stochastic_matrix(const std::vector<Vec>& rows, std::size_t n, const char* name) {
    if (rows.size() != n) {
        std::ostringstream os;
        os << name << ": dimension mismatch, expected " << n << " rows, got " << rows.size();
        throw InputError(os.str());
    }
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
            std::ostringstream os;
            os << name << ": dimension mismatch in row " << i << ", expected " << n
               << " entries, got " << rows[i].size();
            throw InputError(os.str());
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double p = rows[i][j];
            if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
                std::ostringstream os;
                os << name << ": entry (" << i << ", " << j << ") = " << p << " is not a probability";
                throw InputError(os.str());
            }
            m(i, j) = p;
            sum += p;
        }
        if (std::abs(sum - 1.0) > kEntryTol) {
            std::ostringstream os;
            os << name << ": non-stochastic row " << i << ", sum " << sum;
            throw InputError(os.str());
        }
    }
    return m;
}

Vec to_reward(const Vec& r, std::size_t n, const char* name) {
    if (r.size() != n) {
        std::ostringstream os;
        os << name << ": dimension mismatch, expected " << n << " entries, got " << r.size();
        throw InputError(os.str());
    }
    for (double v : r)
        if (!std::isfinite(v)) throw InputError(std::string(name) + ": reward entries must be finite");
    return r;
}

}  // namespace

ArmModel validate_model(const RawModel& raw) {
    if (raw.num_states == 0) throw InputError("num_states must be positive");
    if (!(raw.alpha > 0.0 && raw.alpha < 1.0)) {
        std::ostringstream os;
        os << "alpha must lie in (0,1), got " << raw.alpha;
        throw InputError(os.str());
    }
    ArmModel m;
    m.num_states = raw.num_states;
    m.alpha = raw.alpha;
    m.P0 = to_stochastic_matrix(raw.P0, raw.num_states, "P0");
    m.P1 = to_stochastic_matrix(raw.P1, raw.num_states, "P1");
    m.r0 = to_reward(raw.r0, raw.num_states, "r0");
    m.r1 = to_reward(raw.r1, raw.num_states, "r1");
    return m;
}

ModelFile parse_model_json(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError("model file must contain a JSON object");

    static const std::vector<std::string> required = {"num_states", "alpha", "P0", "P1", "r0", "r1"};
    for (const auto& key : required)
        if (!doc.contains(key)) throw InputError("model file: missing key \"" + key + "\"");

    ModelFile out;
    for (const auto& [key, value] : doc.items()) {
        if (key == "x_init") continue;
        if (std::find(required.begin(), required.end(), key) == required.end())
            out.warnings.push_back("model file: ignoring unknown key \"" + key + "\"");
    }

    RawModel raw;
    try {
        const auto n = doc.at("num_states").get<long long>();
        if (n <= 0) throw InputError("num_states must be positive");
        raw.num_states = static_cast<std::size_t>(n);
        raw.alpha = doc.at("alpha").get<double>();
        raw.P0 = doc.at("P0").get<std::vector<Vec>>();
        raw.P1 = doc.at("P1").get<std::vector<Vec>>();
        raw.r0 = doc.at("r0").get<Vec>();
        raw.r1 = doc.at("r1").get<Vec>();
        if (doc.contains("x_init")) out.x_init = doc.at("x_init").get<Vec>();
    } catch (const json::exception& e) {
        throw InputError(std::string("model file: wrong value type: ") + e.what());
    }
    out.model = validate_model(raw);
    if (out.x_init) {
        if (out.x_init->size() != out.model.num_states)
            throw InputError("x_init: dimension mismatch");
        out.x_init = make_population(std::move(*out.x_init));
    }
    return out;
}

ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_json(buf.str());
}

bool on_simplex(std::span<const double> x) {
    double sum = 0.0;
    for (double v : x) {
        if (!(v >= -kEntryTol)) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= kSumTol;
}

Vec make_population(Vec x) {
    if (x.empty()) throw InputError("population vector is empty");
    if (!on_simplex(x)) {
        double sum = 0.0;
        for (double v : x) sum += v;
        std::ostringstream os;
        os << "population vector is not on the simplex (sum " << sum << ")";
        throw InputError(os.str());
    }
    for (double& v : x) v = std::max(v, 0.0);
    return x;
}

bool check_feasible(std::span<const double> x, std::span<const double> u, double alpha) {
    if (x.size() != u.size()) return false;
    double budget = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        if (u[s] < -kEntryTol || u[s] > x[s] + kEntryTol) return false;
        budget += u[s];
    }
    return std::abs(budget - alpha) <= kSumTol;
}

namespace {

void require_feasible(const ArmModel& model, std::span<const double> x, std::span<const double> u) {
    if (x.size() != model.num_states || u.size() != model.num_states)
        throw InputError("state/control dimension does not match the model");
    if (!check_feasible(x, u, model.alpha)) throw InputError("infeasible (x, u) pair");
}

}  // namespace

Vec phi(const ArmModel& model, std::span<const double> x, std::span<const double> u) {
    require_feasible(model, x, u);
    const std::size_t n = model.num_states;
    Vec out(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const double passive = x[s] - u[s];
        const double active = u[s];
        const auto row0 = model.P0.row(s);
        const auto row1 = model.P1.row(s);
        for (std::size_t j = 0; j < n; ++j) out[j] += passive * row0[j] + active * row1[j];
    }
    return out;
}

double reward(const ArmModel& model, std::span<const double> x, std::span<const double> u) {
    require_feasible(model, x, u);
    double r = 0.0;
    for (std::size_t s = 0; s < model.num_states; ++s)
        r += (x[s] - u[s]) * model.r0[s] + u[s] * model.r1[s];
    return r;
}

Vec repair_control(std::span<const double> x, std::span<const double> u, double alpha) {
    const std::size_t n = x.size();
    Vec out(n);
    double budget = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        out[s] = std::clamp(u[s], 0.0, std::max(x[s], 0.0));
        budget += out[s];
    }
    double excess = budget - alpha;
    // Move the residual onto coordinates with room, lowest index first.
    for (std::size_t s = 0; s < n && excess != 0.0; ++s) {
        if (excess > 0.0) {
            const double take = std::min(excess, out[s]);
            out[s] -= take;
            excess -= take;
        } else {
            const double room = std::max(x[s], 0.0) - out[s];
            const double give = std::min(-excess, room);
            out[s] += give;
            excess += give;
        }
    }
    if (l1_distance(out, u) > 1e-6 || std::abs(excess) > kSumTol)
        throw NumericalError("control repair exceeded round-off scale");
    return out;
}

}  // namespace rbsteer
