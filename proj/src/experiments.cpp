#include "rbsteer/experiments.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "rbsteer/chain.hpp"
#include "rbsteer/control.hpp"
#include "rbsteer/policies.hpp"
#include "rbsteer/simulator.hpp"
#include "rbsteer/static_solver.hpp"

namespace rbsteer {

using nlohmann::json;

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

struct LoadedModel {
    ArmModel model;
    std::optional<Vec> x_init;
    std::string hash;
};

LoadedModel load(const ExperimentSpec& spec, std::ostream& err) {
    if (spec.model_path.empty()) throw InputError("--model is required");
    std::ifstream in(spec.model_path, std::ios::binary);
    if (!in) throw InputError("cannot open model file: " + spec.model_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    ModelFile file = parse_model_json(text);
    for (const auto& w : file.warnings) err << "warning: " << w << "\n";
    LoadedModel out{std::move(file.model), std::move(file.x_init), fnv1a_hex(text)};
    if (spec.x_init) {
        if (spec.x_init->size() != out.model.num_states) throw InputError("--x-init: dimension mismatch");
        out.x_init = make_population(*spec.x_init);
    }
    return out;
}

Vec require_x_init(const LoadedModel& m) {
    if (!m.x_init) throw InputError("x_init required (model file key \"x_init\" or --x-init)");
    return *m.x_init;
}

SteeringRule steering_for(const ExperimentSpec& spec) {
    if (spec.policy == "align-linear") return SteeringRule::linear();
    if (spec.policy == "align-mpc") return SteeringRule::mpc(spec.window);
    throw InputError("unknown policy \"" + spec.policy + "\" (expected align-linear or align-mpc)");
}

// Writes to spec.out_path when set, otherwise to the fallback stream.
class Sink {
  public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw InputError("output path is not writable: " + path);
            os_ = &file_;
        }
    }
    std::ostream& stream() { return *os_; }

  private:
    std::ofstream file_;
    std::ostream* os_;
};

json metadata(const char* command, const ExperimentSpec& spec, const LoadedModel& m, int burn_in) {
    json meta;
    meta["command"] = command;
    meta["model"] = spec.model_path;
    meta["model_hash"] = "fnv1a64:" + m.hash;
    meta["policy"] = spec.policy;
    meta["tw"] = spec.window;
    meta["N"] = spec.N_list;
    meta["T"] = spec.T;
    meta["burn_in"] = burn_in;
    meta["seed"] = spec.seed;
    meta["reps"] = spec.reps;
    meta["stride"] = spec.stride;
    meta["x_init"] = m.x_init ? json(*m.x_init) : json(nullptr);
    return meta;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

json stationary_json(const StationaryPoint& sp) {
    return json{{"x_star", sp.x_star}, {"u_star", sp.u_star}, {"h0", sp.h0}, {"h1", sp.h1}, {"value", sp.value}};
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

int resolved_burn_in(const ExperimentSpec& spec) { return spec.burn_in ? *spec.burn_in : spec.T / 4; }

}  // namespace

int cmd_solve(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const LoadedModel m = load(spec, err);
        StationaryPoint sp = spec.conventional ? solve_conventional_static(m.model)
                                               : solve_refined_static(m.model, require_x_init(m));
        Sink sink(spec.out_path, out);
        sink.stream() << stationary_json(sp).dump(2) << "\n";
        return int{kExitOk};
    });
}

int cmd_analyze(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const LoadedModel m = load(spec, err);
        const ChainStructure chain = analyze_chain(m.model);
        json doc;
        doc["chain"] = {{"classes", chain.classes},
                        {"closed_classes", chain.closed_classes},
                        {"transient_states", chain.transient_states},
                        {"weakly_communicating", chain.weakly_communicating},
                        {"periods", chain.periods_under_Palpha}};
        std::optional<StationaryPoint> sp;
        if (spec.conventional)
            sp = solve_conventional_static(m.model);
        else if (m.x_init)
            sp = solve_refined_static(m.model, *m.x_init);

        const int cap = spec.cap ? *spec.cap : default_certificate_cap(m.model.num_states);
        doc["certificate_cap"] = cap;
        if (!sp) {
            doc["certificate"] = nullptr;
            doc["certificate_status"] = "x_init required for the certificate";
        } else {
            doc["x_star"] = sp->x_star;
            const auto cert = find_certificate(m.model, *sp, cap);
            if (cert) {
                doc["certificate"] = {{"T0", cert->T0}, {"p0", cert->p0}, {"theta", cert->theta}};
                doc["certificate_status"] = "found";
            } else {
                doc["certificate"] = nullptr;
                doc["certificate_status"] = "no certificate within cap";
            }
        }
        Sink sink(spec.out_path, out);
        sink.stream() << doc.dump(2) << "\n";
        return int{kExitOk};
    });
}

int cmd_sweep(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (spec.reps < 1) throw InputError("replications must be at least 1");
        if (spec.N_list.empty()) throw InputError("--N needs at least one value");
        const int burn_in = resolved_burn_in(spec);
        if (spec.T < 1 || burn_in < 0 || burn_in >= spec.T) throw InputError("need T >= 1 and 0 <= burn_in < T");
        const LoadedModel m = load(spec, err);
        const Vec x0 = require_x_init(m);
        const SteeringRule steering = steering_for(spec);
        const StationaryPoint sp = solve_refined_static(m.model, x0);
        const ControlRule rule = make_align_and_steer_rule(m.model, sp, steering);

        struct Row {
            std::int64_t N;
            std::string status = "ok";
            std::optional<GridPopulation> X0;
            std::vector<double> means;
            std::vector<std::string> errors;
        };
        std::vector<Row> rows;
        for (std::int64_t N : spec.N_list) {
            Row row;
            row.N = N;
            try {
                budget_units(m.model.alpha, N);
                row.X0 = to_grid(x0, N);
            } catch (const InputError& e) {
                row.status = e.what();
                err << "warning: N=" << N << ": " << e.what() << "\n";
            }
            row.means.assign(static_cast<std::size_t>(spec.reps), 0.0);
            row.errors.assign(static_cast<std::size_t>(spec.reps), "");
            rows.push_back(std::move(row));
        }

        std::vector<std::pair<std::size_t, int>> tasks;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].X0)
                for (int r = 0; r < spec.reps; ++r) tasks.emplace_back(i, r);

        parallel_for(tasks.size(), [&](std::size_t k) {
            auto& row = rows[tasks[k].first];
            const int rep = tasks[k].second;
            SimConfig cfg;
            cfg.N = row.N;
            cfg.T = spec.T;
            cfg.burn_in = burn_in;
            cfg.seed = spec.seed;
            cfg.replications = spec.reps;
            try {
                const InducedPolicy policy(rule, row.N, m.model.alpha);
                row.means[static_cast<std::size_t>(rep)] =
                    simulate_replication(m.model, policy, *row.X0, cfg, rep, nullptr, 0, nullptr);
            } catch (const std::exception& e) {
                row.errors[static_cast<std::size_t>(rep)] = e.what();
            }
        });

        Sink sink(spec.out_path, out);
        auto& os = sink.stream();
        os << "# " << metadata("sweep", spec, m, burn_in).dump() << "\n";
        os << "N,policy,mean_reward,std_error,gap_to_Ve,replications,status\n";
        for (auto& row : rows) {
            for (const auto& e : row.errors) {
                if (!e.empty() && row.status == "ok") {
                    row.status = "error: " + e;
                    err << "warning: N=" << row.N << ": " << e << "\n";
                }
            }
            os << row.N << "," << spec.policy << ",";
            if (row.status == "ok") {
                const double n = static_cast<double>(row.means.size());
                double mean = 0.0;
                for (double v : row.means) mean += v;
                mean /= n;
                double se = 0.0;
                if (row.means.size() > 1) {
                    double ss = 0.0;
                    for (double v : row.means) ss += (v - mean) * (v - mean);
                    se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
                }
                os << format_number(mean) << "," << format_number(se) << "," << format_number(sp.value - mean);
            } else {
                os << ",,";
            }
            os << "," << spec.reps << "," << csv_safe(row.status) << "\n";
        }
        return int{kExitOk};
    });
}

int cmd_trajectory(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (spec.N_list.size() != 1) throw InputError("trajectory needs exactly one value of --N");
        if (spec.T < 1) throw InputError("horizon T must be at least 1");
        if (spec.stride < 0) throw InputError("--stride must be nonnegative");
        const LoadedModel m = load(spec, err);
        const Vec x0 = require_x_init(m);
        const SteeringRule steering = steering_for(spec);
        const StationaryPoint sp = solve_refined_static(m.model, x0);
        const std::int64_t N = spec.N_list.front();
        budget_units(m.model.alpha, N);
        const GridPopulation X0 = to_grid(x0, N);
        const InducedPolicy policy(make_align_and_steer_rule(m.model, sp, steering), N, m.model.alpha);

        SimConfig cfg;
        cfg.N = N;
        cfg.T = spec.T;
        cfg.burn_in = 0;
        cfg.seed = spec.seed;
        cfg.replications = 1;
        const bool with_delta = spec.stride > 0;
        std::vector<TracePoint> trace;
        simulate_replication(m.model, policy, X0, cfg, 0, with_delta ? &sp : nullptr,
                             with_delta ? spec.stride : 1, &trace);

        Sink sink(spec.out_path, out);
        auto& os = sink.stream();
        os << "# " << metadata("trajectory", spec, m, 0).dump() << "\n";
        os << (with_delta ? "t,delta,reward\n" : "t,reward\n");
        for (const auto& p : trace) {
            os << p.t << ",";
            if (with_delta) os << format_number(*p.delta) << ",";
            os << format_number(p.reward) << "\n";
        }
        return int{kExitOk};
    });
}

}  // namespace rbsteer
