// Command-line front end: solve, analyze, sweep, trajectory.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rbsteer/experiments.hpp"

namespace {

std::vector<std::int64_t> parse_n_list(const std::string& text) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoll(item));
    }
    return out;
}

rbsteer::Vec parse_vector(const std::string& text) {
    rbsteer::Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Align-and-steer policies for restless bandits"};
    app.require_subcommand(1);

    rbsteer::ExperimentSpec spec;
    std::string n_list;
    std::string x_init;
    int burn_in = -1;
    int cap = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--model", spec.model_path, "Model JSON file")->required();
        sub->add_option("--x-init", x_init, "Initial state, comma separated (overrides the model file)");
        sub->add_option("--out", spec.out_path, "Output file (default: stdout)");
    };
    auto add_sim = [&](CLI::App* sub) {
        sub->add_option("--policy", spec.policy, "align-linear or align-mpc")->capture_default_str();
        sub->add_option("--tw", spec.window, "MPC look-ahead window")->capture_default_str();
        sub->add_option("--N", n_list, "Arm counts, comma separated")->required();
        sub->add_option("--T", spec.T, "Simulation horizon")->capture_default_str();
        sub->add_option("--seed", spec.seed, "Root seed")->capture_default_str();
    };

    auto* solve = app.add_subcommand("solve", "Solve the static problem and print the stationary point");
    add_common(solve);
    solve->add_flag("--conventional", spec.conventional, "Use the conventional static problem");

    auto* analyze = app.add_subcommand("analyze", "Chain structure and reachability certificate");
    add_common(analyze);
    analyze->add_flag("--conventional", spec.conventional, "Certificate for the conventional stationary point");
    analyze->add_option("--cap", cap, "Largest T0 to try (default 4 S^2)");

    auto* sweep = app.add_subcommand("sweep", "Simulate the induced policy for several N");
    add_common(sweep);
    add_sim(sweep);
    sweep->add_option("--burn-in", burn_in, "Discarded steps (default T/4)");
    sweep->add_option("--reps", spec.reps, "Replications per N")->capture_default_str();

    auto* trajectory = app.add_subcommand("trajectory", "Record delta(X(t)) and reward along one run");
    add_common(trajectory);
    add_sim(trajectory);
    trajectory->add_option("--stride", spec.stride, "Recording stride (0: reward every step, no delta)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rbsteer::kExitInput;
    }

    try {
        if (!n_list.empty()) spec.N_list = parse_n_list(n_list);
        if (!x_init.empty()) spec.x_init = parse_vector(x_init);
    } catch (const std::exception&) {
        std::cerr << "error: could not parse a numeric list argument\n";
        return rbsteer::kExitInput;
    }
    if (burn_in >= 0) spec.burn_in = burn_in;
    if (cap > 0) spec.cap = cap;

    if (solve->parsed()) return rbsteer::cmd_solve(spec, std::cout, std::cerr);
    if (analyze->parsed()) return rbsteer::cmd_analyze(spec, std::cout, std::cerr);
    if (sweep->parsed()) return rbsteer::cmd_sweep(spec, std::cout, std::cerr);
    return rbsteer::cmd_trajectory(spec, std::cout, std::cerr);
}
