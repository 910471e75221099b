#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbsteer/model.hpp"

namespace rbsteer {

/// Parameters shared by the CLI subcommands.
struct ExperimentSpec {
    std::string model_path;
    std::optional<Vec> x_init;  ///< overrides the model file's x_init
    std::string policy = "align-linear";
    int window = 100;
    std::vector<std::int64_t> N_list;
    int T = 10000;
    std::optional<int> burn_in;  ///< defaults to T / 4
    std::uint64_t seed = 0;
    int reps = 5;
    int stride = 0;
    std::string out_path;  ///< empty: write to the given stream
    bool conventional = false;
    std::optional<int> cap;  ///< certificate search cap, default 4 S^2
};

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitNumerical = 3 };

/// Each command writes its result to spec.out_path (or `out`), messages to
/// `err`, and returns the process exit code.
int cmd_solve(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);
int cmd_analyze(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);
int cmd_sweep(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);
int cmd_trajectory(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

/// "%.9g" formatting used for every number in CSV output.
std::string format_number(double v);

/// 64-bit FNV-1a hash, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace rbsteer
