#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string scratch(const std::string& name) { return std::string(RBSTEER_SCRATCH) + "/cli_" + name; }

std::string model(const std::string& name) { return std::string(RBSTEER_MODELS) + "/" + name; }

RunResult run(const std::string& args) {
    static int counter = 0;
    const std::string tag = std::to_string(::getpid()) + "_" + std::to_string(counter++);
    const std::string out = scratch("stdout_" + tag), err = scratch("stderr_" + tag);
    const std::string cmd = std::string(RBSTEER_CLI) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    std::remove(out.c_str());
    std::remove(err.c_str());
    return r;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST(CliSolve, FourStateValue) {
    const RunResult r = run("solve --model " + model("four_state.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_NEAR(doc["value"].get<double>(), 1.0, 1e-7);
    for (const char* key : {"x_star", "u_star", "h0", "h1"}) EXPECT_EQ(doc[key].size(), 4u) << key;
}

TEST(CliSolve, IdentityKeepsInitialState) {
    const RunResult r = run("solve --model " + model("identity.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_NEAR(doc["x_star"][0].get<double>(), 0.3, 1e-7);
    EXPECT_NEAR(doc["x_star"][1].get<double>(), 0.7, 1e-7);
    EXPECT_NEAR(doc["value"].get<double>(), 0.8, 1e-7);

    const RunResult conv = run("solve --conventional --model " + model("identity.json"));
    ASSERT_EQ(conv.code, 0) << conv.err;
    EXPECT_NEAR(nlohmann::json::parse(conv.out)["value"].get<double>(), 1.0, 1e-7);

    const RunResult over = run("solve --model " + model("identity.json") + " --x-init 0.6,0.4");
    ASSERT_EQ(over.code, 0) << over.err;
    EXPECT_NEAR(nlohmann::json::parse(over.out)["x_star"][0].get<double>(), 0.6, 1e-7);
}

TEST(CliSolve, MissingInitialStateIsInputError) {
    const std::string path = scratch("no_init.json");
    write_file(path, R"({"num_states": 2, "alpha": 0.5, "P0": [[1,0],[0,1]], "P1": [[1,0],[0,1]],
                        "r0": [1,0], "r1": [0,1]})");
    const RunResult r = run("solve --model " + path);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("x_init required"), std::string::npos) << r.err;
    EXPECT_EQ(run("solve --conventional --model " + path).code, 0);
}

TEST(CliSolve, BadInputsExitTwo) {
    const std::string path = scratch("bad_row.json");
    write_file(path, R"({"num_states": 2, "alpha": 0.5, "P0": [[0.5,0.6],[0,1]], "P1": [[1,0],[0,1]],
                        "r0": [1,0], "r1": [0,1], "x_init": [0.5, 0.5]})");
    const RunResult r = run("solve --model " + path);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("non-stochastic row 0, sum 1.1"), std::string::npos) << r.err;
    EXPECT_EQ(run("solve --model /nonexistent.json").code, 2);
    EXPECT_EQ(run("solve").code, 2);
    EXPECT_EQ(run("frobnicate --model " + model("identity.json")).code, 2);
}

TEST(CliSolve, WritesOutputFile) {
    const std::string path = scratch("solve_out.json");
    std::remove(path.c_str());
    const RunResult r = run("solve --model " + model("four_state.json") + " --out " + path);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    EXPECT_NEAR(nlohmann::json::parse(slurp(path))["value"].get<double>(), 1.0, 1e-7);
}

TEST(CliAnalyze, ModelsFromTheCorpus) {
    const RunResult four = run("analyze --model " + model("four_state.json"));
    ASSERT_EQ(four.code, 0) << four.err;
    const auto a = nlohmann::json::parse(four.out);
    EXPECT_TRUE(a["chain"]["weakly_communicating"].get<bool>());
    ASSERT_FALSE(a["certificate"].is_null());
    EXPECT_GE(a["certificate"]["T0"].get<int>(), 1);

    const RunResult id = run("analyze --model " + model("identity.json"));
    ASSERT_EQ(id.code, 0) << id.err;
    const auto b = nlohmann::json::parse(id.out);
    EXPECT_FALSE(b["chain"]["weakly_communicating"].get<bool>());

    const RunResult cyc = run("analyze --model " + model("two_cycle.json"));
    ASSERT_EQ(cyc.code, 0) << cyc.err;
    const auto c = nlohmann::json::parse(cyc.out);
    EXPECT_EQ(c["chain"]["periods"], nlohmann::json::parse("[2,2]"));
    EXPECT_TRUE(c["certificate"].is_null());
    EXPECT_EQ(c["certificate_status"].get<std::string>(), "no certificate within cap");

    const RunResult capped = run("analyze --cap 1 --model " + model("four_state.json"));
    ASSERT_EQ(capped.code, 0);
    EXPECT_TRUE(nlohmann::json::parse(capped.out)["certificate"].is_null());
}

TEST(CliSweep, SchemaWarningsAndDeterminism) {
    const std::string args = "sweep --model " + model("four_state.json") + " --N 10,7,40 --T 300 --reps 3 --seed 5";
    const RunResult a = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_NE(a.err.find("alpha*N not integer"), std::string::npos);
    const auto rows = lines(a.out);
    ASSERT_EQ(rows.size(), 5u);
    ASSERT_EQ(rows[0].rfind("# ", 0), 0u);
    const auto meta = nlohmann::json::parse(rows[0].substr(2));
    EXPECT_EQ(meta["seed"].get<int>(), 5);
    EXPECT_EQ(meta["burn_in"].get<int>(), 75);
    EXPECT_EQ(meta["model_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);
    EXPECT_EQ(rows[1], "N,policy,mean_reward,std_error,gap_to_Ve,replications,status");

    const auto r10 = split(rows[2]);
    ASSERT_EQ(r10.size(), 7u);
    EXPECT_EQ(r10[0], "10");
    EXPECT_EQ(r10[1], "align-linear");
    EXPECT_EQ(r10[6], "ok");
    EXPECT_NEAR(std::stod(r10[2]) + std::stod(r10[4]), 1.0, 1e-8);

    const auto r7 = split(rows[3]);
    ASSERT_EQ(r7.size(), 7u);
    EXPECT_EQ(r7[0], "7");
    EXPECT_TRUE(r7[2].empty());
    EXPECT_NE(r7[6].find("alpha*N not integer"), std::string::npos);

    const RunResult b = run(args);
    EXPECT_EQ(a.out, b.out);
}

TEST(CliSweep, InvalidConfigurations) {
    EXPECT_EQ(run("sweep --model " + model("four_state.json") + " --N 10 --reps 0").code, 2);
    EXPECT_EQ(run("sweep --model " + model("four_state.json") + " --N 10 --T 100 --burn-in 100").code, 2);
    EXPECT_EQ(run("sweep --model " + model("four_state.json") + " --N 10 --policy whittle").code, 2);
    EXPECT_EQ(run("sweep --model " + model("four_state.json") + " --N ten").code, 2);
}

TEST(CliTrajectory, MpcRunRecordsDelta) {
    const RunResult r = run("trajectory --model " + model("four_state.json") +
                            " --policy align-mpc --tw 100 --N 1000 --T 200 --stride 5");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(r.out);
    ASSERT_EQ(rows.size(), 42u);
    EXPECT_EQ(rows[1], "t,delta,reward");
    const double tol = 2.0 * 4.0 / std::sqrt(1000.0);
    double running_max = 0.0;
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const auto cells = split(rows[i]);
        ASSERT_EQ(cells.size(), 3u);
        EXPECT_EQ(std::stoi(cells[0]), static_cast<int>(5 * (i - 2)));
        const double d = std::stod(cells[1]);
        EXPECT_GE(d, running_max - tol) << rows[i];
        running_max = std::max(running_max, d);
    }
}

TEST(CliTrajectory, AlignedStartAndRewardOnlyMode) {
    const RunResult aligned = run("trajectory --model " + model("four_state.json") +
                                  " --x-init 0.25,0.25,0.25,0.25 --N 100 --T 20 --stride 5");
    ASSERT_EQ(aligned.code, 0) << aligned.err;
    const auto rows = lines(aligned.out);
    ASSERT_GE(rows.size(), 3u);
    EXPECT_EQ(std::stod(split(rows[2])[1]), 1.0);

    const RunResult plain = run("trajectory --model " + model("four_state.json") + " --N 100 --T 20");
    ASSERT_EQ(plain.code, 0) << plain.err;
    const auto prow = lines(plain.out);
    ASSERT_EQ(prow.size(), 22u);
    EXPECT_EQ(prow[1], "t,reward");
    EXPECT_EQ(split(prow[2]).size(), 2u);

    EXPECT_EQ(run("trajectory --model " + model("four_state.json") + " --N 100,200 --T 20").code, 2);
    EXPECT_EQ(run("trajectory --model " + model("four_state.json") + " --N 7 --T 20").code, 2);
}
