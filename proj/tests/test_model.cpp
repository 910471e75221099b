#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "rbsteer/model.hpp"

using namespace rbsteer;
using namespace rbsteer::testing;

namespace {

std::string error_of(const RawModel& raw) {
    try {
        validate_model(raw);
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

RawModel small_raw() {
    RawModel raw;
    raw.num_states = 2;
    raw.P0 = {{1.0, 0.0}, {0.0, 1.0}};
    raw.P1 = raw.P0;
    raw.r0 = {1.0, 0.0};
    raw.r1 = {0.0, 1.0};
    raw.alpha = 0.5;
    return raw;
}

}  // namespace

TEST(ValidateModel, AcceptsIdentityAndFourState) {
    const ArmModel id = identity_model();
    EXPECT_EQ(id.num_states, 2u);
    const ArmModel four = four_state_model();
    EXPECT_EQ(four.num_states, 4u);
    EXPECT_DOUBLE_EQ(four.alpha, 0.5);
}

TEST(ValidateModel, ReportsNonStochasticRow) {
    RawModel raw = small_raw();
    raw.P0[0] = {0.5, 0.6};
    const std::string msg = error_of(raw);
    EXPECT_NE(msg.find("non-stochastic row 0, sum 1.1"), std::string::npos) << msg;
}

TEST(ValidateModel, RejectsAlphaOutsideOpenInterval) {
    for (double a : {0.0, 1.0, -0.2, 1.5}) {
        RawModel raw = small_raw();
        raw.alpha = a;
        EXPECT_NE(error_of(raw).find("alpha"), std::string::npos) << a;
    }
}

TEST(ValidateModel, RejectsDimensionMismatch) {
    RawModel raw = small_raw();
    raw.r1 = {0.0, 1.0, 2.0};
    EXPECT_FALSE(error_of(raw).empty());
    raw = small_raw();
    raw.P1 = {{1.0, 0.0}};
    EXPECT_FALSE(error_of(raw).empty());
    raw = small_raw();
    raw.P0[1] = {1.0};
    EXPECT_FALSE(error_of(raw).empty());
}

TEST(ValidateModel, RejectsNegativeEntryAndNonFiniteReward) {
    RawModel raw = small_raw();
    raw.P0[0] = {1.5, -0.5};
    EXPECT_FALSE(error_of(raw).empty());
    raw = small_raw();
    raw.r0[0] = std::nan("");
    EXPECT_FALSE(error_of(raw).empty());
}

TEST(ModelFile, ParsesAndWarnsOnUnknownKeys) {
    const std::string text = R"({"num_states": 2, "alpha": 0.5,
        "P0": [[1,0],[0,1]], "P1": [[1,0],[0,1]], "r0": [1,0], "r1": [0,1],
        "x_init": [0.3, 0.7], "comment": "hi"})";
    const ModelFile mf = parse_model_json(text);
    ASSERT_TRUE(mf.x_init);
    EXPECT_DOUBLE_EQ((*mf.x_init)[0], 0.3);
    ASSERT_EQ(mf.warnings.size(), 1u);
    EXPECT_NE(mf.warnings[0].find("comment"), std::string::npos);
}

TEST(ModelFile, MissingKeyAndBadJsonAreInputErrors) {
    EXPECT_THROW(parse_model_json(R"({"num_states": 2})"), InputError);
    EXPECT_THROW(parse_model_json("{not json"), InputError);
    EXPECT_THROW(parse_model_json(R"({"num_states": 2, "alpha": 0.5, "P0": [[1,0],[0,1]],
        "P1": [[1,0],[0,1]], "r0": [1,0], "r1": [0,1], "x_init": [0.5, 0.6]})"),
                 InputError);
    EXPECT_THROW(load_model_file("/nonexistent/model.json"), InputError);
}

TEST(Population, ClampsInsideToleranceAndRejectsOutside) {
    const Vec x = make_population({0.5 + 1e-10, 0.5, -1e-13});
    EXPECT_GE(x[2], 0.0);
    EXPECT_TRUE(on_simplex(x));
    EXPECT_THROW(make_population({0.6, 0.6}), InputError);
    EXPECT_THROW(make_population({1.1, -0.1}), InputError);
}

TEST(CheckFeasible, Examples) {
    EXPECT_TRUE(check_feasible(Vec{0.5, 0.5}, Vec{0.25, 0.25}, 0.5));
    EXPECT_FALSE(check_feasible(Vec{0.4, 0.0, 0.6, 0.0}, Vec{0.3, 0.2, 0.0, 0.0}, 0.5));
    EXPECT_FALSE(check_feasible(Vec{1.0, 0.0}, Vec{0.4, 0.0}, 0.5));
    EXPECT_FALSE(check_feasible(Vec{1.0, 0.0}, Vec{0.5, -1e-6}, 0.5));
}

TEST(Phi, IdentityModelFixesEveryPoint) {
    const ArmModel m = identity_model();
    const Vec x{0.3, 0.7};
    const Vec u{0.0, 0.5};
    const Vec next = phi(m, x, u);
    EXPECT_NEAR(next[0], 0.3, 1e-15);
    EXPECT_NEAR(next[1], 0.7, 1e-15);
}

TEST(Phi, FourStateStationaryPointAndHandProduct) {
    const ArmModel m = four_state_model();
    const Vec fixed = phi(m, kFourStateXStar, kFourStateUStar);
    for (double v : fixed) EXPECT_NEAR(v, 0.25, 1e-12);

    const Vec u{0.2, 0.0, 0.3, 0.0};
    const Vec got = phi(m, kFourStateInit, u);
    // (x - u) = (0.2, 0, 0.3, 0) passive, u active:
    // 0.2*(1,0,0,0) + 0.3*(0,0,.9,.1) + 0.2*(.9,.1,0,0) + 0.3*(0,0,1,0)
    const Vec hand{0.38, 0.02, 0.57, 0.03};
    const Vec oracle = naive_phi(m, kFourStateInit, u);
    for (std::size_t s = 0; s < 4; ++s) {
        EXPECT_NEAR(got[s], hand[s], 1e-12);
        EXPECT_NEAR(got[s], oracle[s], 1e-12);
    }
}

TEST(Phi, RejectsInfeasiblePair) {
    const ArmModel m = four_state_model();
    EXPECT_THROW(phi(m, kFourStateInit, Vec{0.3, 0.2, 0.0, 0.0}), InputError);
    EXPECT_THROW(reward(m, kFourStateInit, Vec{0.3, 0.2, 0.0, 0.0}), InputError);
}

TEST(Reward, Examples) {
    EXPECT_NEAR(reward(four_state_model(), kFourStateXStar, kFourStateUStar), 1.0, 1e-15);
    EXPECT_NEAR(reward(identity_model(), Vec{0.3, 0.7}, Vec{0.0, 0.5}), 0.8, 1e-15);

    RawModel raw = small_raw();
    raw.r0 = {0.0, 0.0};
    raw.r1 = {0.0, 0.0};
    EXPECT_EQ(reward(validate_model(raw), Vec{0.3, 0.7}, Vec{0.1, 0.4}), 0.0);
}

TEST(ModelProperties, PhiPreservesSimplexAndIsLinear) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t S = 2 + gen() % 5;
        const ArmModel m = random_model(gen, S, 0.3, trial % 2 == 0);
        const Vec x1 = random_simplex_point(gen, S);
        const Vec x2 = random_simplex_point(gen, S);
        const Vec u1 = linear_like(x1, m.alpha);
        const Vec u2 = linear_like(x2, m.alpha);
        EXPECT_TRUE(check_feasible(x1, u1, m.alpha));

        const Vec y = phi(m, x1, u1);
        double total = 0.0;
        for (double v : y) {
            EXPECT_GE(v, -1e-12);
            total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);

        const double lam = unif(gen);
        Vec xm(S), um(S);
        for (std::size_t s = 0; s < S; ++s) {
            xm[s] = lam * x1[s] + (1 - lam) * x2[s];
            um[s] = lam * u1[s] + (1 - lam) * u2[s];
        }
        const Vec ym = phi(m, xm, um);
        const Vec y2 = phi(m, x2, u2);
        for (std::size_t s = 0; s < S; ++s) EXPECT_NEAR(ym[s], lam * y[s] + (1 - lam) * y2[s], 1e-9);
        EXPECT_NEAR(reward(m, xm, um), lam * reward(m, x1, u1) + (1 - lam) * reward(m, x2, u2), 1e-9);
    }
}

TEST(RepairControl, AbsorbsRoundOffOnly) {
    const Vec x{0.5, 0.5};
    const Vec fixed = repair_control(x, Vec{0.25 + 1e-10, 0.25 - 3e-10}, 0.5);
    EXPECT_TRUE(check_feasible(x, fixed, 0.5));
    const Vec clamped = repair_control(Vec{0.2, 0.8}, Vec{0.2 + 1e-9, 0.3 - 1e-9}, 0.5);
    EXPECT_LE(clamped[0], 0.2);
    EXPECT_TRUE(check_feasible(Vec{0.2, 0.8}, clamped, 0.5));
    EXPECT_THROW(repair_control(x, Vec{0.1, 0.1}, 0.5), NumericalError);
}
