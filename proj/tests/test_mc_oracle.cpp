#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "support.hpp"
#include "swipde/mc_oracle.hpp"
#include "swipde/random.hpp"

using namespace swipde;
using swipde::testing::problem;

namespace {

std::string deterministic(const std::string& drivers, const std::string& costs, const std::string& terminal,
                          std::size_t m = 2, const std::string& drift = "1") {
    return "[dims]\nm = " + std::to_string(m) + "\nk = 1\nd = 1\nl = 1\nT = 1\n[coeffs]\nb1 = " + drift +
           "\n[drivers]\n" + drivers + "[costs]\n" + costs + "[terminal]\n" + terminal +
           "[box]\nlower = -2\nupper = 2\n";
}

}  // namespace

TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::block({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, DeterministicAndSeparated) {
    RandomStream a(7, 3), b(7, 3), c(7, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u32();
        EXPECT_EQ(va, b.next_u32());
        differs = differs || va != c.next_u32();
    }
    EXPECT_TRUE(differs);
}

TEST(RandomStream, Distributions) {
    RandomStream r(11, 0);
    const int n = 200000;
    double s = 0, s2 = 0, e = 0, u_min = 1, u_max = 0;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        s += z;
        s2 += z * z;
        e += r.exponential(2.0);
        double u = r.uniform();
        u_min = std::min(u_min, u);
        u_max = std::max(u_max, u);
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
    EXPECT_NEAR(e / n, 0.5, 0.005);
    EXPECT_GE(u_min, 0.0);
    EXPECT_LT(u_max, 1.0);
    std::vector<double> w{1.0, 3.0};
    int hits = 0;
    for (int i = 0; i < 40000; ++i) hits += r.categorical(w, 4.0) == 1;
    EXPECT_NEAR(hits / 40000.0, 0.75, 0.01);
}

TEST(Paths, DriftOnly) {
    auto p = problem(deterministic("f1 = 0\n", "g_default = 1\n", "h1 = 0\nh2 = 0\n"));
    std::vector<double> x{0.25};
    auto ps = simulate_paths(p, 0.0, x, 3, 10, 1);
    for (std::size_t path = 0; path < 3; ++path) EXPECT_NEAR(ps.state(path, 10)[0], 1.25, 1e-12);
    EXPECT_EQ(ps.times.back(), 1.0);
    EXPECT_THROW(simulate_paths(p, 1.0, x, 3, 10, 1), std::invalid_argument);
}

TEST(Paths, ReproducibleAcrossRuns) {
    auto p = problem(
        "[dims]\nm = 2\nk = 1\nd = 1\nl = 1\nT = 1\n[levy]\n0.5 1\n[coeffs]\nsigma11 = 1\nbeta1 = e1\n"
        "[costs]\ng_default = 1\n[terminal]\nh1 = 0\nh2 = 0\n[box]\nlower = -1\nupper = 1\n");
    std::vector<double> x{0.0};
    auto a = simulate_paths(p, 0.0, x, 50, 20, 9), b = simulate_paths(p, 0.0, x, 50, 20, 9);
    EXPECT_EQ(a.states, b.states);
    // the first 20 paths do not depend on how many paths are drawn
    auto c = simulate_paths(p, 0.0, x, 20, 20, 9);
    EXPECT_TRUE(std::equal(c.states.begin(), c.states.end(), a.states.begin()));
    auto m = moment_check(a, 2);
    EXPECT_GT(m.fitted_c, 0.0);
}

TEST(Strategy, PayoffByHand) {
    auto p = problem(deterministic("f1 = 1\nf2 = 3\n", "g12 = 0.5\ng21 = 0.25\n", "h1 = x1\nh2 = 2*x1\n"));
    std::vector<double> x{0.0};
    auto ps = simulate_paths(p, 0.0, x, 1, 4, 0);
    // on-grid switch at t = 0.5: mode 1 on [0, 0.5), mode 2 on [0.5, 1)
    Strategy s{0, {{0.5, 1}}};
    EXPECT_NEAR(strategy_payoff(p, ps, s)[0], 0.5 * 1 + 0.5 * 3 - 0.5 + 2.0, 1e-12);
    // off-grid switch at 0.6 is charged at t=0.5 state and applies from t = 0.75
    Strategy off{0, {{0.6, 1}}};
    EXPECT_NEAR(strategy_payoff(p, ps, off)[0], 0.75 * 1 + 0.25 * 3 - 0.5 + 2.0, 1e-12);
    // a switch at T only changes the terminal payoff
    Strategy late{1, {{1.0, 0}}};
    EXPECT_NEAR(strategy_payoff(p, ps, late)[0], 3.0 - 0.25 + 1.0, 1e-12);
    Strategy bad{0, {{0.5, 0}}};
    EXPECT_THROW(strategy_payoff(p, ps, bad), std::invalid_argument);
}

TEST(Oracle, DpEqualsEnumeration) {
    const char* instances[][3] = {
        {"f1 = x1\nf2 = -x1\n", "g12 = 0.1\ng21 = 0.1\n", "h1 = 0\nh2 = 0\n"},
        {"f1 = 1\nf2 = 2*t\n", "g12 = 0.2\ng21 = 0.3\n", "h1 = 0\nh2 = 0.1\n"},
        {"f1 = sin(3*x1)\nf2 = cos(2*x1)\n", "g_default = 0.05\n", "h1 = x1\nh2 = -x1\n"},
    };
    for (auto& inst : instances) {
        auto p = problem(deterministic(inst[0], inst[1], inst[2], 2, "-1.5"));
        std::vector<double> x{0.4};
        auto dp = dp_switching_value_deterministic(p, 0.0, x, 8);
        auto en = enumerate_strategies_value(p, 0.0, x, 8, 2);
        for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(dp.values[i], en[i], 1e-12) << inst[0];
    }
}

TEST(Oracle, RequiresStateOnlyDriversAndZeroNoise) {
    auto p = problem(deterministic("f1 = q\nf2 = 0\n", "g_default = 1\n", "h1 = 0\nh2 = 0\n"));
    std::vector<double> x{0.0};
    EXPECT_THROW(dp_switching_value_deterministic(p, 0.0, x, 4), OracleError);
    auto noisy = problem(
        "[dims]\nm = 2\nk = 1\nd = 1\nl = 1\nT = 1\n[coeffs]\nsigma11 = 1\n[costs]\ng_default = 1\n"
        "[terminal]\nh1 = 0\nh2 = 0\n[box]\nlower = -1\nupper = 1\n");
    EXPECT_THROW(dp_switching_value_deterministic(noisy, 0.0, x, 4), OracleError);
    auto big = problem(deterministic("f1 = 0\n", "g_default = 1\n", "h1 = 0\nh2 = 0\n"));
    EXPECT_THROW(enumerate_strategies_value(big, 0.0, x, 200, 6), OracleError);
}

TEST(Oracle, RegressionOnDeterministicPathsIsExact) {
    auto p = problem(deterministic("f1 = x1\nf2 = -x1\n", "g12 = 0.1\ng21 = 0.1\n", "h1 = 0\nh2 = 0\n"));
    std::vector<double> x{0.4};
    auto dp = dp_switching_value_deterministic(p, 0.0, x, 10);
    auto ps = simulate_paths(p, 0.0, x, 40, 10, 3);
    auto reg = regression_switching_value(p, ps);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(reg.values[i], dp.values[i]);
        EXPECT_LT(reg.standard_error[i], 1e-12);
    }
}

TEST(Oracle, RegressionStoppingProblem) {
    // max(X_T, 0) versus stopping early has value E[max(X_T, 0)] with X_T ~ N(0, 1): 1/sqrt(2 pi)
    auto p = problem(
        "[dims]\nm = 2\nk = 1\nd = 1\nl = 1\nT = 1\n[coeffs]\nsigma11 = 1\n[costs]\ng12 = 0\ng21 = 1e6\n"
        "[terminal]\nh1 = 0\nh2 = x1\n[box]\nlower = -3\nupper = 3\n");
    std::vector<double> x{0.0};
    auto ps = simulate_paths(p, 0.0, x, 20000, 20, 5);
    RegressionOptions opt;
    opt.bootstrap = 20;
    auto reg = regression_switching_value(p, ps, opt);
    EXPECT_NEAR(reg.values[1], 0.0, 4.0 * reg.standard_error[1] + 0.01);
    EXPECT_NEAR(reg.values[0], 1.0 / std::sqrt(2.0 * M_PI), 4.0 * reg.standard_error[0] + 0.02);
    EXPECT_GT(reg.standard_error[0], 0.0);
}
