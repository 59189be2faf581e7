#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "support.hpp"
#include "swipde/validate.hpp"

using namespace swipde;
using swipde::testing::one_dim;
using swipde::testing::problem;

namespace {

std::string costs2(const std::string& g12, const std::string& g21) {
    return "[costs]\ng12 = " + g12 + "\ng21 = " + g21 + "\n";
}

std::vector<SamplePoint> cloud(const SwitchingProblem& p) { return sample_cloud(p, 5, 16, 3); }

std::vector<std::vector<double>> xs_of(const std::vector<SamplePoint>& s) {
    std::vector<std::vector<double>> out;
    for (const auto& pt : s) out.push_back(pt.x);
    return out;
}

}  // namespace

TEST(Problem, BroadcastSingleEntry) {
    ProblemDefinition def;
    def.driver = {"1 + x1"};
    def.terminal = {"0"};
    def.default_cost = "1";
    SwitchingProblem p(def);
    std::vector<double> x{0.5}, y{0.0, 0.0}, z{0.0};
    EXPECT_EQ(p.driver(1, 0.0, x, y, z, 0.0), 1.5);
}

TEST(Problem, FileDefaults) {
    auto p = problem(one_dim("[drivers]\nf1 = 2\n[costs]\ng_default = 1\n[terminal]\nh1 = x1\nh2 = -x1\n"));
    EXPECT_EQ(p.modes(), 2u);
    std::vector<double> x{0.5}, y{0.0, 0.0}, z{0.0};
    EXPECT_EQ(p.driver(0, 0.0, x, y, z, 0.0), 2.0);
    EXPECT_EQ(p.driver(1, 0.0, x, y, z, 0.0), 0.0);  // unlisted drivers are zero
    EXPECT_EQ(p.cost(0, 1, 0.0, x), 1.0);
    EXPECT_EQ(p.cost(1, 1, 0.0, x), 0.0);
    EXPECT_EQ(p.terminal(1, x), -0.5);
    EXPECT_TRUE(p.diffusion_identically_zero());
    EXPECT_TRUE(p.jump_identically_zero());
    EXPECT_TRUE(p.drivers_state_only());
}

TEST(Problem, RejectsBadDefinitions) {
    ProblemDefinition def;
    def.terminal = {"0"};
    def.costs[{0, 1}] = "1";
    EXPECT_THROW(SwitchingProblem{def}, ProblemError);  // g21 missing, no default
    def.default_cost = "1";
    EXPECT_NO_THROW(SwitchingProblem{def});
    def.costs[{0, 0}] = "1";
    EXPECT_THROW(SwitchingProblem{def}, ProblemError);
    def.costs.erase({0, 0});
    def.modes = 1;
    EXPECT_THROW(SwitchingProblem{def}, ProblemError);
    def.modes = 2;
    def.terminal = {"y1"};
    EXPECT_THROW(SwitchingProblem{def}, ProblemError);
}

TEST(Validators, CycleCounts) {
    EXPECT_EQ(enumerate_simple_cycles(2).size(), 1u);
    EXPECT_EQ(enumerate_simple_cycles(3).size(), 5u);
    // sum over r of C(4, r) (r-1)!: 6 + 8 + 6
    EXPECT_EQ(enumerate_simple_cycles(4).size(), 20u);
}

TEST(Validators, NoFreeLoopPass) {
    auto p = problem(one_dim(costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto rep = check_no_free_loop(p, cloud(p));
    EXPECT_EQ(rep.status("H2.no_free_loop"), CheckStatus::Pass);
    EXPECT_EQ(rep.status("H2.nonnegative"), CheckStatus::Pass);
}

TEST(Validators, NoFreeLoopZeroCycle) {
    auto p = problem(one_dim(costs2("0", "0") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto rep = check_no_free_loop(p, cloud(p));
    ASSERT_EQ(rep.status("H2.no_free_loop"), CheckStatus::Fail);
    const auto* c = rep.find("H2.no_free_loop");
    ASSERT_FALSE(c->witnesses.empty());
    EXPECT_EQ(c->witnesses[0].modes, (std::vector<std::size_t>{0, 1, 0}));
    EXPECT_NE(rep.to_text().find("modes=(1,2,1)"), std::string::npos);
}

TEST(Validators, NoFreeLoopThreeCycle) {
    auto p = problem(one_dim(
        "[costs]\ng12 = 1\ng23 = 1\ng31 = -2\ng13 = 10\ng32 = 10\ng21 = 10\n[terminal]\nh1 = 0\nh2 = 0\nh3 = 0\n", 3));
    auto rep = check_no_free_loop(p, cloud(p));
    EXPECT_EQ(rep.status("H2.nonnegative"), CheckStatus::Fail);
    ASSERT_EQ(rep.status("H2.no_free_loop"), CheckStatus::Fail);
    bool found = false;
    for (const auto& w : rep.find("H2.no_free_loop")->witnesses)
        found = found || w.modes == std::vector<std::size_t>{0, 1, 2, 0};
    EXPECT_TRUE(found);
}

TEST(Validators, WitnessReproduces) {
    auto p = problem(one_dim(costs2("x1", "-x1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto rep = check_no_free_loop(p, cloud(p));
    ASSERT_EQ(rep.status("H2.no_free_loop"), CheckStatus::Fail);
    const auto& w = rep.find("H2.no_free_loop")->witnesses[0];
    double sum = p.cost(0, 1, w.point.t, w.point.x) + p.cost(1, 0, w.point.t, w.point.x);
    EXPECT_FALSE(sum > 0.0);
}

TEST(Validators, Consistency) {
    auto pass1 = problem(one_dim(costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    EXPECT_EQ(check_consistency(pass1, xs_of(cloud(pass1))).status("H3.consistency"), CheckStatus::Pass);

    auto fail = problem(one_dim(costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 5\n"));
    auto rep = check_consistency(fail, xs_of(cloud(fail)));
    ASSERT_EQ(rep.status("H3.consistency"), CheckStatus::Fail);
    EXPECT_EQ(rep.find("H3.consistency")->witnesses[0].modes[0], 0u);

    auto pass2 = problem(one_dim(costs2("6", "1") + "[terminal]\nh1 = 0\nh2 = 5\n"));
    EXPECT_EQ(check_consistency(pass2, xs_of(cloud(pass2))).status("H3.consistency"), CheckStatus::Pass);
}

TEST(Validators, Lipschitz) {
    auto zero = problem(one_dim(costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    EXPECT_EQ(estimate_lipschitz(zero, 64, 1), 0.0);

    auto lin = problem(one_dim("[drivers]\nf1 = 2*y1\nf2 = 0\n" + costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    EXPECT_NEAR(estimate_lipschitz(lin, 64, 1), 2.0, 1e-12);

    auto s = problem(one_dim("[drivers]\nf1 = sin(q)\nf2 = 0\n" + costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    double c = estimate_lipschitz(s, 512, 1);
    EXPECT_GT(c, 0.9);
    EXPECT_LE(c, 1.0);
}

TEST(Validators, GrowthAndJumpBounds) {
    auto none = problem(one_dim(costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto r0 = check_growth_and_jump_bounds(none, cloud(none));
    EXPECT_TRUE(r0.passed());
    EXPECT_EQ(r0.constants.at("beta_c"), 0.0);
    EXPECT_EQ(r0.constants.at("gamma_C"), 0.0);

    auto beta = problem(one_dim("[levy]\n0.5 1\n-1 0.5\n[coeffs]\nbeta1 = e1\n" + costs2("1", "1") +
                                "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto r1 = check_growth_and_jump_bounds(beta, cloud(beta));
    EXPECT_EQ(r1.status("jump.beta_bound"), CheckStatus::Pass);
    EXPECT_DOUBLE_EQ(r1.constants.at("beta_c"), 1.0);

    auto gam = problem(one_dim("[levy]\n0.5 1\n[coeffs]\ngamma1 = x1\ngamma2 = 0\n" + costs2("1", "1") +
                               "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto r2 = check_growth_and_jump_bounds(gam, cloud(gam));
    EXPECT_EQ(r2.status("jump.gamma_bound.1"), CheckStatus::Fail);
    EXPECT_FALSE(r2.find("jump.gamma_bound.1")->witnesses.empty());
}

TEST(Validators, MonotoneCase) {
    auto ok = problem(one_dim(costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto r0 = check_monotone_case(ok, cloud(ok));
    EXPECT_TRUE(monotone_case_holds(r0));

    auto neg = problem(one_dim("[levy]\n0.5 1\n[coeffs]\ngamma1 = -1\ngamma2 = 0\n" + costs2("1", "1") +
                               "[terminal]\nh1 = 0\nh2 = 0\n"));
    EXPECT_EQ(check_monotone_case(neg, cloud(neg)).status("H4.gamma_nonnegative"), CheckStatus::Fail);

    auto dec = problem(one_dim("[drivers]\nf1 = -q\nf2 = 0\n" + costs2("1", "1") + "[terminal]\nh1 = 0\nh2 = 0\n"));
    auto r2 = check_monotone_case(dec, cloud(dec));
    ASSERT_EQ(r2.status("H4.monotone_q"), CheckStatus::Fail);
    EXPECT_FALSE(r2.find("H4.monotone_q")->witnesses.empty());
    EXPECT_FALSE(monotone_case_holds(r2));
}

TEST(Validators, FullReportDeterministic) {
    auto p = problem(one_dim("[drivers]\nf1 = sin(q) + y2\nf2 = 1\n" + costs2("1", "2") +
                             "[terminal]\nh1 = x1^2\nh2 = 0\n"));
    auto a = validate_problem(p), b = validate_problem(p);
    EXPECT_EQ(a.to_text(), b.to_text());
    EXPECT_EQ(a.status("H1.continuity"), CheckStatus::Unchecked);
    for (const auto& c : a.checks)
        if (c.status == CheckStatus::Fail) EXPECT_FALSE(c.witnesses.empty()) << c.id;
}
