#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "swipde/problem_io.hpp"
#include "swipde/run.hpp"

using namespace swipde;
namespace fs = std::filesystem;

namespace {

const std::string kProblems = std::string(SWIPDE_SOURCE_DIR) + "/problems/";

const char* kMinimal =
    "[dims]\nm = 2\nk = 1\n[costs]\ng12 = 1\ng21 = 1\n[terminal]\nh1 = x1\nh2 = 0\n[box]\nlower = -1\nupper = 1\n";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("swipde_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::size_t error_line(const std::string& text) {
    try {
        problem_from_text(text);
    } catch (const ProblemFileError& e) {
        return e.line();
    }
    return std::numeric_limits<std::size_t>::max();
}

int run_cli(const std::string& args, const std::string& env = "") {
    std::string cmd = env + " " + std::string(SWIPDE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(LoadProblem, MinimalFile) {
    auto p = problem_from_text(kMinimal);
    EXPECT_EQ(p.modes(), 2u);
    EXPECT_EQ(p.state_dim(), 1u);
    auto q = load_problem(kProblems + "coupled_jump.txt");
    EXPECT_EQ(q.levy().size(), 1u);
    EXPECT_FALSE(q.drivers_state_only());
}

TEST(LoadProblem, DiagonalCostRejected) {
    std::string text = std::string(kMinimal) + "";
    text.replace(text.find("g21 = 1"), 7, "g11 = 1");
    EXPECT_EQ(error_line(text), 6u);
    std::string zero = std::string(kMinimal);
    zero.replace(zero.find("[terminal]"), 0, "g22 = 0\n");
    EXPECT_NO_THROW(problem_from_text(zero));
}

TEST(LoadProblem, MissingSectionNamed) {
    std::string text = "[dims]\nm = 2\nk = 1\n[costs]\ng_default = 1\n[box]\nlower = -1\nupper = 1\n";
    try {
        problem_from_text(text);
        FAIL() << "expected an error";
    } catch (const ProblemFileError& e) {
        EXPECT_NE(std::string(e.what()).find("[terminal]"), std::string::npos);
    }
}

TEST(LoadProblem, ErrorsCarryLineNumbers) {
    std::string base(kMinimal);
    const std::string tail = "[terminal]\nh1 = 0\nh2 = 0\n[box]\nlower = 0\nupper = 1\n";
    EXPECT_EQ(error_line("[dims]\nm = 2\nk = 1\nfoo = 3\n" + tail), 4u);
    EXPECT_EQ(error_line("[dims]\nm = 2\nk = 1\n[coeffs]\nb1 = x1 +\n" + tail), 5u);
    EXPECT_EQ(error_line("[dims]\nm = 2\nk = 1\n[terminal]\nh1 = q\nh2 = 0\n[box]\nlower = 0\nupper = 1\n"), 5u);
    EXPECT_EQ(error_line("[dims]\nm = 2\nk = 1\nl = 1\n[levy]\n0.5\n" + tail), 6u);
    EXPECT_EQ(error_line("[dims]\nm = 2\nk = 1\n[box]\nlower = 0 1\nupper = 1\n[terminal]\nh1 = 0\nh2 = 0\n"), 5u);
    EXPECT_EQ(error_line("[dims]\nm = 2\nk = 1\n[wat]\n"), 4u);
    EXPECT_EQ(error_line("m = 2\n"), 1u);
    // missing g21 with no default: reported without a line
    std::string partial = base;
    partial.replace(partial.find("g21 = 1\n"), 8, "");
    EXPECT_EQ(error_line(partial), 0u);
}

TEST(LoadProblem, TextRoundTrip) {
    auto p = load_problem(kProblems + "three_modes.txt");
    auto q = problem_from_text(problem_to_text(p));
    EXPECT_EQ(problem_to_text(p), problem_to_text(q));
    std::vector<double> x{0.3};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(p.cost(i, j, 0.5, x), q.cost(i, j, 0.5, x));
    EXPECT_THROW(load_problem(kProblems + "does_not_exist.txt"), ProblemFileError);
}

TEST(Csv, ShortestRoundTrip) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        double v = u(rng) / (1 + i);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
}

TEST(Run, SolveClosedForm) {
    RunConfig cfg;
    cfg.command = Command::Solve;
    cfg.problem_path = kProblems + "closed_form.txt";
    cfg.grid_nx = 11;
    cfg.nt = 20;
    cfg.out_dir = scratch("solve").string();
    auto out = run(cfg);
    EXPECT_EQ(out.exit_code, 0);
    auto rows = read_csv_rows(fs::path(cfg.out_dir) / "value_mode1.csv");
    ASSERT_EQ(rows.size(), 21u * 11u);
    for (const auto& r : rows) EXPECT_NEAR(r[2], 2.0 * (1.0 - r[0]), 1e-12);
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "reflection_mode2.csv"));
    std::string report = slurp(fs::path(cfg.out_dir) / "run_report.txt");
    for (const char* key : {"solve.iterations: ", "solve.D_n: ", "solve.eta: ", "solve.C_hat: ", "solve.cfl: ",
                            "solve.clamp_count: ", "config.grid_nx: 11", "config.nt: 20", "solve.status: converged"})
        EXPECT_NE(report.find(key), std::string::npos) << key;
}

TEST(Run, CsvReloadIsBitExact) {
    RunConfig cfg;
    cfg.command = Command::Solve;
    cfg.problem_path = kProblems + "coupled_jump.txt";
    cfg.grid_nx = 11;
    cfg.nt = 40;
    cfg.out_dir = scratch("reload").string();
    ASSERT_EQ(run(cfg).exit_code, 0);
    auto p = load_problem(cfg.problem_path);
    Grid grid(p.box_lower(), p.box_upper(), {11}, 40, 1.0);
    PicardOptions po;
    auto direct = picard_solve(p, grid, po);
    auto rows = read_csv_rows(fs::path(cfg.out_dir) / "value_mode2.csv");
    for (std::size_t r = 0; r < rows.size(); ++r) EXPECT_EQ(rows[r][2], direct.values.at(1, r / 11, r % 11));
}

TEST(Run, ValidateFreeLoop) {
    RunConfig cfg;
    cfg.command = Command::Validate;
    cfg.problem_path = kProblems + "free_loop.txt";
    cfg.out_dir = scratch("validate").string();
    auto out = run(cfg);
    EXPECT_NE(out.exit_code, 0);
    std::string report = slurp(fs::path(cfg.out_dir) / "validation_report.txt");
    EXPECT_NE(report.find("check H2.no_free_loop: fail"), std::string::npos);
    EXPECT_NE(report.find("modes=(1,2,1)"), std::string::npos);
}

TEST(Run, CompareDeterministicSwitching) {
    RunConfig cfg;
    cfg.command = Command::Compare;
    cfg.problem_path = kProblems + "deterministic_switch.txt";
    cfg.grid_nx = 101;
    cfg.nt = 200;
    cfg.n_steps = 200;
    cfg.compare_tol = 0.05;
    cfg.probes = {{0.0, {0.0}}, {0.0, {-0.5}}, {0.5, {1.0}}};
    cfg.out_dir = scratch("compare").string();
    auto out = run(cfg);
    EXPECT_EQ(out.exit_code, 0);
    std::string csv = slurp(fs::path(cfg.out_dir) / "compare.csv");
    EXPECT_EQ(csv.find(",fail"), std::string::npos);
    EXPECT_NE(slurp(fs::path(cfg.out_dir) / "oracle.csv").find(",dp,"), std::string::npos);
}

TEST(Run, OutputsAreByteIdentical) {
    RunConfig cfg;
    cfg.command = Command::Report;
    cfg.problem_path = kProblems + "jump_diffusion.txt";
    cfg.grid_nx = 33;
    cfg.nt = 200;
    cfg.n_paths = 2000;
    cfg.n_steps = 20;
    cfg.compare_tol = 0.2;
    cfg.out_dir = scratch("repeat_a").string();
    run(cfg);
    RunConfig again = cfg;
    again.out_dir = scratch("repeat_b").string();
    run(again);
    for (const char* f : {"value_mode1.csv", "reflection_mode1.csv", "oracle.csv", "compare.csv",
                          "validation_report.txt"})
        EXPECT_EQ(slurp(fs::path(cfg.out_dir) / f), slurp(fs::path(again.out_dir) / f)) << f;
    std::string ra = slurp(fs::path(cfg.out_dir) / "run_report.txt");
    std::string rb = slurp(fs::path(again.out_dir) / "run_report.txt");
    ra.erase(ra.find("config.out:"), ra.find('\n', ra.find("config.out:")) - ra.find("config.out:"));
    rb.erase(rb.find("config.out:"), rb.find('\n', rb.find("config.out:")) - rb.find("config.out:"));
    EXPECT_EQ(ra, rb);
}

TEST(Run, ConfigChecks) {
    RunConfig cfg;
    EXPECT_THROW(cfg.check(), ConfigError);
    cfg.problem_path = "x";
    cfg.tol = -1;
    EXPECT_THROW(cfg.check(), ConfigError);
    EXPECT_THROW(parse_command("explode"), ConfigError);
    EXPECT_EQ(parse_command("oracle"), Command::Oracle);
}

TEST(Cli, ExitCodesAndEnvironment) {
    fs::path out = scratch("cli_env");
    EXPECT_EQ(run_cli("solve " + kProblems + "closed_form.txt --grid-nx 5 --nt 10", "SWIPDE_OUT=" + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "value_mode1.csv"));
    EXPECT_NE(run_cli("validate " + kProblems + "free_loop.txt --out " + scratch("cli_v").string()), 0);
    EXPECT_NE(run_cli("bogus " + kProblems + "closed_form.txt --out " + scratch("cli_b").string()), 0);
    EXPECT_NE(run_cli("solve " + kProblems + "closed_form.txt --tol -1 --out " + scratch("cli_t").string()), 0);
    EXPECT_EQ(run_cli("oracle " + kProblems + "deterministic_switch.txt --probe-x 0.5 --steps 50 --out " +
                      scratch("cli_o").string()),
              0);
}
