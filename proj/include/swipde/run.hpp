#pragma once

// Batch driver behind the command-line tool.
//
// Files written under RunConfig::out_dir:
//   validation_report.txt              validate, report
//   value_mode<i>.csv                  solve, compare, report   (t, x1..xk, u)
//   reflection_mode<i>.csv             solve, compare, report   (t, x1..xk, increment)
//   run_report.txt                     every command; "key: value" lines
//   oracle.csv                         oracle, compare, report
//   compare.csv                        compare, report

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "swipde/frozen_solver.hpp"
#include "swipde/grid.hpp"
#include "swipde/mc_oracle.hpp"
#include "swipde/picard.hpp"
#include "swipde/problem.hpp"
#include "swipde/problem_io.hpp"
#include "swipde/validate.hpp"

namespace swipde {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Command { Validate, Solve, Oracle, Compare, Report };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::Validate: return "validate";
        case Command::Solve: return "solve";
        case Command::Oracle: return "oracle";
        case Command::Compare: return "compare";
        case Command::Report: return "report";
    }
    return "?";
}

inline Command parse_command(const std::string& s) {
    for (Command c : {Command::Validate, Command::Solve, Command::Oracle, Command::Compare, Command::Report})
        if (s == to_string(c)) return c;
    throw ConfigError("unknown command '" + s + "'");
}

struct Probe {
    double t = 0.0;
    std::vector<double> x;
};

struct RunConfig {
    Command command = Command::Solve;
    std::string problem_path;
    std::size_t grid_nx = 41;  // nodes per space dimension
    std::size_t nt = 400;
    int weight_p = 0;  // 0: use the problem's growth exponent
    double tol = 1e-8;
    std::size_t max_iter = 50;
    std::size_t n_paths = 20000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 12345;
    int basis_degree = 2;
    std::string out_dir = "swipde_out";
    std::vector<Probe> probes;  // empty: t = 0 at the box centre
    double compare_tol = 0.05;

    void check() const {
        if (problem_path.empty()) throw ConfigError("problem file path is required");
        if (grid_nx < 3) throw ConfigError("grid-nx must be at least 3");
        if (nt < 1) throw ConfigError("nt must be positive");
        if (weight_p < 0) throw ConfigError("weight p must be positive");
        if (!(tol > 0.0)) throw ConfigError("tol must be positive");
        if (max_iter < 1) throw ConfigError("max-iter must be positive");
        if (n_paths < 1) throw ConfigError("paths must be positive");
        if (n_steps < 1) throw ConfigError("steps must be positive");
        if (basis_degree < 1) throw ConfigError("degree must be positive");
        if (!(compare_tol > 0.0)) throw ConfigError("compare-tol must be positive");
        if (out_dir.empty()) throw ConfigError("output directory is required");
    }
};

/// Shortest decimal string that reads back to the same double.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

inline std::string format_vector(const std::vector<double>& v, char sep = ' ') {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += format_double(v[i]);
    }
    return out;
}

/// Rows "t,x1..xk,<column>" for one mode, levels in increasing time.
template <class Tag>
void write_field_csv(const std::filesystem::path& path, const ModeLevelArray<Tag>& field, std::size_t mode,
                     const std::string& column) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    const Grid& grid = field.grid();
    os << 't';
    for (std::size_t r = 0; r < grid.dim(); ++r) os << ",x" << r + 1;
    os << ',' << column << '\n';
    for (std::size_t n = 0; n < field.levels(); ++n) {
        const std::string t = format_double(grid.time(n));
        auto lv = field.level(mode, n);
        for (std::size_t node = 0; node < grid.size(); ++node) {
            os << t;
            for (std::size_t r = 0; r < grid.dim(); ++r) os << ',' << format_double(grid.coord(node, r));
            os << ',' << format_double(lv[node]) << '\n';
        }
    }
}

/// Reads a CSV written by write_field_csv back into rows of doubles (header skipped).
inline std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            auto comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(line.data() + start, line.data() + comma, v);
            if (ec != std::errc() || ptr != line.data() + comma)
                throw std::runtime_error("malformed number in " + path.string());
            row.push_back(v);
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Space-time multilinear interpolation of one mode of a value field.
inline double interpolate(const ValueField& field, std::size_t mode, double t, std::span<const double> x) {
    const Grid& grid = field.grid();
    const double T = grid.horizon(), slack = 1e-12;
    if (t < -slack * T || t > T * (1 + slack)) throw std::out_of_range("probe time outside [0, T]");
    if (x.size() != grid.dim()) throw std::invalid_argument("probe dimension differs from the grid");
    const std::size_t k = grid.dim();
    std::vector<std::size_t> base(k);
    std::vector<double> frac(k);
    for (std::size_t r = 0; r < k; ++r) {
        const double w = grid.upper(r) - grid.lower(r);
        if (x[r] < grid.lower(r) - slack * w || x[r] > grid.upper(r) + slack * w)
            throw std::out_of_range("probe point outside the grid box");
        double s = std::clamp((x[r] - grid.lower(r)) / grid.step(r), 0.0, static_cast<double>(grid.nodes(r) - 1));
        std::size_t b = std::min(static_cast<std::size_t>(s), grid.nodes(r) - 2);
        base[r] = b;
        frac[r] = s - static_cast<double>(b);
    }
    double st = std::clamp(t / grid.dt(), 0.0, static_cast<double>(grid.time_steps()));
    std::size_t n0 = std::min(static_cast<std::size_t>(st), grid.time_steps() - 1);
    double ft = st - static_cast<double>(n0);

    auto spatial = [&](std::size_t n) {
        auto lv = field.level(mode, n);
        double acc = 0.0;
        for (std::size_t corner = 0; corner < (std::size_t{1} << k); ++corner) {
            double w = 1.0;
            std::size_t node = 0;
            for (std::size_t r = 0; r < k; ++r) {
                bool up = (corner >> r) & 1U;
                w *= up ? frac[r] : 1.0 - frac[r];
                node += (base[r] + (up ? 1 : 0)) * grid.stride(r);
            }
            if (w != 0.0) acc += w * lv[node];
        }
        return acc;
    };
    double a = spatial(n0);
    return ft == 0.0 ? a : (1.0 - ft) * a + ft * spatial(n0 + 1);
}

struct OracleValue {
    Probe probe;
    std::string method;  // "dp" or "regression"
    std::vector<double> values;
    std::vector<double> standard_error;
};

/// Deterministic dynamic programming when the dynamics carry no noise, regression otherwise.
inline OracleValue oracle_value(const SwitchingProblem& problem, const Probe& probe, const RunConfig& cfg) {
    OracleValue out{probe, {}, {}, {}};
    const double remaining = problem.horizon() - probe.t;
    if (!(remaining > 0.0)) {
        out.method = "terminal";
        for (std::size_t i = 0; i < problem.modes(); ++i) out.values.push_back(problem.terminal(i, probe.x));
        out.standard_error.assign(problem.modes(), 0.0);
        return out;
    }
    if (detail::sampled_zero_noise(problem)) {
        out.method = "dp";
        out.values = dp_switching_value_deterministic(problem, probe.t, probe.x, cfg.n_steps).values;
        out.standard_error.assign(problem.modes(), 0.0);
        return out;
    }
    out.method = "regression";
    PathSet paths = simulate_paths(problem, probe.t, probe.x, cfg.n_paths, cfg.n_steps, cfg.seed);
    RegressionOptions ro;
    ro.basis_degree = cfg.basis_degree;
    ro.bootstrap_seed = cfg.seed + 1;
    auto res = regression_switching_value(problem, paths, ro);
    out.values = std::move(res.values);
    out.standard_error = std::move(res.standard_error);
    return out;
}

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::string> messages;
};

namespace detail {

class ReportWriter {
public:
    void put(const std::string& key, const std::string& value) { os_ << key << ": " << value << '\n'; }
    void put(const std::string& key, double value) { put(key, format_double(value)); }
    void put(const std::string& key, std::size_t value) { put(key, std::to_string(value)); }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

inline std::vector<Probe> resolve_probes(const SwitchingProblem& p, const RunConfig& cfg) {
    if (!cfg.probes.empty()) {
        for (const auto& pr : cfg.probes)
            if (pr.x.size() != p.state_dim())
                throw ConfigError("probe needs " + std::to_string(p.state_dim()) + " coordinates");
        return cfg.probes;
    }
    Probe centre;
    for (std::size_t r = 0; r < p.state_dim(); ++r)
        centre.x.push_back(0.5 * (p.box_lower()[r] + p.box_upper()[r]));
    return {centre};
}

inline void embed_config(ReportWriter& w, const RunConfig& cfg, int weight_p) {
    w.put("config.command", to_string(cfg.command));
    w.put("config.problem", cfg.problem_path);
    w.put("config.grid_nx", cfg.grid_nx);
    w.put("config.nt", cfg.nt);
    w.put("config.weight_p", std::to_string(weight_p));
    w.put("config.tol", cfg.tol);
    w.put("config.max_iter", cfg.max_iter);
    w.put("config.paths", cfg.n_paths);
    w.put("config.steps", cfg.n_steps);
    w.put("config.seed", std::to_string(cfg.seed));
    w.put("config.degree", std::to_string(cfg.basis_degree));
    w.put("config.compare_tol", cfg.compare_tol);
    w.put("config.out", cfg.out_dir);
    for (std::size_t i = 0; i < cfg.probes.size(); ++i)
        w.put("config.probe" + std::to_string(i + 1),
              format_double(cfg.probes[i].t) + " " + format_vector(cfg.probes[i].x));
}

}  // namespace detail

/// Executes one command and writes its artifacts. Exit code 0 on success,
/// 1 when a check fails, 2 when the Picard iteration does not converge.
inline RunOutcome run(const RunConfig& cfg) {
    cfg.check();
    namespace fs = std::filesystem;
    RunOutcome outcome;
    const SwitchingProblem problem = load_problem(cfg.problem_path);
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    const int weight_p = cfg.weight_p > 0 ? cfg.weight_p : problem.growth_exponent();
    const std::size_t m = problem.modes(), k = problem.state_dim();

    detail::ReportWriter rep;
    detail::embed_config(rep, cfg, weight_p);
    rep.put("problem.modes", m);
    rep.put("problem.state_dim", k);
    rep.put("problem.horizon", problem.horizon());

    auto fail = [&](int code, const std::string& msg) {
        outcome.exit_code = std::max(outcome.exit_code, code);
        outcome.messages.push_back(msg);
    };

    const bool do_validate = cfg.command == Command::Validate || cfg.command == Command::Report;
    const bool do_solve = cfg.command == Command::Solve || cfg.command == Command::Compare ||
                          cfg.command == Command::Report;
    const bool do_oracle = cfg.command == Command::Oracle || cfg.command == Command::Compare ||
                           cfg.command == Command::Report;

    if (do_validate) {
        auto vr = validate_problem(problem);
        detail::write_text(out / "validation_report.txt", vr.to_text());
        rep.put("validation.overall", vr.passed() ? "pass" : "fail");
        for (const auto& c : vr.checks) rep.put("validation." + c.id, to_string(c.status));
        if (!vr.passed()) fail(1, "validation failed");
    }

    std::optional<PicardResult> solution;
    if (do_solve) {
        std::vector<std::size_t> nodes(k, cfg.grid_nx);
        Grid grid(problem.box_lower(), problem.box_upper(), nodes, cfg.nt, problem.horizon());
        PicardOptions po;
        po.tol = cfg.tol;
        po.max_iter = cfg.max_iter;
        po.weight = WeightSpec(weight_p);
        solution = picard_solve(problem, grid, po);
        const auto& r = solution->report;
        rep.put("solve.status", to_string(r.status));
        rep.put("solve.iterations", r.iterations);
        rep.put("solve.D_n", format_vector(r.differences));
        rep.put("solve.ratios", format_vector(r.ratios));
        rep.put("solve.C_hat", r.c_hat);
        rep.put("solve.eta", r.eta ? format_double(*r.eta) : std::string("none"));
        rep.put("solve.cfl", r.last_stage.cfl);
        rep.put("solve.clamp_count", r.last_stage.clamp_count);
        rep.put("solve.interior_clamp_count", r.last_stage.interior_clamp_count);
        rep.put("solve.max_sweeps", r.last_stage.max_sweeps);
        std::string hist;
        for (const auto& [passes, count] : r.last_stage.sweep_histogram)
            hist += (hist.empty() ? "" : " ") + std::to_string(passes) + "x" + std::to_string(count);
        rep.put("solve.sweep_histogram", hist);
        for (const auto& w : r.last_stage.warnings) rep.put("solve.warning", w);
        auto cc = check_complementarity(problem, solution->values, solution->reflection);
        rep.put("solve.max_obstacle_violation", cc.max_obstacle_violation);
        rep.put("solve.min_increment", cc.min_increment);
        rep.put("solve.max_complementarity", cc.max_complementarity);
        for (std::size_t i = 0; i < m; ++i) {
            write_field_csv(out / ("value_mode" + std::to_string(i + 1) + ".csv"), solution->values, i, "u");
            write_field_csv(out / ("reflection_mode" + std::to_string(i + 1) + ".csv"), solution->reflection, i,
                            "increment");
        }
        if (r.status != PicardStatus::Converged) fail(2, std::string("picard iteration ") + to_string(r.status));
    }

    std::vector<OracleValue> oracle;
    if (do_oracle) {
        for (const auto& probe : detail::resolve_probes(problem, cfg)) oracle.push_back(oracle_value(problem, probe, cfg));
        std::ofstream os(out / "oracle.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot write oracle.csv");
        os << "t";
        for (std::size_t r = 0; r < k; ++r) os << ",x" << r + 1;
        os << ",mode,method,value,stderr\n";
        for (const auto& o : oracle)
            for (std::size_t i = 0; i < m; ++i) {
                os << format_double(o.probe.t);
                for (double v : o.probe.x) os << ',' << format_double(v);
                os << ',' << i + 1 << ',' << o.method << ',' << format_double(o.values[i]) << ','
                   << format_double(o.standard_error[i]) << '\n';
            }
        rep.put("oracle.probes", oracle.size());
    }

    if (solution && !oracle.empty()) {
        std::ofstream os(out / "compare.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot write compare.csv");
        os << "t";
        for (std::size_t r = 0; r < k; ++r) os << ",x" << r + 1;
        os << ",mode,grid,oracle,stderr,abs_diff,pass\n";
        double worst = 0.0;
        bool all_pass = true;
        for (const auto& o : oracle)
            for (std::size_t i = 0; i < m; ++i) {
                double g = interpolate(solution->values, i, o.probe.t, o.probe.x);
                double diff = std::abs(g - o.values[i]);
                bool ok = diff <= cfg.compare_tol + 3.0 * o.standard_error[i];
                all_pass = all_pass && ok;
                worst = std::max(worst, diff);
                os << format_double(o.probe.t);
                for (double v : o.probe.x) os << ',' << format_double(v);
                os << ',' << i + 1 << ',' << format_double(g) << ',' << format_double(o.values[i]) << ','
                   << format_double(o.standard_error[i]) << ',' << format_double(diff) << ','
                   << (ok ? "pass" : "fail") << '\n';
            }
        rep.put("compare.max_abs_diff", worst);
        rep.put("compare.result", all_pass ? "pass" : "fail");
        if (!all_pass) fail(1, "grid and oracle disagree beyond compare-tol");
    }

    rep.put("exit_code", std::to_string(outcome.exit_code));
    detail::write_text(out / "run_report.txt", rep.str());
    return outcome;
}

}  // namespace swipde
