// swipde: command-line front end.
//
//   swipde <validate|solve|oracle|compare|report> problem.txt [options]

#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swipde/swipde.hpp"

namespace {

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw swipde::ConfigError("bad probe coordinate '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw swipde::ConfigError("empty probe point");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    swipde::RunConfig cfg;
    if (const char* env = std::getenv("SWIPDE_OUT"); env && *env) cfg.out_dir = env;

    CLI::App app{"Solver for switching systems of integro-PDEs with interconnected obstacles"};
    std::string command;
    double probe_t = 0.0;
    std::vector<std::string> probe_x;
    app.add_option("command", command, "validate | solve | oracle | compare | report")->required();
    app.add_option("problem", cfg.problem_path, "problem file")->required();
    app.add_option("--grid-nx", cfg.grid_nx, "grid nodes per space dimension")->capture_default_str();
    app.add_option("--nt", cfg.nt, "time steps")->capture_default_str();
    app.add_option("--weight-p", cfg.weight_p, "weight exponent (0: problem's p)")->capture_default_str();
    app.add_option("--tol", cfg.tol, "Picard tolerance")->capture_default_str();
    app.add_option("--max-iter", cfg.max_iter, "Picard iteration cap")->capture_default_str();
    app.add_option("--paths", cfg.n_paths, "Monte-Carlo paths")->capture_default_str();
    app.add_option("--steps", cfg.n_steps, "oracle time steps")->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    app.add_option("--degree", cfg.basis_degree, "regression basis degree")->capture_default_str();
    app.add_option("--out", cfg.out_dir, "output directory (default $SWIPDE_OUT)")->capture_default_str();
    app.add_option("--probe-t", probe_t, "probe time")->capture_default_str();
    app.add_option("--probe-x", probe_x, "probe point x1,..,xk (repeatable)");
    app.add_option("--compare-tol", cfg.compare_tol, "absolute tolerance for compare")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.command = swipde::parse_command(command);
        for (const auto& px : probe_x) cfg.probes.push_back({probe_t, parse_point(px)});
        if (probe_x.empty() && probe_t != 0.0) throw swipde::ConfigError("--probe-t needs at least one --probe-x");
        auto outcome = swipde::run(cfg);
        for (const auto& msg : outcome.messages) std::cerr << "swipde: " << msg << '\n';
        return outcome.exit_code;
    } catch (const swipde::ConfigError& e) {
        std::cerr << "swipde: " << e.what() << '\n';
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "swipde: " << e.what() << '\n';
        return 3;
    }
}
