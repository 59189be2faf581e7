#pragma once

// Outer frozen-jump iteration. Starting from u^(0) = 0, each stage freezes
// q^(n) = B_i u^(n-1) and solves the frozen obstacle system for u^(n).
// Progress is measured in the weighted sup norm with phi(x) = (1 + |x|^2)^-p.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swipde/frozen_solver.hpp"
#include "swipde/grid.hpp"
#include "swipde/operators.hpp"
#include "swipde/problem.hpp"
#include "swipde/validate.hpp"

namespace swipde {

struct WeightSpec {
    int p = 1;

    explicit WeightSpec(int exponent = 1) : p(exponent) {
        if (p < 1) throw std::invalid_argument("weight exponent p must be at least 1");
    }

    double operator()(std::span<const double> x) const {
        double s = 1.0;
        for (double v : x) s += v * v;
        return 1.0 / std::pow(s, p);
    }
};

enum class PicardStatus { Converged, MaxIterations, Diverged };

inline const char* to_string(PicardStatus s) {
    switch (s) {
        case PicardStatus::Converged: return "converged";
        case PicardStatus::MaxIterations: return "max-iter";
        case PicardStatus::Diverged: return "diverged";
    }
    return "?";
}

struct ConvergenceReport {
    std::vector<double> differences;  // D_1, D_2, ...
    std::vector<double> ratios;       // D_{n+1} / D_n
    double c_hat = 0.0;
    std::optional<double> eta;  // contraction window, absent when c_hat == 0
    std::size_t iterations = 0;
    PicardStatus status = PicardStatus::MaxIterations;
    FrozenDiagnostics last_stage;
};

/// q^i(t_n, x) = (B_i u^i)(t_n, x) at every level.
inline FrozenJumpField jump_field_from_value(const ValueField& field, const DiscreteOperators& ops) {
    FrozenJumpField q(field.modes(), field.grid());
    for (std::size_t i = 0; i < field.modes(); ++i)
        for (std::size_t n = 0; n < field.levels(); ++n) ops.apply_B(i, field.level(i, n), q.level(i, n));
    return q;
}

inline FrozenJumpField jump_field_from_value(const ValueField& field, const SwitchingProblem& problem,
                                             const Grid& grid) {
    return jump_field_from_value(field, DiscreteOperators(problem, grid));
}

/// max over modes, levels and nodes of phi(x) |a - b|.
inline double weighted_sup_diff(const ValueField& a, const ValueField& b, const WeightSpec& w) {
    if (!a.same_shape(b)) throw std::invalid_argument("weighted_sup_diff: shape mismatch");
    const Grid& grid = a.grid();
    std::vector<double> phi(grid.size()), x(grid.dim());
    for (std::size_t node = 0; node < grid.size(); ++node) {
        grid.coords(node, x);
        phi[node] = w(x);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < a.modes(); ++i)
        for (std::size_t n = 0; n < a.levels(); ++n) {
            auto la = a.level(i, n);
            auto lb = b.level(i, n);
            for (std::size_t node = 0; node < grid.size(); ++node)
                best = std::max(best, phi[node] * std::abs(la[node] - lb[node]));
        }
    return best;
}

/// eta with 16 C^-1 (exp(C eta) - 1) = 1/8, i.e. eta = log(1 + C/128) / C.
inline double contraction_window(double c_hat) {
    if (!(c_hat > 0.0)) throw std::invalid_argument("contraction_window: C_hat must be positive");
    return std::log1p(c_hat / 128.0) / c_hat;
}

struct PicardOptions {
    double tol = 1e-8;
    std::size_t max_iter = 50;
    WeightSpec weight{1};
    double divergence_factor = 1e6;
    std::size_t lipschitz_samples = 256;
    std::uint64_t lipschitz_seed = 20240601;
    SolverOptions solver{};
};

struct PicardResult {
    ValueField values;
    ReflectionField reflection;
    ConvergenceReport report;
};

/// Runs the frozen-jump iteration. When `initial` is given it replaces u^(0) = 0.
inline PicardResult picard_solve(const SwitchingProblem& problem, const Grid& grid, const PicardOptions& opt,
                                 const ValueField* initial = nullptr) {
    if (!(opt.tol > 0.0)) throw std::invalid_argument("picard_solve: tol must be positive");
    if (opt.max_iter < 1) throw std::invalid_argument("picard_solve: max_iter must be at least 1");

    FrozenSolver solver(problem, grid, opt.solver);
    const auto& ops = solver.operators();

    ConvergenceReport rep;
    rep.c_hat = estimate_lipschitz(problem, opt.lipschitz_samples, opt.lipschitz_seed);
    if (rep.c_hat > 0.0) rep.eta = contraction_window(rep.c_hat);

    ValueField prev = initial ? *initial : ValueField(problem.modes(), grid);
    if (!prev.same_shape(ValueField(problem.modes(), grid)))
        throw std::invalid_argument("picard_solve: initial field shape mismatch");
    FrozenSolution current;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        current = solver.solve_frozen(jump_field_from_value(prev, ops));
        double diff = weighted_sup_diff(current.values, prev, opt.weight);
        if (!rep.differences.empty()) {
            double last = rep.differences.back();
            if (last > 0.0)
                rep.ratios.push_back(diff / last);
            else
                rep.ratios.push_back(diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        }
        rep.differences.push_back(diff);
        rep.iterations = it;
        prev = current.values;
        if (diff <= opt.tol) {
            rep.status = PicardStatus::Converged;
            break;
        }
        if (!std::isfinite(diff) || diff > opt.divergence_factor * (1.0 + rep.differences.front())) {
            rep.status = PicardStatus::Diverged;
            break;
        }
        rep.status = PicardStatus::MaxIterations;
    }
    rep.last_stage = current.diagnostics;
    return {std::move(current.values), std::move(current.reflection), std::move(rep)};
}

}  // namespace swipde
