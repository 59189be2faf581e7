#pragma once

// One Picard stage: the obstacle system with the jump argument of the drivers
// frozen, solved by explicit backward time stepping and an obstacle projection
// sweep at each level.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swipde/grid.hpp"
#include "swipde/obstacle.hpp"
#include "swipde/operators.hpp"
#include "swipde/problem.hpp"

namespace swipde {

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::size_t mode, std::size_t node)
        : std::runtime_error(what + " (mode " + std::to_string(mode + 1) + ", node " + std::to_string(node) + ")"),
          mode_(mode), node_(node) {}
    std::size_t mode() const noexcept { return mode_; }
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t mode_, node_;
};

struct SolverOptions {
    /// Sweep tolerance relative to 1 + max |value| at the node.
    double sweep_tolerance = 1e-12;
    /// Extra passes allowed beyond m before declaring non-termination.
    std::size_t sweep_guard = 2;
};

struct FrozenDiagnostics {
    std::size_t clamp_count = 0;
    std::size_t interior_clamp_count = 0;
    std::map<std::size_t, std::size_t> sweep_histogram;  // passes -> node-level count
    std::size_t max_sweeps = 0;
    double cfl = 0.0;
    std::vector<std::string> warnings;
};

struct FrozenSolution {
    ValueField values;
    ReflectionField reflection;
    FrozenDiagnostics diagnostics;
};

/// Per-mode views of one time level.
using ModeLevels = std::vector<std::span<const double>>;
using MutableModeLevels = std::vector<std::span<double>>;

class FrozenSolver {
public:
    FrozenSolver(const SwitchingProblem& problem, const Grid& grid, SolverOptions options = {})
        : problem_(&problem), grid_(grid), ops_(problem, grid), options_(options) {
        if (std::abs(grid.horizon() - problem.horizon()) > 1e-12 * problem.horizon())
            throw std::invalid_argument("grid horizon differs from problem horizon");
    }

    const DiscreteOperators& operators() const noexcept { return ops_; }
    const Grid& grid() const noexcept { return grid_; }

    /// Writes h_i at every node of the last level.
    void install_terminal(ValueField& field) const {
        std::vector<double> x(grid_.dim());
        const std::size_t last = grid_.time_steps();
        for (std::size_t i = 0; i < problem_->modes(); ++i) {
            auto lv = field.level(i, last);
            for (std::size_t node = 0; node < grid_.size(); ++node) {
                grid_.coords(node, x);
                lv[node] = problem_->terminal(i, x);
            }
        }
    }

    /// Computes level n from level n+1. Returns the largest number of sweep passes at any node.
    std::size_t step_backward(std::size_t n, const ModeLevels& next, const ModeLevels& q, MutableModeLevels out,
                              MutableModeLevels increments, FrozenDiagnostics* diag = nullptr) const {
        const std::size_t m = problem_->modes(), k = grid_.dim(), d = problem_->brownian_dim();
        const std::size_t N = grid_.size();
        const double t = grid_.time(n), dt = grid_.dt();
        auto coeffs = ops_.local_coefficients(t);
        if (diag) {
            double cfl = ops_.cfl_indicator(coeffs);
            diag->cfl = std::max(diag->cfl, cfl);
        }

        std::vector<double> local(N), nonlocal(N), grad(k), z(d), y(m), x(k);
        for (std::size_t i = 0; i < m; ++i) {
            ops_.apply_local(next[i], coeffs, local);
            ops_.apply_K(next[i], nonlocal);
            for (std::size_t node = 0; node < N; ++node) {
                grid_.coords(node, x);
                for (std::size_t j = 0; j < m; ++j) y[j] = next[j][node];
                ops_.central_gradient(next[i], node, grad);
                const double* sig = coeffs.diffusion.data() + node * k * d;
                for (std::size_t c = 0; c < d; ++c) {
                    double acc = 0.0;
                    for (std::size_t r = 0; r < k; ++r) acc += sig[r * d + c] * grad[r];
                    z[c] = acc;
                }
                double f = problem_->driver(i, t, x, y, z, q[i][node]);
                double cand = next[i][node] + dt * (local[node] + nonlocal[node] + f);
                if (!std::isfinite(cand)) throw SolverError("non-finite candidate value", i, node);
                out[i][node] = cand;
            }
        }

        std::size_t worst = 0;
        std::vector<double> g(m * m), v(m), cand(m);
        const std::size_t guard = m + options_.sweep_guard;
        for (std::size_t node = 0; node < N; ++node) {
            grid_.coords(node, x);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) g[i * m + j] = problem_->cost(i, j, t, x);
            for (std::size_t i = 0; i < m; ++i) v[i] = cand[i] = out[i][node];
            auto passes_or = obstacle_sweep(v, g, options_.sweep_tolerance, guard);
            if (!passes_or)
                throw SolverError("obstacle sweep did not terminate; switching costs admit a free loop", 0, node);
            const std::size_t passes = *passes_or;
            for (std::size_t i = 0; i < m; ++i) {
                out[i][node] = v[i];
                increments[i][node] = v[i] - cand[i];
            }
            worst = std::max(worst, passes);
            if (diag) ++diag->sweep_histogram[passes];
        }
        if (diag) diag->max_sweeps = std::max(diag->max_sweeps, worst);
        return worst;
    }

    /// Backward sweep with the jump argument supplied per level by `fill_q(n, next, q_out)`.
    FrozenSolution solve_with(
        const std::function<void(std::size_t, const ModeLevels&, MutableModeLevels)>& fill_q) const {
        const std::size_t m = problem_->modes();
        FrozenSolution sol{ValueField(m, grid_), ReflectionField(m, grid_), {}};
        install_terminal(sol.values);
        sol.diagnostics.clamp_count = ops_.clamp_count();
        sol.diagnostics.interior_clamp_count = ops_.interior_clamp_count();

        std::vector<std::vector<double>> qbuf(m, std::vector<double>(grid_.size()));
        for (std::size_t n = grid_.time_steps(); n-- > 0;) {
            ModeLevels next, qv;
            MutableModeLevels out, inc, qmut;
            for (std::size_t i = 0; i < m; ++i) {
                next.push_back(sol.values.level(i, n + 1));
                out.push_back(sol.values.level(i, n));
                inc.push_back(sol.reflection.level(i, n));
                qmut.push_back(qbuf[i]);
            }
            fill_q(n, next, qmut);
            for (std::size_t i = 0; i < m; ++i) qv.push_back(qbuf[i]);
            step_backward(n, next, qv, out, inc, &sol.diagnostics);
        }
        if (sol.diagnostics.cfl > 1.0)
            sol.diagnostics.warnings.push_back("CFL indicator " + std::to_string(sol.diagnostics.cfl) +
                                               " exceeds 1; explicit scheme may be unstable");
        return sol;
    }

    /// One Picard stage with a frozen jump field.
    FrozenSolution solve_frozen(const FrozenJumpField& q) const {
        if (q.modes() != problem_->modes() || !(q.grid() == grid_))
            throw std::invalid_argument("frozen jump field shape does not match the grid");
        return solve_with([&](std::size_t n, const ModeLevels&, MutableModeLevels out) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                auto src = q.level(i, n);
                std::copy(src.begin(), src.end(), out[i].begin());
            }
        });
    }

    /// Single pass without an outer loop: q at level n is B_i applied to level n+1.
    FrozenSolution solve_single_pass() const {
        return solve_with([&](std::size_t, const ModeLevels& next, MutableModeLevels out) {
            for (std::size_t i = 0; i < out.size(); ++i) ops_.apply_B(i, next[i], out[i]);
        });
    }

private:
    const SwitchingProblem* problem_;
    Grid grid_;
    DiscreteOperators ops_;
    SolverOptions options_;
};

inline FrozenSolution solve_frozen(const SwitchingProblem& problem, const Grid& grid, const FrozenJumpField& q,
                                   SolverOptions options = {}) {
    return FrozenSolver(problem, grid, options).solve_frozen(q);
}

/// Worst-case violations of obstacle feasibility and complementarity.
struct ComplementarityCheck {
    double scale = 1.0;                 // 1 + max |u|
    double max_obstacle_violation = 0;  // max(obstacle - u, 0)
    double min_increment = 0;
    double max_complementarity = 0;     // max (u - obstacle) * increment

    bool holds(double rel_tol = 1e-9) const {
        return max_obstacle_violation <= rel_tol * scale && min_increment >= 0.0 &&
               max_complementarity <= rel_tol * scale * scale;
    }
};

inline ComplementarityCheck check_complementarity(const SwitchingProblem& problem, const ValueField& values,
                                                  const ReflectionField& reflection) {
    const Grid& grid = values.grid();
    const std::size_t m = values.modes();
    ComplementarityCheck c;
    double umax = 0.0;
    for (double v : values.data()) umax = std::max(umax, std::abs(v));
    c.scale = 1.0 + umax;
    c.min_increment = *std::min_element(reflection.data().begin(), reflection.data().end());
    std::vector<double> x(grid.dim());
    for (std::size_t n = 0; n <= grid.time_steps(); ++n) {
        double t = grid.time(n);
        for (std::size_t node = 0; node < grid.size(); ++node) {
            grid.coords(node, x);
            for (std::size_t i = 0; i < m; ++i) {
                double obstacle = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < m; ++j)
                    if (j != i) obstacle = std::max(obstacle, values.at(j, n, node) - problem.cost(i, j, t, x));
                double gap = values.at(i, n, node) - obstacle;
                c.max_obstacle_violation = std::max(c.max_obstacle_violation, -gap);
                c.max_complementarity = std::max(c.max_complementarity, gap * reflection.at(i, n, node));
            }
        }
    }
    return c;
}

}  // namespace swipde
