#pragma once

// Finite-difference discretization of the local operator L and the non-local
// operators K and B_i on a Grid.
//
//   L u   = b . D_x u + 1/2 Tr[sigma sigma^T D_xx u]
//   K u   = sum_atoms w [u(x + beta) - u(x) - beta . D_x u]
//   B_i u = sum_atoms w gamma_i [u(x + beta) - u(x)]
//
// Drift uses upwind differences, diffusion central second differences with the
// 4-point cross stencil for mixed terms. Second differences at boundary nodes
// reuse the stencil of the nearest interior node. Off-grid jump destinations are
// read by multilinear interpolation after clamping into the box.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "swipde/grid.hpp"
#include "swipde/problem.hpp"

namespace swipde {

/// b, sigma and sigma sigma^T sampled at every node for one time.
struct LocalCoefficients {
    double t = 0.0;
    std::size_t k = 0, d = 0;
    std::vector<double> drift;       // node * k + r
    std::vector<double> diffusion;   // node * k * d + r * d + c
    std::vector<double> covariance;  // node * k * k + r * k + s
};

class DiscreteOperators {
public:
    DiscreteOperators(const SwitchingProblem& problem, const Grid& grid) : problem_(&problem), grid_(grid) {
        if (grid.dim() != problem.state_dim()) throw std::invalid_argument("grid dimension differs from k");
        build_jump_stencil();
    }

    const Grid& grid() const noexcept { return grid_; }
    const SwitchingProblem& problem() const noexcept { return *problem_; }

    /// Number of (node, atom) pairs whose jump destination left the box.
    std::size_t clamp_count() const noexcept { return clamp_count_; }

    /// Clamped (node, atom) pairs restricted to interior nodes.
    std::size_t interior_clamp_count() const noexcept { return interior_clamp_count_; }

    bool node_has_clamped_jump(std::size_t node) const { return clamped_node_[node] != 0; }

    LocalCoefficients local_coefficients(double t) const {
        const std::size_t k = grid_.dim(), d = problem_->brownian_dim(), n = grid_.size();
        LocalCoefficients c;
        c.t = t;
        c.k = k;
        c.d = d;
        c.drift.resize(n * k);
        c.diffusion.resize(n * k * d);
        c.covariance.assign(n * k * k, 0.0);
        std::vector<double> x(k);
        for (std::size_t node = 0; node < n; ++node) {
            grid_.coords(node, x);
            problem_->drift(t, x, std::span<double>(c.drift.data() + node * k, k));
            std::span<double> sig(c.diffusion.data() + node * k * d, k * d);
            problem_->diffusion(t, x, sig);
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t s = 0; s < k; ++s) {
                    double acc = 0.0;
                    for (std::size_t a = 0; a < d; ++a) acc += sig[r * d + a] * sig[s * d + a];
                    c.covariance[node * k * k + r * k + s] = acc;
                }
        }
        return c;
    }

    void apply_local(std::span<const double> u, const LocalCoefficients& c, std::span<double> out) const {
        const std::size_t k = grid_.dim();
        for (std::size_t node = 0; node < grid_.size(); ++node) {
            double acc = 0.0;
            for (std::size_t r = 0; r < k; ++r) {
                double b = c.drift[node * k + r];
                if (b != 0.0) acc += b * upwind_derivative(u, node, r, b);
            }
            for (std::size_t r = 0; r < k; ++r) {
                double a = c.covariance[node * k * k + r * k + r];
                if (a != 0.0) acc += 0.5 * a * second_derivative(u, node, r);
                for (std::size_t s = r + 1; s < k; ++s) {
                    double ars = c.covariance[node * k * k + r * k + s];
                    // symmetric matrix: the (r,s) and (s,r) terms together
                    if (ars != 0.0) acc += ars * mixed_derivative(u, node, r, s);
                }
            }
            out[node] = acc;
        }
    }

    void apply_local(std::span<const double> u, double t, std::span<double> out) const {
        apply_local(u, local_coefficients(t), out);
    }

    void apply_local(const ValueField& field, std::size_t mode, std::size_t level, std::span<double> out) const {
        apply_local(field.level(mode, level), grid_.time(level), out);
    }

    void apply_K(std::span<const double> u, std::span<double> out) const {
        const std::size_t k = grid_.dim(), atoms = problem_->levy().size();
        std::vector<double> grad(k);
        for (std::size_t node = 0; node < grid_.size(); ++node) {
            double acc = 0.0;
            if (atoms > 0) central_gradient(u, node, grad);
            for (std::size_t a = 0; a < atoms; ++a) {
                const JumpEntry& j = jumps_[node * atoms + a];
                double drift_part = 0.0;
                for (std::size_t r = 0; r < k; ++r) drift_part += j.beta[r] * grad[r];
                acc += j.weight * (interpolate(u, j) - u[node] - drift_part);
            }
            out[node] = acc;
        }
    }

    void apply_K(const ValueField& field, std::size_t mode, std::size_t level, std::span<double> out) const {
        apply_K(field.level(mode, level), out);
    }

    void apply_B(std::size_t mode, std::span<const double> u, std::span<double> out) const {
        const std::size_t atoms = problem_->levy().size();
        for (std::size_t node = 0; node < grid_.size(); ++node) {
            double acc = 0.0;
            for (std::size_t a = 0; a < atoms; ++a) {
                const JumpEntry& j = jumps_[node * atoms + a];
                double g = gamma_[(mode * grid_.size() + node) * atoms + a];
                if (g != 0.0) acc += j.weight * g * (interpolate(u, j) - u[node]);
            }
            out[node] = acc;
        }
    }

    void apply_B(const ValueField& field, std::size_t mode, std::size_t level, std::span<double> out) const {
        apply_B(mode, field.level(mode, level), out);
    }

    /// Central differences inside, one-sided first-order differences on the boundary.
    void central_gradient(std::span<const double> u, std::size_t node, std::span<double> grad) const {
        for (std::size_t r = 0; r < grid_.dim(); ++r) {
            std::size_t j = grid_.index(node, r), s = grid_.stride(r), n = grid_.nodes(r);
            double h = grid_.step(r);
            if (j == 0)
                grad[r] = (u[node + s] - u[node]) / h;
            else if (j + 1 == n)
                grad[r] = (u[node] - u[node - s]) / h;
            else
                grad[r] = (u[node + s] - u[node - s]) / (2.0 * h);
        }
    }

    /// Upper bound on dt * (explicit rate) over the grid at time t.
    double cfl_indicator(const LocalCoefficients& c) const {
        const std::size_t k = grid_.dim();
        double worst = 0.0;
        for (std::size_t node = 0; node < grid_.size(); ++node) {
            double rate = 0.0;
            for (std::size_t r = 0; r < k; ++r) {
                double h = grid_.step(r);
                rate += std::abs(c.drift[node * k + r]) / h + c.covariance[node * k * k + r * k + r] / (h * h);
            }
            worst = std::max(worst, rate);
        }
        return grid_.dt() * (worst + problem_->levy().total_mass());
    }

private:
    struct JumpEntry {
        std::vector<double> beta;
        std::vector<std::size_t> corners;
        std::vector<double> corner_weights;
        double weight = 0.0;
    };

    double upwind_derivative(std::span<const double> u, std::size_t node, std::size_t r, double b) const {
        std::size_t j = grid_.index(node, r), s = grid_.stride(r), n = grid_.nodes(r);
        double h = grid_.step(r);
        bool forward = b > 0.0 ? (j + 1 < n) : (j == 0);
        return forward ? (u[node + s] - u[node]) / h : (u[node] - u[node - s]) / h;
    }

    // node shifted along r so that a 3-point stencil fits
    std::size_t stencil_center(std::size_t node, std::size_t r) const {
        std::size_t j = grid_.index(node, r), s = grid_.stride(r), n = grid_.nodes(r);
        if (j == 0) return node + s;
        if (j + 1 == n) return node - s;
        return node;
    }

    double second_derivative(std::span<const double> u, std::size_t node, std::size_t r) const {
        std::size_t c = stencil_center(node, r), s = grid_.stride(r);
        double h = grid_.step(r);
        return (u[c + s] - 2.0 * u[c] + u[c - s]) / (h * h);
    }

    double mixed_derivative(std::span<const double> u, std::size_t node, std::size_t r, std::size_t q) const {
        std::size_t c = stencil_center(stencil_center(node, r), q);
        std::size_t sr = grid_.stride(r), sq = grid_.stride(q);
        return (u[c + sr + sq] - u[c + sr - sq] - u[c - sr + sq] + u[c - sr - sq]) /
               (4.0 * grid_.step(r) * grid_.step(q));
    }

    double interpolate(std::span<const double> u, const JumpEntry& j) const {
        double v = 0.0;
        for (std::size_t c = 0; c < j.corners.size(); ++c) v += j.corner_weights[c] * u[j.corners[c]];
        return v;
    }

    void build_jump_stencil() {
        const std::size_t k = grid_.dim(), n = grid_.size(), m = problem_->modes();
        const auto& atoms = problem_->levy().atoms();
        jumps_.resize(n * atoms.size());
        gamma_.assign(m * n * atoms.size(), 0.0);
        clamped_node_.assign(n, 0);
        std::vector<double> x(k), dest(k);
        std::vector<std::size_t> cell(k);
        std::vector<double> frac(k);
        for (std::size_t node = 0; node < n; ++node) {
            grid_.coords(node, x);
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                JumpEntry& j = jumps_[node * atoms.size() + a];
                j.weight = atoms[a].weight;
                j.beta.resize(k);
                problem_->jump(x, atoms[a].mark, j.beta);
                bool clamped = false;
                for (std::size_t r = 0; r < k; ++r) {
                    double lo = grid_.lower(r), hi = grid_.upper(r), h = grid_.step(r);
                    double y = x[r] + j.beta[r];
                    double slack = 1e-12 * (hi - lo);
                    if (y < lo - slack || y > hi + slack) clamped = true;
                    y = std::clamp(y, lo, hi);
                    double pos = (y - lo) / h;
                    double base = std::floor(pos);
                    std::size_t c = static_cast<std::size_t>(std::max(0.0, base));
                    c = std::min(c, grid_.nodes(r) - 2);
                    double f = pos - static_cast<double>(c);
                    // snap destinations that sit on a node up to rounding
                    if (std::abs(f) < 1e-10) f = 0.0;
                    if (std::abs(f - 1.0) < 1e-10) f = 1.0;
                    cell[r] = c;
                    frac[r] = f;
                }
                if (clamped) {
                    ++clamp_count_;
                    clamped_node_[node] = 1;
                    if (!grid_.is_boundary(node)) ++interior_clamp_count_;
                }
                std::size_t corners = std::size_t{1} << k;
                for (std::size_t mask = 0; mask < corners; ++mask) {
                    double w = 1.0;
                    std::size_t idx = 0;
                    for (std::size_t r = 0; r < k; ++r) {
                        bool upper = (mask >> r) & 1u;
                        w *= upper ? frac[r] : 1.0 - frac[r];
                        idx += (cell[r] + (upper ? 1 : 0)) * grid_.stride(r);
                    }
                    if (w == 0.0) continue;
                    j.corners.push_back(idx);
                    j.corner_weights.push_back(w);
                }
                for (std::size_t i = 0; i < m; ++i)
                    gamma_[(i * n + node) * atoms.size() + a] = problem_->gamma(i, x, atoms[a].mark);
            }
        }
    }

    const SwitchingProblem* problem_;
    Grid grid_;
    std::vector<JumpEntry> jumps_;
    std::vector<double> gamma_;
    std::vector<char> clamped_node_;
    std::size_t clamp_count_ = 0;
    std::size_t interior_clamp_count_ = 0;
};

}  // namespace swipde
