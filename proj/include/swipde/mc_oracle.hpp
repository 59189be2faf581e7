#pragma once

// Independent check of the grid solver on state-only drivers: jump-diffusion
// path simulation, strategy payoffs, exact dynamic programming for
// deterministic dynamics, brute-force strategy enumeration, and regression
// dynamic programming with bootstrap errors for stochastic dynamics.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swipde/obstacle.hpp"
#include "swipde/problem.hpp"
#include "swipde/random.hpp"
#include "swipde/validate.hpp"

namespace swipde {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct JumpEvent {
    std::size_t step = 0;
    std::size_t atom = 0;
};

struct PathSet {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::vector<double> times;   // n_steps + 1
    std::vector<double> states;  // (path * (n_steps + 1) + step) * dim + r
    std::vector<std::vector<JumpEvent>> jumps;

    std::span<const double> state(std::size_t path, std::size_t step) const {
        return {states.data() + (path * (n_steps + 1) + step) * dim, dim};
    }
    double dt() const { return times[1] - times[0]; }
};

/// Euler scheme with compensated jump drift. Jump clocks are exponential with
/// rate lambda(E), marks categorical with probabilities w / lambda(E); jumps
/// land at the end of their step using the step's left state.
inline PathSet simulate_paths(const SwitchingProblem& problem, double t, std::span<const double> x,
                              std::size_t n_paths, std::size_t n_steps, std::uint64_t seed) {
    if (n_paths < 1 || n_steps < 1) throw std::invalid_argument("simulate_paths: need paths and steps");
    if (!(t < problem.horizon())) throw std::invalid_argument("simulate_paths: t must precede the horizon");
    const std::size_t k = problem.state_dim(), d = problem.brownian_dim();
    if (x.size() != k) throw std::invalid_argument("simulate_paths: initial state has wrong dimension");
    const auto& levy = problem.levy();
    const double rate = levy.total_mass();
    const double T = problem.horizon();
    const double dt = (T - t) / static_cast<double>(n_steps);

    PathSet ps;
    ps.n_paths = n_paths;
    ps.n_steps = n_steps;
    ps.dim = k;
    ps.seed = seed;
    ps.times.resize(n_steps + 1);
    for (std::size_t n = 0; n <= n_steps; ++n)
        ps.times[n] = n == n_steps ? T : t + static_cast<double>(n) * dt;
    ps.states.resize(n_paths * (n_steps + 1) * k);
    ps.jumps.resize(n_paths);

    std::vector<double> weights;
    for (const auto& a : levy.atoms()) weights.push_back(a.weight);
    const double sqdt = std::sqrt(dt);

    std::vector<double> drift(k), sigma(k * d), comp(k), beta(k), xi(d), cur(k), nxt(k);
    for (std::size_t p = 0; p < n_paths; ++p) {
        RandomStream normals(seed, 2 * p);
        RandomStream clock(seed, 2 * p + 1);
        double next_jump = rate > 0.0 ? t + clock.exponential(rate) : std::numeric_limits<double>::infinity();
        std::copy(x.begin(), x.end(), cur.begin());
        std::copy(cur.begin(), cur.end(), ps.states.begin() + static_cast<std::ptrdiff_t>(p * (n_steps + 1) * k));
        for (std::size_t n = 0; n < n_steps; ++n) {
            const double tn = ps.times[n];
            problem.drift(tn, cur, drift);
            problem.diffusion(tn, cur, sigma);
            std::fill(comp.begin(), comp.end(), 0.0);
            for (const auto& a : levy.atoms()) {
                problem.jump(cur, a.mark, beta);
                for (std::size_t r = 0; r < k; ++r) comp[r] += a.weight * beta[r];
            }
            for (auto& v : xi) v = normals.normal();
            for (std::size_t r = 0; r < k; ++r) {
                double diff = 0.0;
                for (std::size_t c = 0; c < d; ++c) diff += sigma[r * d + c] * xi[c];
                nxt[r] = cur[r] + (drift[r] - comp[r]) * dt + sqdt * diff;
            }
            while (next_jump <= ps.times[n + 1]) {
                std::size_t atom = clock.categorical(weights, rate);
                problem.jump(cur, levy[atom].mark, beta);
                for (std::size_t r = 0; r < k; ++r) nxt[r] += beta[r];
                ps.jumps[p].push_back({n, atom});
                next_jump += clock.exponential(rate);
            }
            for (std::size_t r = 0; r < k; ++r)
                if (!std::isfinite(nxt[r]))
                    throw OracleError("non-finite state on path " + std::to_string(p) + " at step " +
                                      std::to_string(n + 1));
            cur = nxt;
            std::copy(cur.begin(), cur.end(),
                      ps.states.begin() + static_cast<std::ptrdiff_t>((p * (n_steps + 1) + n + 1) * k));
        }
    }
    return ps;
}

struct MomentEstimate {
    double empirical = 0.0;  // mean over paths of sup_s |X_s|^p
    double fitted_c = 0.0;   // empirical / (1 + |x|^p)
};

inline MomentEstimate moment_check(const PathSet& paths, int p) {
    if (p < 1) throw std::invalid_argument("moment_check: p must be at least 1");
    auto norm = [](std::span<const double> v) {
        double s = 0.0;
        for (double a : v) s += a * a;
        return std::sqrt(s);
    };
    double total = 0.0;
    for (std::size_t path = 0; path < paths.n_paths; ++path) {
        double best = 0.0;
        for (std::size_t n = 0; n <= paths.n_steps; ++n)
            best = std::max(best, std::pow(norm(paths.state(path, n)), p));
        total += best;
    }
    MomentEstimate est;
    est.empirical = total / static_cast<double>(paths.n_paths);
    if (!std::isfinite(est.empirical)) throw OracleError("moment_check: non-finite moment");
    est.fitted_c = est.empirical / (1.0 + std::pow(norm(paths.state(0, 0)), p));
    return est;
}

struct SwitchDecision {
    double time = 0.0;
    std::size_t mode = 0;
};

struct Strategy {
    std::size_t initial_mode = 0;
    std::vector<SwitchDecision> switches;
};

inline void check_admissible(const Strategy& s, std::size_t modes, double t0, double horizon) {
    if (s.initial_mode >= modes) throw std::invalid_argument("strategy: initial mode out of range");
    double last = t0;
    std::size_t mode = s.initial_mode;
    for (const auto& sw : s.switches) {
        if (sw.time < last || sw.time > horizon) throw std::invalid_argument("strategy: switch times must be ordered");
        if (sw.mode >= modes || sw.mode == mode) throw std::invalid_argument("strategy: invalid target mode");
        last = sw.time;
        mode = sw.mode;
    }
}

namespace detail {

inline void require_state_only(const SwitchingProblem& problem) {
    if (!problem.drivers_state_only())
        throw OracleError("driver depends on (y, z, q); unsupported for the switching oracle");
}

inline double state_driver(const SwitchingProblem& problem, std::size_t i, double t, std::span<const double> x) {
    static const std::array<double, SwitchingProblem::max_slots> zeros{};
    return problem.driver(i, t, x, std::span<const double>(zeros.data(), problem.modes()),
                          std::span<const double>(zeros.data(), problem.brownian_dim()), 0.0);
}

inline void cost_matrix(const SwitchingProblem& problem, double t, std::span<const double> x, std::span<double> g) {
    const std::size_t m = problem.modes();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) g[i * m + j] = problem.cost(i, j, t, x);
}

}  // namespace detail

/// Payoff of an open-loop strategy along each path: left-endpoint Riemann sum
/// of the active driver, minus switching costs, plus the terminal payoff of
/// the final mode. A switch inside (t_n, t_{n+1}) is charged at the left state
/// of that step and takes effect from step n + 1.
inline std::vector<double> strategy_payoff(const SwitchingProblem& problem, const PathSet& paths,
                                           const Strategy& strategy) {
    detail::require_state_only(problem);
    const double t0 = paths.times.front(), T = paths.times.back();
    check_admissible(strategy, problem.modes(), t0, T);
    const double eps = 1e-12 * std::max(1.0, T);
    const std::size_t N = paths.n_steps;

    // step at which each switch is charged, and whether it already applies to that step
    std::vector<std::size_t> charge_step;
    std::vector<bool> applies_now;
    for (const auto& sw : strategy.switches) {
        std::size_t n = 0;
        while (n < N && paths.times[n + 1] <= sw.time + eps) ++n;
        charge_step.push_back(n);
        applies_now.push_back(std::abs(paths.times[n] - sw.time) <= eps);
    }

    std::vector<double> out(paths.n_paths);
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        double total = 0.0;
        std::size_t mode = strategy.initial_mode;
        std::size_t s = 0;
        for (std::size_t n = 0; n < N; ++n) {
            const double tn = paths.times[n];
            auto xn = paths.state(p, n);
            std::size_t deferred_mode = mode;
            bool deferred = false;
            while (s < strategy.switches.size() && charge_step[s] == n) {
                const auto& sw = strategy.switches[s];
                std::size_t from = deferred ? deferred_mode : mode;
                total -= problem.cost(from, sw.mode, sw.time, xn);
                if (applies_now[s] && !deferred)
                    mode = sw.mode;
                else {
                    deferred = true;
                    deferred_mode = sw.mode;
                }
                ++s;
            }
            total += detail::state_driver(problem, mode, tn, xn) * paths.dt();
            if (deferred) mode = deferred_mode;
        }
        auto xT = paths.state(p, N);
        while (s < strategy.switches.size()) {
            total -= problem.cost(mode, strategy.switches[s].mode, T, xT);
            mode = strategy.switches[s].mode;
            ++s;
        }
        out[p] = total + problem.terminal(mode, xT);
    }
    return out;
}

namespace detail {

inline bool sampled_zero_noise(const SwitchingProblem& problem) {
    if (problem.diffusion_identically_zero() && problem.jump_identically_zero()) return true;
    auto samples = sample_cloud(problem, 5, 32, 99);
    const std::size_t k = problem.state_dim(), d = problem.brownian_dim();
    std::vector<double> sigma(k * d), beta(k);
    for (const auto& s : samples) {
        problem.diffusion(s.t, s.x, sigma);
        for (double v : sigma)
            if (v != 0.0) return false;
        for (const auto& a : problem.levy().atoms()) {
            problem.jump(s.x, a.mark, beta);
            for (double v : beta)
                if (v != 0.0) return false;
        }
    }
    return true;
}

}  // namespace detail

struct DeterministicDpResult {
    std::vector<double> values;               // per mode at (t, x)
    std::vector<std::vector<double>> levels;  // [step][mode]
    PathSet path;
};

/// Exact backward recursion along the deterministic state path.
inline DeterministicDpResult dp_switching_value_deterministic(const SwitchingProblem& problem, double t,
                                                              std::span<const double> x, std::size_t n_steps,
                                                              double sweep_tolerance = 1e-12) {
    detail::require_state_only(problem);
    if (!detail::sampled_zero_noise(problem))
        throw OracleError("deterministic dynamic programming needs sigma = 0 and beta = 0");
    const std::size_t m = problem.modes();
    DeterministicDpResult res;
    res.path = simulate_paths(problem, t, x, 1, n_steps, 0);
    const double dt = res.path.dt();
    res.levels.assign(n_steps + 1, std::vector<double>(m));
    auto xT = res.path.state(0, n_steps);
    for (std::size_t i = 0; i < m; ++i) res.levels[n_steps][i] = problem.terminal(i, xT);
    std::vector<double> g(m * m);
    for (std::size_t n = n_steps; n-- > 0;) {
        const double tn = res.path.times[n];
        auto xn = res.path.state(0, n);
        auto& v = res.levels[n];
        for (std::size_t i = 0; i < m; ++i)
            v[i] = res.levels[n + 1][i] + dt * detail::state_driver(problem, i, tn, xn);
        detail::cost_matrix(problem, tn, xn, g);
        if (!obstacle_sweep(v, g, sweep_tolerance, m + 2))
            throw OracleError("obstacle sweep did not terminate at step " + std::to_string(n));
    }
    res.values = res.levels.front();
    return res;
}

inline constexpr double kMaxEnumeratedStrategies = 1e7;

/// Number of strategies with at most `max_switches` switches on `n_times` grid times.
inline double count_strategies(std::size_t n_times, std::size_t modes, std::size_t max_switches) {
    double total = 0.0, multisets = 1.0, targets = 1.0;
    for (std::size_t s = 0; s <= max_switches; ++s) {
        if (s > 0) {
            multisets *= static_cast<double>(n_times + s - 1) / static_cast<double>(s);
            targets *= static_cast<double>(modes - 1);
        }
        total += multisets * targets;
    }
    return total;
}

/// Brute-force maximum of strategy_payoff over every strategy whose switches
/// sit on grid times in [t, T) with at most `max_switches` switches.
inline std::vector<double> enumerate_strategies_value(const SwitchingProblem& problem, double t,
                                                      std::span<const double> x, std::size_t n_steps,
                                                      std::size_t max_switches) {
    detail::require_state_only(problem);
    if (!detail::sampled_zero_noise(problem))
        throw OracleError("strategy enumeration needs deterministic dynamics");
    const std::size_t m = problem.modes();
    if (count_strategies(n_steps, m, max_switches) > kMaxEnumeratedStrategies)
        throw OracleError("strategy enumeration exceeds the combinatorial guard");
    PathSet path = simulate_paths(problem, t, x, 1, n_steps, 0);

    std::vector<double> best(m, -std::numeric_limits<double>::infinity());
    Strategy strat;
    auto visit = [&](auto&& self, std::size_t first_step, std::size_t mode) -> void {
        double v = strategy_payoff(problem, path, strat)[0];
        best[strat.initial_mode] = std::max(best[strat.initial_mode], v);
        if (strat.switches.size() == max_switches) return;
        for (std::size_t n = first_step; n < n_steps; ++n)
            for (std::size_t j = 0; j < m; ++j) {
                if (j == mode) continue;
                strat.switches.push_back({path.times[n], j});
                self(self, n, j);
                strat.switches.pop_back();
            }
    };
    for (std::size_t i = 0; i < m; ++i) {
        strat = Strategy{i, {}};
        visit(visit, 0, i);
    }
    return best;
}

struct RegressionResult {
    std::vector<double> values;  // per mode at (t, x)
    std::vector<double> standard_error;  // bootstrap, per mode
};

namespace detail {

/// Exponents of every monomial of total degree <= degree in `dims` variables.
inline std::vector<std::vector<int>> monomials(std::size_t dims, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dims, 0);
    auto rec = [&](auto&& self, std::size_t r, int left) -> void {
        if (r == dims) {
            out.push_back(cur);
            return;
        }
        for (int e = 0; e <= left; ++e) {
            cur[r] = e;
            self(self, r + 1, left - e);
        }
        cur[r] = 0;
    };
    rec(rec, 0, degree);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        int da = 0, db = 0;
        for (int v : a) da += v;
        for (int v : b) db += v;
        return da < db;
    });
    return out;
}

/// Either one shared value or one value per (path, step).
struct PathTable {
    bool constant = true;
    double value = 0.0;
    std::vector<double> data;
    std::size_t steps = 0;
    double at(std::size_t path, std::size_t step) const {
        return constant ? value : data[path * steps + step];
    }
};

struct RegressionInputs {
    std::size_t m = 0, n_steps = 0, n_paths = 0, dim = 0;
    double dt = 0.0;
    std::vector<PathTable> driver;  // per mode, steps 0..N-1
    std::vector<PathTable> cost;    // m*m, steps 0..N-1
    std::vector<PathTable> terminal;
};

template <class Fn>
PathTable tabulate(bool constant, std::size_t n_paths, std::size_t steps, Fn&& fn) {
    PathTable tab;
    tab.constant = constant;
    tab.steps = steps;
    if (constant) {
        tab.value = fn(0, 0);
        return tab;
    }
    tab.data.resize(n_paths * steps);
    for (std::size_t p = 0; p < n_paths; ++p)
        for (std::size_t n = 0; n < steps; ++n) tab.data[p * steps + n] = fn(p, n);
    return tab;
}

inline RegressionInputs regression_inputs(const SwitchingProblem& problem, const PathSet& paths) {
    RegressionInputs in;
    in.m = problem.modes();
    in.n_steps = paths.n_steps;
    in.n_paths = paths.n_paths;
    in.dim = paths.dim;
    in.dt = paths.dt();
    const std::size_t N = paths.n_steps;
    for (std::size_t i = 0; i < in.m; ++i) {
        in.driver.push_back(tabulate(problem.driver_expr(i).is_constant(), paths.n_paths, N,
                                     [&](std::size_t p, std::size_t n) {
                                         return state_driver(problem, i, paths.times[n], paths.state(p, n));
                                     }));
        in.terminal.push_back(tabulate(problem.terminal_expr(i).is_constant(), paths.n_paths, 1,
                                       [&](std::size_t p, std::size_t) {
                                           return problem.terminal(i, paths.state(p, N));
                                       }));
    }
    for (std::size_t i = 0; i < in.m; ++i)
        for (std::size_t j = 0; j < in.m; ++j)
            in.cost.push_back(tabulate(problem.cost_expr(i, j).is_constant(), paths.n_paths, N,
                                       [&](std::size_t p, std::size_t n) {
                                           return problem.cost(i, j, paths.times[n], paths.state(p, n));
                                       }));
    return in;
}

/// Backward induction over the paths listed in `rows` (repeats allowed).
inline std::vector<double> regression_backward(const RegressionInputs& in, const PathSet& paths,
                                               const std::vector<std::size_t>& rows, int degree,
                                               double sweep_tolerance) {
    const std::size_t m = in.m, P = rows.size(), k = in.dim, N = in.n_steps;
    std::vector<std::vector<double>> value(m, std::vector<double>(P));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t r = 0; r < P; ++r) value[i][r] = in.terminal[i].at(rows[r], 0);

    std::vector<double> v(m), g(m * m), mean(k), scale(k);
    for (std::size_t n = N; n-- > 0;) {
        // dimensions that actually vary across paths at this step
        std::fill(mean.begin(), mean.end(), 0.0);
        std::fill(scale.begin(), scale.end(), 0.0);
        for (std::size_t r = 0; r < P; ++r) {
            auto x = paths.state(rows[r], n);
            for (std::size_t c = 0; c < k; ++c) mean[c] += x[c];
        }
        for (auto& mu : mean) mu /= static_cast<double>(P);
        for (std::size_t r = 0; r < P; ++r) {
            auto x = paths.state(rows[r], n);
            for (std::size_t c = 0; c < k; ++c) scale[c] += (x[c] - mean[c]) * (x[c] - mean[c]);
        }
        std::vector<std::size_t> active;
        for (std::size_t c = 0; c < k; ++c) {
            scale[c] = std::sqrt(scale[c] / static_cast<double>(P));
            if (scale[c] > 1e-12 * (1.0 + std::abs(mean[c]))) active.push_back(c);
        }

        std::vector<std::vector<double>> cont(m, std::vector<double>(P));
        if (active.empty()) {
            for (std::size_t i = 0; i < m; ++i) {
                const auto& col = value[i];
                bool same = std::all_of(col.begin(), col.end(), [&](double a) { return a == col[0]; });
                double c = col[0];
                if (!same) {
                    c = 0.0;
                    for (double a : col) c += a;
                    c /= static_cast<double>(P);
                }
                std::fill(cont[i].begin(), cont[i].end(), c);
            }
        } else {
            auto exps = monomials(active.size(), degree);
            const std::size_t nb = exps.size();
            if (P < 10 * nb)
                throw OracleError("regression needs at least 10 paths per basis function (step " +
                                  std::to_string(n) + ")");
            Eigen::MatrixXd phi(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(nb));
            for (std::size_t r = 0; r < P; ++r) {
                auto x = paths.state(rows[r], n);
                for (std::size_t b = 0; b < nb; ++b) {
                    double f = 1.0;
                    for (std::size_t a = 0; a < active.size(); ++a) {
                        double s = (x[active[a]] - mean[active[a]]) / scale[active[a]];
                        for (int e = 0; e < exps[b][a]; ++e) f *= s;
                    }
                    phi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = f;
                }
            }
            Eigen::MatrixXd gram = phi.transpose() * phi;
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
            qr.setThreshold(1e-10);
            if (qr.rank() < static_cast<Eigen::Index>(nb))
                throw OracleError("rank-deficient regression at step " + std::to_string(n));
            for (std::size_t i = 0; i < m; ++i) {
                Eigen::Map<const Eigen::VectorXd> target(value[i].data(), static_cast<Eigen::Index>(P));
                Eigen::VectorXd coef = qr.solve(phi.transpose() * target);
                Eigen::VectorXd fitted = phi * coef;
                for (std::size_t r = 0; r < P; ++r) cont[i][r] = fitted(static_cast<Eigen::Index>(r));
            }
        }

        for (std::size_t r = 0; r < P; ++r) {
            const std::size_t p = rows[r];
            for (std::size_t i = 0; i < m; ++i) v[i] = cont[i][r] + in.dt * in.driver[i].at(p, n);
            for (std::size_t c = 0; c < m * m; ++c) g[c] = in.cost[c].at(p, n);
            if (!obstacle_sweep(v, g, sweep_tolerance, m + 2))
                throw OracleError("obstacle sweep did not terminate at step " + std::to_string(n));
            for (std::size_t i = 0; i < m; ++i) value[i][r] = v[i];
        }
    }

    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& col = value[i];
        bool same = std::all_of(col.begin(), col.end(), [&](double a) { return a == col[0]; });
        if (same) {
            out[i] = col[0];
            continue;
        }
        double s = 0.0;
        for (double a : col) s += a;
        out[i] = s / static_cast<double>(P);
    }
    return out;
}

}  // namespace detail

struct RegressionOptions {
    int basis_degree = 2;
    std::size_t bootstrap = 200;
    std::uint64_t bootstrap_seed = 4242;
    double sweep_tolerance = 1e-12;
};

/// Regression dynamic programming over simulated paths; continuation values are
/// least-squares fits on polynomial features of the state.
inline RegressionResult regression_switching_value(const SwitchingProblem& problem, const PathSet& paths,
                                                   const RegressionOptions& opt = {}) {
    detail::require_state_only(problem);
    if (opt.basis_degree < 0) throw std::invalid_argument("regression: basis degree must be nonnegative");
    auto basis = detail::monomials(paths.dim, opt.basis_degree).size();
    if (paths.n_paths < 10 * basis) throw OracleError("regression needs at least 10 paths per basis function");

    auto inputs = detail::regression_inputs(problem, paths);
    std::vector<std::size_t> rows(paths.n_paths);
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;

    RegressionResult res;
    res.values = detail::regression_backward(inputs, paths, rows, opt.basis_degree, opt.sweep_tolerance);
    res.standard_error.assign(problem.modes(), 0.0);
    if (opt.bootstrap < 2) return res;

    std::vector<std::vector<double>> reps;
    for (std::size_t b = 0; b < opt.bootstrap; ++b) {
        RandomStream rng(opt.bootstrap_seed, b);
        for (auto& r : rows) r = static_cast<std::size_t>(rng.next_u64() % paths.n_paths);
        reps.push_back(detail::regression_backward(inputs, paths, rows, opt.basis_degree, opt.sweep_tolerance));
    }
    for (std::size_t i = 0; i < problem.modes(); ++i) {
        double mean = 0.0;
        for (const auto& r : reps) mean += r[i];
        mean /= static_cast<double>(reps.size());
        double var = 0.0;
        for (const auto& r : reps) var += (r[i] - mean) * (r[i] - mean);
        res.standard_error[i] = std::sqrt(var / static_cast<double>(reps.size() - 1));
    }
    return res;
}

}  // namespace swipde
