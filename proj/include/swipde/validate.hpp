#pragma once

// Sampling-based checks of the standing assumptions on a SwitchingProblem.
// A check can falsify an assumption on the sampled region; it never proves one.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swipde/expr.hpp"
#include "swipde/problem.hpp"
#include "swipde/random.hpp"

namespace swipde {

enum class CheckStatus { Pass, Fail, Unchecked };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::Unchecked: return "unchecked";
    }
    return "?";
}

struct SamplePoint {
    double t = 0.0;
    std::vector<double> x;
};

struct Witness {
    std::string description;
    SamplePoint point;
    std::vector<std::size_t> modes;  // zero-based; cycles list the start mode twice
};

struct CheckResult {
    std::string id;
    CheckStatus status = CheckStatus::Unchecked;
    std::string detail;
    std::vector<Witness> witnesses;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    std::map<std::string, double> constants;

    bool passed() const {
        return std::none_of(checks.begin(), checks.end(),
                            [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
    }

    const CheckResult* find(const std::string& id) const {
        for (const auto& c : checks)
            if (c.id == id) return &c;
        return nullptr;
    }

    CheckStatus status(const std::string& id) const {
        const auto* c = find(id);
        return c ? c->status : CheckStatus::Unchecked;
    }

    void merge(const ValidationReport& other) {
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
        for (const auto& [k, v] : other.constants) constants[k] = v;
    }

    /// Line-oriented text; every line is "<kind> <id>: <payload>".
    std::string to_text() const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& c : checks) {
            os << "check " << c.id << ": " << to_string(c.status) << '\n';
            if (!c.detail.empty()) os << "detail " << c.id << ": " << c.detail << '\n';
            for (const auto& w : c.witnesses) {
                os << "witness " << c.id << ": " << w.description;
                if (!w.modes.empty()) {
                    os << " modes=(";
                    for (std::size_t i = 0; i < w.modes.size(); ++i) os << (i ? "," : "") << w.modes[i] + 1;
                    os << ')';
                }
                os << " t=" << w.point.t << " x=(";
                for (std::size_t i = 0; i < w.point.x.size(); ++i) os << (i ? "," : "") << w.point.x[i];
                os << ")\n";
            }
        }
        for (const auto& [k, v] : constants) os << "constant " << k << ": " << v << '\n';
        os << "overall: " << (passed() ? "pass" : "fail") << '\n';
        return os.str();
    }
};

namespace detail {

inline std::vector<double> lobatto_points(double lo, double hi, std::size_t n) {
    std::vector<double> pts;
    if (n == 1) return {0.5 * (lo + hi)};
    for (std::size_t j = 0; j < n; ++j) {
        double c = std::cos(std::numbers::pi * static_cast<double>(n - 1 - j) / static_cast<double>(n - 1));
        pts.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * c);
    }
    return pts;
}

inline double slot_radius(const SwitchingProblem& p) {
    double r = 1.0;
    for (std::size_t i = 0; i < p.state_dim(); ++i)
        r = std::max({r, std::abs(p.box_lower()[i]), std::abs(p.box_upper()[i])});
    return r;
}

}  // namespace detail

/// Tensor of Chebyshev-Lobatto points over [0,T] x box, plus `n_random` uniform
/// points drawn from `seed`.
inline std::vector<SamplePoint> sample_cloud(const SwitchingProblem& p, std::size_t per_dim,
                                             std::size_t n_random, std::uint64_t seed) {
    const std::size_t k = p.state_dim();
    std::vector<std::vector<double>> axes;
    axes.push_back(detail::lobatto_points(0.0, p.horizon(), per_dim));
    for (std::size_t r = 0; r < k; ++r)
        axes.push_back(detail::lobatto_points(p.box_lower()[r], p.box_upper()[r], per_dim));

    std::vector<SamplePoint> out;
    std::vector<std::size_t> idx(k + 1, 0);
    for (;;) {
        SamplePoint s;
        s.t = axes[0][idx[0]];
        for (std::size_t r = 0; r < k; ++r) s.x.push_back(axes[r + 1][idx[r + 1]]);
        out.push_back(std::move(s));
        std::size_t a = 0;
        while (a < idx.size() && ++idx[a] == axes[a].size()) idx[a++] = 0;
        if (a == idx.size()) break;
    }
    RandomStream rng(seed, 0x5a4d);
    for (std::size_t n = 0; n < n_random; ++n) {
        SamplePoint s;
        s.t = rng.uniform(0.0, p.horizon());
        for (std::size_t r = 0; r < k; ++r) s.x.push_back(rng.uniform(p.box_lower()[r], p.box_upper()[r]));
        out.push_back(std::move(s));
    }
    return out;
}

/// Simple directed cycles of m modes, one representative per rotation class
/// (the representative starts at its smallest mode). The start mode is not repeated.
inline std::vector<std::vector<std::size_t>> enumerate_simple_cycles(std::size_t m) {
    std::vector<std::vector<std::size_t>> cycles;
    std::vector<std::size_t> path;
    std::vector<bool> used(m, false);
    // depth-first extension over modes larger than the start
    auto extend = [&](auto&& self, std::size_t start) -> void {
        if (path.size() >= 2) cycles.push_back(path);
        for (std::size_t next = start + 1; next < m; ++next) {
            if (used[next]) continue;
            used[next] = true;
            path.push_back(next);
            self(self, start);
            path.pop_back();
            used[next] = false;
        }
    };
    for (std::size_t s = 0; s < m; ++s) {
        path = {s};
        used.assign(m, false);
        used[s] = true;
        extend(extend, s);
    }
    return cycles;
}

inline ValidationReport check_no_free_loop(const SwitchingProblem& p, const std::vector<SamplePoint>& samples) {
    if (samples.empty()) throw std::invalid_argument("check_no_free_loop: empty sample set");
    const std::size_t m = p.modes();
    ValidationReport rep;

    CheckResult nonneg{"H2.nonnegative", CheckStatus::Pass, {}, {}};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            for (const auto& s : samples) {
                double g = p.cost(i, j, s.t, s.x);
                if (g < 0.0) {
                    nonneg.status = CheckStatus::Fail;
                    std::ostringstream os;
                    os.precision(17);
                    os << "g=" << g;
                    nonneg.witnesses.push_back({os.str(), s, {i, j}});
                    break;
                }
            }
        }

    CheckResult loop{"H2.no_free_loop", CheckStatus::Pass, {}, {}};
    auto cycles = enumerate_simple_cycles(m);
    loop.detail = std::to_string(cycles.size()) + " simple cycles";
    for (const auto& c : cycles) {
        for (const auto& s : samples) {
            double sum = 0.0;
            for (std::size_t a = 0; a < c.size(); ++a) sum += p.cost(c[a], c[(a + 1) % c.size()], s.t, s.x);
            if (!(sum > 0.0)) {
                loop.status = CheckStatus::Fail;
                std::ostringstream os;
                os.precision(17);
                os << "cycle cost sum=" << sum;
                auto modes = c;
                modes.push_back(c.front());
                loop.witnesses.push_back({os.str(), s, modes});
                break;
            }
        }
    }
    rep.checks.push_back(std::move(nonneg));
    rep.checks.push_back(std::move(loop));
    return rep;
}

inline ValidationReport check_consistency(const SwitchingProblem& p, const std::vector<std::vector<double>>& xs) {
    if (xs.empty()) throw std::invalid_argument("check_consistency: empty sample set");
    const std::size_t m = p.modes();
    const double T = p.horizon();
    CheckResult res{"H3.consistency", CheckStatus::Pass, {}, {}};
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& x : xs) {
            double hi = p.terminal(i, x);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = i;
            for (std::size_t j = 0; j < m; ++j) {
                if (j == i) continue;
                double v = p.terminal(j, x) - p.cost(i, j, T, x);
                if (v > best) {
                    best = v;
                    arg = j;
                }
            }
            if (hi < best - 1e-12 * (1.0 + std::abs(best))) {
                res.status = CheckStatus::Fail;
                std::ostringstream os;
                os.precision(17);
                os << "h_i=" << hi << " < h_j-g_ij=" << best;
                res.witnesses.push_back({os.str(), {T, x}, {i, arg}});
                break;
            }
        }
    }
    ValidationReport rep;
    rep.checks.push_back(std::move(res));
    return rep;
}

/// Largest sampled difference quotient of the drivers in their (y, z, q)
/// arguments under the l1 norm. A lower bound on the true Lipschitz constant.
inline double estimate_lipschitz(const SwitchingProblem& p, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 2) throw std::invalid_argument("estimate_lipschitz: need at least 2 samples");
    const std::size_t m = p.modes(), k = p.state_dim(), d = p.brownian_dim();
    const std::size_t slots = m + d + 1;
    const double radius = detail::slot_radius(p);
    RandomStream rng(seed, 0x11b);

    std::vector<double> x(k), a(slots), b(slots);
    auto eval = [&](std::size_t i, double t, const std::vector<double>& v) {
        return p.driver(i, t, x, std::span<const double>(v.data(), m), std::span<const double>(v.data() + m, d),
                        v[m + d]);
    };

    double best = 0.0;
    bool any_distinct = false;
    for (std::size_t s = 0; s < n_samples; ++s) {
        double t = rng.uniform(0.0, p.horizon());
        for (std::size_t r = 0; r < k; ++r) x[r] = rng.uniform(p.box_lower()[r], p.box_upper()[r]);
        for (auto& v : a) v = rng.uniform(-radius, radius);
        // alternate coarse and fine separations so local slopes are resolved
        double scale = (s % 2 == 0) ? radius : radius * 1e-4;
        for (std::size_t i = 0; i < m; ++i) {
            double fa = eval(i, t, a);
            // one coordinate at a time
            for (std::size_t c = 0; c < slots; ++c) {
                b = a;
                b[c] += rng.uniform(-scale, scale);
                double delta = b[c] - a[c];
                if (delta == 0.0) continue;
                any_distinct = true;
                best = std::max(best, std::abs(eval(i, t, b) - fa) / std::abs(delta));
            }
            // all coordinates at once
            double dist = 0.0;
            for (std::size_t c = 0; c < slots; ++c) {
                b[c] = a[c] + rng.uniform(-scale, scale);
                dist += std::abs(b[c] - a[c]);
            }
            if (dist > 0.0) {
                any_distinct = true;
                best = std::max(best, std::abs(eval(i, t, b) - fa) / dist);
            }
        }
    }
    if (!any_distinct) throw std::invalid_argument("estimate_lipschitz: all sampled pairs identical");
    return best;
}

namespace detail {

inline double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
}

inline std::vector<double> dilate(const std::vector<double>& x, double factor) {
    auto y = x;
    for (auto& v : y) v *= factor;
    return y;
}

}  // namespace detail

/// Dilation factor used to expose growth beyond the sampled box.
inline constexpr double kGrowthDilation = 64.0;
/// A fitted bound is rejected when it grows by more than this factor under dilation.
inline constexpr double kGrowthTolerance = 4.0;

inline ValidationReport check_growth_and_jump_bounds(const SwitchingProblem& p,
                                                      const std::vector<SamplePoint>& samples) {
    if (samples.empty()) throw std::invalid_argument("check_growth_and_jump_bounds: empty sample set");
    const std::size_t m = p.modes(), k = p.state_dim(), d = p.brownian_dim();
    const auto& levy = p.levy();
    ValidationReport rep;

    auto bound_check = [&](const std::string& id, auto&& ratio_at) -> double {
        CheckResult res{id, CheckStatus::Pass, {}, {}};
        double fitted = 0.0;
        try {
            for (const auto& s : samples) fitted = std::max(fitted, ratio_at(s.x));
            if (!std::isfinite(fitted)) {
                res.status = CheckStatus::Fail;
                res.detail = "non-finite fitted constant";
            }
            for (const auto& s : samples) {
                auto far = detail::dilate(s.x, kGrowthDilation);
                double r = ratio_at(far);
                if (r > kGrowthTolerance * fitted + 1e-12) {
                    res.status = CheckStatus::Fail;
                    std::ostringstream os;
                    os.precision(17);
                    os << "bound " << r << " at dilated point exceeds " << kGrowthTolerance << "x fitted " << fitted;
                    res.witnesses.push_back({os.str(), {s.t, far}, {}});
                    break;
                }
            }
        } catch (const EvalError& e) {
            res.status = CheckStatus::Fail;
            res.detail = e.what();
        }
        rep.checks.push_back(std::move(res));
        return fitted;
    };

    std::vector<double> beta(k);
    double c_beta = bound_check("jump.beta_bound", [&](const std::vector<double>& x) {
        double best = 0.0;
        for (const auto& a : levy.atoms()) {
            p.jump(x, a.mark, beta);
            double scale = std::min(1.0, detail::norm(a.mark));
            best = std::max(best, detail::norm(beta) / scale);
        }
        return best;
    });
    rep.constants["beta_c"] = c_beta;

    double c_gamma = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double c = bound_check("jump.gamma_bound." + std::to_string(i + 1), [&](const std::vector<double>& x) {
            double best = 0.0;
            for (const auto& a : levy.atoms()) {
                double scale = std::min(1.0, detail::norm(a.mark));
                best = std::max(best, std::abs(p.gamma(i, x, a.mark)) / scale);
            }
            return best;
        });
        c_gamma = std::max(c_gamma, c);
    }
    rep.constants["gamma_C"] = c_gamma;

    const double pw = p.growth_exponent();
    std::vector<double> y0(m, 0.0), z0(d, 0.0);
    double c_driver = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        // time enters through the sample's own t; dilation keeps it
        double c = 0.0;
        CheckResult res{"H1.growth." + std::to_string(i + 1), CheckStatus::Pass, {}, {}};
        try {
            for (const auto& s : samples)
                c = std::max(c, std::abs(p.driver(i, s.t, s.x, y0, z0, 0.0)) /
                                    (1.0 + std::pow(detail::norm(s.x), pw)));
            for (const auto& s : samples) {
                auto far = detail::dilate(s.x, kGrowthDilation);
                double r = std::abs(p.driver(i, s.t, far, y0, z0, 0.0)) / (1.0 + std::pow(detail::norm(far), pw));
                if (r > kGrowthTolerance * c + 1e-12) {
                    res.status = CheckStatus::Fail;
                    std::ostringstream os;
                    os.precision(17);
                    os << "|f(t,x,0,0,0)|/(1+|x|^p)=" << r << " exceeds " << kGrowthTolerance << "x fitted " << c;
                    res.witnesses.push_back({os.str(), {s.t, far}, {i}});
                    break;
                }
            }
        } catch (const EvalError& e) {
            res.status = CheckStatus::Fail;
            res.detail = e.what();
        }
        rep.checks.push_back(std::move(res));
        c_driver = std::max(c_driver, c);
    }
    rep.constants["driver_growth_C"] = c_driver;
    return rep;
}

/// Checks gamma_i >= 0, monotonicity of each driver in q, and in the
/// off-diagonal y^j. The H4 pair decides whether comparison-based suites apply.
inline ValidationReport check_monotone_case(const SwitchingProblem& p, const std::vector<SamplePoint>& samples,
                                            std::uint64_t seed = 7) {
    if (samples.empty()) throw std::invalid_argument("check_monotone_case: empty sample set");
    const std::size_t m = p.modes(), d = p.brownian_dim();
    const std::size_t slots = m + d + 1;
    const double radius = detail::slot_radius(p);
    ValidationReport rep;

    CheckResult gam{"H4.gamma_nonnegative", CheckStatus::Pass, {}, {}};
    for (std::size_t i = 0; i < m && gam.witnesses.size() < m; ++i)
        for (const auto& s : samples) {
            bool bad = false;
            for (const auto& a : p.levy().atoms()) {
                double g = p.gamma(i, s.x, a.mark);
                if (g < 0.0) {
                    gam.status = CheckStatus::Fail;
                    std::ostringstream os;
                    os.precision(17);
                    os << "gamma=" << g << " at mark e1=" << a.mark[0];
                    gam.witnesses.push_back({os.str(), s, {i}});
                    bad = true;
                    break;
                }
            }
            if (bad) break;
        }

    RandomStream rng(seed, 0x404);
    std::vector<double> a(slots), b(slots);
    auto eval = [&](std::size_t i, const SamplePoint& s, const std::vector<double>& v) {
        return p.driver(i, s.t, s.x, std::span<const double>(v.data(), m), std::span<const double>(v.data() + m, d),
                        v[m + d]);
    };
    auto monotone_in = [&](CheckResult& res, std::size_t i, std::size_t slot, const std::string& label) {
        for (const auto& s : samples) {
            for (int rep_i = 0; rep_i < 4; ++rep_i) {
                for (auto& v : a) v = rng.uniform(-radius, radius);
                b = a;
                double delta = rng.uniform(0.0, radius) + 1e-6;
                b[slot] += delta;
                double fa = eval(i, s, a), fb = eval(i, s, b);
                if (fb < fa - 1e-12 * (1.0 + std::abs(fa))) {
                    res.status = CheckStatus::Fail;
                    std::ostringstream os;
                    os.precision(17);
                    os << label << ": f(" << label << "=" << a[slot] << ")=" << fa << " > f(" << label << "="
                       << b[slot] << ")=" << fb;
                    res.witnesses.push_back({os.str(), s, {i}});
                    return;
                }
            }
        }
    };

    CheckResult mq{"H4.monotone_q", CheckStatus::Pass, {}, {}};
    for (std::size_t i = 0; i < m; ++i) monotone_in(mq, i, m + d, "q");

    CheckResult my{"H1.monotone_y", CheckStatus::Pass, {}, {}};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) monotone_in(my, i, j, "y" + std::to_string(j + 1));

    rep.checks.push_back(std::move(gam));
    rep.checks.push_back(std::move(mq));
    rep.checks.push_back(std::move(my));
    return rep;
}

/// True when both H4 conditions passed in `report`.
inline bool monotone_case_holds(const ValidationReport& report) {
    return report.status("H4.gamma_nonnegative") == CheckStatus::Pass &&
           report.status("H4.monotone_q") == CheckStatus::Pass;
}

struct ValidationOptions {
    std::size_t per_dim = 5;
    std::size_t n_random = 64;
    std::size_t lipschitz_samples = 256;
    std::uint64_t seed = 20240601;
};

/// Runs every validator over one sample cloud and records the Lipschitz estimate.
inline ValidationReport validate_problem(const SwitchingProblem& p, const ValidationOptions& opt = {}) {
    ValidationReport rep;
    rep.checks.push_back({"H1.continuity", CheckStatus::Unchecked, "not falsifiable by sampling", {}});
    auto samples = sample_cloud(p, opt.per_dim, opt.n_random, opt.seed);
    std::vector<std::vector<double>> xs;
    for (const auto& s : samples) xs.push_back(s.x);

    rep.merge(check_no_free_loop(p, samples));
    rep.merge(check_consistency(p, xs));
    rep.merge(check_growth_and_jump_bounds(p, samples));
    rep.merge(check_monotone_case(p, samples, opt.seed));
    try {
        rep.constants["C_hat"] = estimate_lipschitz(p, opt.lipschitz_samples, opt.seed);
        rep.checks.push_back({"H1.lipschitz", CheckStatus::Pass, "sampled lower bound only", {}});
    } catch (const EvalError& e) {
        rep.checks.push_back({"H1.lipschitz", CheckStatus::Fail, e.what(), {}});
    }
    return rep;
}

}  // namespace swipde
