#pragma once

// Switching problem definition: dynamics, drivers, costs and terminal payoffs.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swipde/expr.hpp"
#include "swipde/measure.hpp"

namespace swipde {

class ProblemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Declarative, string-valued form of a problem. Empty coefficient lists mean
/// "identically zero"; per-mode lists of length one are broadcast to every mode.
/// Mode indices in `costs` are zero-based.
struct ProblemDefinition {
    std::size_t modes = 2;
    std::size_t state_dim = 1;
    std::size_t brownian_dim = 1;
    std::size_t mark_dim = 1;
    double horizon = 1.0;
    int growth_exponent = 1;
    std::vector<LevyAtom> atoms;

    std::vector<std::string> drift;      // k entries over (t, x)
    std::vector<std::string> diffusion;  // k*d entries, row-major, over (t, x)
    std::vector<std::string> jump;       // k entries over (x, e)
    std::vector<std::string> gamma;      // per mode, over (x, e)
    std::vector<std::string> driver;     // per mode, over (t, x, y, z, q)
    std::vector<std::string> terminal;   // per mode, over x
    std::map<std::pair<std::size_t, std::size_t>, std::string> costs;  // over (t, x)
    std::optional<std::string> default_cost;

    std::vector<double> box_lower;
    std::vector<double> box_upper;
};

namespace names {

inline std::string x(std::size_t r) { return "x" + std::to_string(r + 1); }
inline std::string e(std::size_t r) { return "e" + std::to_string(r + 1); }
inline std::string y(std::size_t r) { return "y" + std::to_string(r + 1); }
inline std::string z(std::size_t r) { return "z" + std::to_string(r + 1); }

inline std::vector<std::string> time_space(std::size_t k) {
    std::vector<std::string> v{"t"};
    for (std::size_t r = 0; r < k; ++r) v.push_back(x(r));
    return v;
}

inline std::vector<std::string> space(std::size_t k) {
    std::vector<std::string> v;
    for (std::size_t r = 0; r < k; ++r) v.push_back(x(r));
    return v;
}

inline std::vector<std::string> space_mark(std::size_t k, std::size_t l) {
    auto v = space(k);
    for (std::size_t r = 0; r < l; ++r) v.push_back(e(r));
    return v;
}

inline std::vector<std::string> driver(std::size_t k, std::size_t m, std::size_t d) {
    auto v = time_space(k);
    for (std::size_t r = 0; r < m; ++r) v.push_back(y(r));
    for (std::size_t r = 0; r < d; ++r) v.push_back(z(r));
    v.push_back("q");
    return v;
}

inline VarSet as_set(const std::vector<std::string>& v) { return VarSet(v.begin(), v.end()); }

}  // namespace names

class SwitchingProblem {
public:
    static constexpr std::size_t max_slots = 64;

    explicit SwitchingProblem(ProblemDefinition def) : def_(std::move(def)) {
        const std::size_t m = def_.modes, k = def_.state_dim, d = def_.brownian_dim, l = def_.mark_dim;
        if (m < 2) throw ProblemError("mode count m must be at least 2");
        if (k < 1 || d < 1 || l < 1) throw ProblemError("dimensions k, d, l must be positive");
        if (!(def_.horizon > 0.0)) throw ProblemError("horizon T must be positive");
        if (def_.growth_exponent < 1) throw ProblemError("growth exponent p must be at least 1");
        if (1 + k + m + d + 1 > max_slots || k + l > max_slots)
            throw ProblemError("problem dimensions exceed supported variable count");

        levy_ = FiniteLevyMeasure(l, def_.atoms);

        const auto ts = names::time_space(k);
        const auto xe = names::space_mark(k, l);
        const auto xs = names::space(k);
        const auto dr = names::driver(k, m, d);

        drift_ = compile_list("drift", def_.drift, k, ts, false);
        diffusion_ = compile_list("diffusion", def_.diffusion, k * d, ts, false);
        jump_ = compile_list("jump", def_.jump, k, xe, false);
        gamma_ = compile_list("gamma", def_.gamma, m, xe, true);
        driver_ = compile_list("driver", def_.driver, m, dr, true);
        terminal_ = compile_list("terminal", def_.terminal, m, xs, true);

        cost_.resize(m * m);
        for (const auto& [ij, text] : def_.costs)
            if (ij.first >= m || ij.second >= m)
                throw ProblemError("cost index out of range: g" + std::to_string(ij.first + 1) +
                                   std::to_string(ij.second + 1));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                auto it = def_.costs.find({i, j});
                if (i == j) {
                    if (it != def_.costs.end()) {
                        Expr g = compile("g" + std::to_string(i + 1) + std::to_string(j + 1), it->second, ts);
                        if (!g.is_constant() || g.eval(std::span<const double>{}) != 0.0)
                            throw ProblemError("diagonal switching cost g" + std::to_string(i + 1) +
                                               std::to_string(i + 1) + " must be 0");
                    }
                    cost_[i * m + j] = Expr(0.0);
                    continue;
                }
                std::string label = "g" + std::to_string(i + 1) + std::to_string(j + 1);
                if (it != def_.costs.end())
                    cost_[i * m + j] = compile(label, it->second, ts);
                else if (def_.default_cost)
                    cost_[i * m + j] = compile(label, *def_.default_cost, ts);
                else
                    throw ProblemError("missing switching cost " + label + " and no g_default");
            }
        }

        if (def_.box_lower.empty() && def_.box_upper.empty()) {
            def_.box_lower.assign(k, -1.0);
            def_.box_upper.assign(k, 1.0);
        }
        if (def_.box_lower.size() != k || def_.box_upper.size() != k)
            throw ProblemError("bounding box must have k lower and k upper bounds");
        for (std::size_t r = 0; r < k; ++r)
            if (!(def_.box_lower[r] < def_.box_upper[r]))
                throw ProblemError("bounding box lower bound must be below upper bound");
    }

    const ProblemDefinition& definition() const noexcept { return def_; }
    std::size_t modes() const noexcept { return def_.modes; }
    std::size_t state_dim() const noexcept { return def_.state_dim; }
    std::size_t brownian_dim() const noexcept { return def_.brownian_dim; }
    std::size_t mark_dim() const noexcept { return def_.mark_dim; }
    double horizon() const noexcept { return def_.horizon; }
    int growth_exponent() const noexcept { return def_.growth_exponent; }
    const FiniteLevyMeasure& levy() const noexcept { return levy_; }
    const std::vector<double>& box_lower() const noexcept { return def_.box_lower; }
    const std::vector<double>& box_upper() const noexcept { return def_.box_upper; }

    void drift(double t, std::span<const double> x, std::span<double> out) const {
        auto slots = pack_tx(t, x);
        for (std::size_t r = 0; r < drift_.size(); ++r) out[r] = drift_[r].eval(slots);
    }

    /// Row-major k x d.
    void diffusion(double t, std::span<const double> x, std::span<double> out) const {
        auto slots = pack_tx(t, x);
        for (std::size_t r = 0; r < diffusion_.size(); ++r) out[r] = diffusion_[r].eval(slots);
    }

    void jump(std::span<const double> x, std::span<const double> e, std::span<double> out) const {
        auto slots = pack_xe(x, e);
        for (std::size_t r = 0; r < jump_.size(); ++r) out[r] = jump_[r].eval(slots);
    }

    double gamma(std::size_t i, std::span<const double> x, std::span<const double> e) const {
        return gamma_[i].eval(pack_xe(x, e));
    }

    double driver(std::size_t i, double t, std::span<const double> x, std::span<const double> y,
                  std::span<const double> z, double q) const {
        std::array<double, max_slots> buf{};
        std::size_t n = 0;
        buf[n++] = t;
        for (double v : x) buf[n++] = v;
        for (double v : y) buf[n++] = v;
        for (double v : z) buf[n++] = v;
        buf[n++] = q;
        return driver_[i].eval(std::span<const double>(buf.data(), n));
    }

    double cost(std::size_t i, std::size_t j, double t, std::span<const double> x) const {
        if (i == j) return 0.0;
        return cost_[i * def_.modes + j].eval(pack_tx(t, x));
    }

    double terminal(std::size_t i, std::span<const double> x) const {
        return terminal_[i].eval(std::span<const double>(x.data(), x.size()));
    }

    const Expr& driver_expr(std::size_t i) const { return driver_[i]; }
    const Expr& cost_expr(std::size_t i, std::size_t j) const { return cost_[i * def_.modes + j]; }
    const Expr& terminal_expr(std::size_t i) const { return terminal_[i]; }
    const Expr& gamma_expr(std::size_t i) const { return gamma_[i]; }
    const std::vector<Expr>& drift_exprs() const noexcept { return drift_; }
    const std::vector<Expr>& diffusion_exprs() const noexcept { return diffusion_; }
    const std::vector<Expr>& jump_exprs() const noexcept { return jump_; }

    /// True when every driver depends on (t, x) only.
    bool drivers_state_only() const {
        for (const auto& f : driver_)
            for (const auto& v : f.variables())
                if (v != "t" && v[0] != 'x') return false;
        return true;
    }

    bool diffusion_identically_zero() const { return all_literal_zero(diffusion_); }
    bool jump_identically_zero() const { return all_literal_zero(jump_) || levy_.empty(); }

private:
    static bool all_literal_zero(const std::vector<Expr>& list) {
        for (const auto& e : list)
            if (!e.is_constant() || e.eval(std::span<const double>{}) != 0.0) return false;
        return true;
    }

    static Expr compile(const std::string& label, const std::string& text,
                        const std::vector<std::string>& layout) {
        try {
            return Expr::parse(text, names::as_set(layout)).bind(layout);
        } catch (const ParseError& e) {
            throw ProblemError(label + ": " + e.what());
        } catch (const UndeclaredVariable& e) {
            throw ProblemError(label + ": " + e.what());
        }
    }

    std::vector<Expr> compile_list(const std::string& label, const std::vector<std::string>& texts,
                                   std::size_t count, const std::vector<std::string>& layout,
                                   bool broadcast) const {
        std::vector<Expr> out;
        if (texts.empty()) {
            out.assign(count, Expr(0.0));
            return out;
        }
        if (broadcast && texts.size() == 1) {
            Expr e = compile(label, texts[0], layout);
            out.assign(count, e);
            return out;
        }
        if (texts.size() != count)
            throw ProblemError(label + ": expected " + std::to_string(count) + " entries, got " +
                               std::to_string(texts.size()));
        for (std::size_t r = 0; r < count; ++r)
            out.push_back(compile(label + std::to_string(r + 1), texts[r], layout));
        return out;
    }

    struct Slots {
        std::array<double, max_slots> buf{};
        std::size_t n = 0;
        operator std::span<const double>() const { return {buf.data(), n}; }
    };

    static Slots pack_tx(double t, std::span<const double> x) {
        Slots s;
        s.buf[s.n++] = t;
        for (double v : x) s.buf[s.n++] = v;
        return s;
    }

    static Slots pack_xe(std::span<const double> x, std::span<const double> e) {
        Slots s;
        for (double v : x) s.buf[s.n++] = v;
        for (double v : e) s.buf[s.n++] = v;
        return s;
    }

    ProblemDefinition def_;
    FiniteLevyMeasure levy_;
    std::vector<Expr> drift_, diffusion_, jump_, gamma_, driver_, terminal_, cost_;
};

}  // namespace swipde
