#pragma once

// Reader and writer for the line-oriented problem file.
//
//   [dims]     m, k, d, l, T, p
//   [levy]     one atom per line: "e1 ... el weight"
//   [coeffs]   bR, sigmaRC, betaR over (t, x) / (x, e); gammaI over (x, e)
//   [drivers]  fI over (t, x, y1..ym, z1..zd, q)
//   [costs]    gIJ over (t, x); g_default
//   [terminal] hI over x
//   [box]      lower = ..., upper = ...
//
// Two-index keys accept "sigma12" (single digits) or "sigma1_2".
// Comments start with '#'.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swipde/expr.hpp"
#include "swipde/problem.hpp"

namespace swipde {

class ProblemFileError : public std::runtime_error {
public:
    ProblemFileError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& text, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ProblemFileError("expected a number, got '" + text + "'", line);
    return v;
}

inline std::vector<double> parse_reals(const std::string& text, std::size_t line) {
    std::istringstream is(text);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_real(tok, line));
    return out;
}

inline std::size_t parse_count(const std::string& text, std::size_t line) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw ProblemFileError("expected a positive integer, got '" + text + "'", line);
    return v;
}

/// Splits "12" or "1_2" into one-based (1, 2).
inline std::pair<std::size_t, std::size_t> parse_pair(const std::string& suffix, std::size_t line) {
    auto us = suffix.find('_');
    if (us != std::string::npos)
        return {parse_count(suffix.substr(0, us), line), parse_count(suffix.substr(us + 1), line)};
    if (suffix.size() == 2) return {parse_count(suffix.substr(0, 1), line), parse_count(suffix.substr(1), line)};
    throw ProblemFileError("cannot split index '" + suffix + "'; use the form I_J", line);
}

inline bool has_prefix(const std::string& key, std::string_view prefix, std::string& suffix) {
    if (key.size() <= prefix.size() || key.compare(0, prefix.size(), prefix) != 0) return false;
    suffix = key.substr(prefix.size());
    return suffix.find_first_not_of("0123456789_") == std::string::npos;
}

}  // namespace detail

/// Parses problem text into an uncompiled definition.
inline ProblemDefinition parse_problem(std::istream& in) {
    using detail::trim;
    struct Entry {
        std::string key, value;
        std::size_t line;
    };
    std::map<std::string, std::vector<Entry>> sections;
    std::map<std::string, std::size_t> section_line;
    static const std::set<std::string> known{"dims", "levy", "coeffs", "drivers", "costs", "terminal", "box"};

    std::string current;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ProblemFileError("malformed section header", lineno);
            current = trim(line.substr(1, line.size() - 2));
            if (!known.contains(current)) throw ProblemFileError("unknown section [" + current + "]", lineno);
            if (section_line.contains(current)) throw ProblemFileError("duplicate section [" + current + "]", lineno);
            section_line[current] = lineno;
            sections[current];
            continue;
        }
        if (current.empty()) throw ProblemFileError("entry outside of any section", lineno);
        if (current == "levy") {
            sections[current].push_back({"", line, lineno});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ProblemFileError("expected 'key = value'", lineno);
        sections[current].push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
    }

    for (const char* required : {"dims", "terminal", "box"})
        if (!sections.contains(required))
            throw ProblemFileError(std::string("missing section [") + required + "]", 0);

    ProblemDefinition def;
    std::set<std::string> seen_dims;
    for (const auto& e : sections["dims"]) {
        if (!seen_dims.insert(e.key).second) throw ProblemFileError("duplicate key '" + e.key + "'", e.line);
        if (e.key == "m")
            def.modes = detail::parse_count(e.value, e.line);
        else if (e.key == "k")
            def.state_dim = detail::parse_count(e.value, e.line);
        else if (e.key == "d")
            def.brownian_dim = detail::parse_count(e.value, e.line);
        else if (e.key == "l")
            def.mark_dim = detail::parse_count(e.value, e.line);
        else if (e.key == "T")
            def.horizon = detail::parse_real(e.value, e.line);
        else if (e.key == "p")
            def.growth_exponent = static_cast<int>(detail::parse_count(e.value, e.line));
        else
            throw ProblemFileError("unknown key '" + e.key + "' in [dims]", e.line);
    }
    if (!seen_dims.contains("m") || !seen_dims.contains("k"))
        throw ProblemFileError("[dims] must declare m and k", section_line["dims"]);
    const std::size_t m = def.modes, k = def.state_dim, d = def.brownian_dim, l = def.mark_dim;
    if (m < 2) throw ProblemFileError("m must be at least 2", section_line["dims"]);

    for (const auto& e : sections["levy"]) {
        auto nums = detail::parse_reals(e.value, e.line);
        if (nums.size() != l + 1)
            throw ProblemFileError("levy atom needs " + std::to_string(l) + " mark component(s) and a weight",
                                   e.line);
        LevyAtom atom;
        atom.weight = nums.back();
        nums.pop_back();
        atom.mark = std::move(nums);
        def.atoms.push_back(std::move(atom));
    }

    auto slot = [](std::vector<std::string>& list, std::size_t count, std::size_t index, const Entry& e) {
        if (index < 1 || index > count) throw ProblemFileError("index out of range in '" + e.key + "'", e.line);
        if (list.empty()) list.assign(count, "0");
        list[index - 1] = e.value;
    };

    std::set<std::string> seen;
    auto once = [&](const Entry& e) {
        if (!seen.insert(e.key).second) throw ProblemFileError("duplicate key '" + e.key + "'", e.line);
    };
    auto verify = [](const Entry& e, const std::vector<std::string>& layout) {
        try {
            Expr::parse(e.value, names::as_set(layout));
        } catch (const std::exception& err) {
            throw ProblemFileError(e.key + ": " + err.what(), e.line);
        }
    };
    const auto ts = names::time_space(k);
    const auto xe = names::space_mark(k, l);

    std::string suffix;
    for (const auto& e : sections["coeffs"]) {
        once(e);
        if (detail::has_prefix(e.key, "sigma", suffix)) {
            auto [r, c] = detail::parse_pair(suffix, e.line);
            if (r < 1 || r > k || c < 1 || c > d)
                throw ProblemFileError("index out of range in '" + e.key + "'", e.line);
            verify(e, ts);
            slot(def.diffusion, k * d, (r - 1) * d + c, e);
        } else if (detail::has_prefix(e.key, "beta", suffix)) {
            verify(e, xe);
            slot(def.jump, k, detail::parse_count(suffix, e.line), e);
        } else if (detail::has_prefix(e.key, "gamma", suffix)) {
            verify(e, xe);
            slot(def.gamma, m, detail::parse_count(suffix, e.line), e);
        } else if (detail::has_prefix(e.key, "b", suffix)) {
            verify(e, ts);
            slot(def.drift, k, detail::parse_count(suffix, e.line), e);
        } else {
            throw ProblemFileError("unknown key '" + e.key + "' in [coeffs]", e.line);
        }
    }

    for (const auto& e : sections["drivers"]) {
        once(e);
        if (!detail::has_prefix(e.key, "f", suffix))
            throw ProblemFileError("unknown key '" + e.key + "' in [drivers]", e.line);
        verify(e, names::driver(k, m, d));
        slot(def.driver, m, detail::parse_count(suffix, e.line), e);
    }

    for (const auto& e : sections["costs"]) {
        once(e);
        if (e.key == "g_default") {
            verify(e, ts);
            def.default_cost = e.value;
            continue;
        }
        if (!detail::has_prefix(e.key, "g", suffix))
            throw ProblemFileError("unknown key '" + e.key + "' in [costs]", e.line);
        verify(e, ts);
        auto [i, j] = detail::parse_pair(suffix, e.line);
        if (i < 1 || i > m || j < 1 || j > m)
            throw ProblemFileError("index out of range in '" + e.key + "'", e.line);
        if (i == j) {
            bool zero = false;
            try {
                Expr g = Expr::parse(e.value, {});
                zero = g.eval(std::map<std::string, double, std::less<>>{}) == 0.0;
            } catch (const std::exception&) {
                zero = false;
            }
            if (!zero) throw ProblemFileError("diagonal cost '" + e.key + "' must be absent or 0", e.line);
        }
        def.costs[{i - 1, j - 1}] = e.value;
    }

    for (const auto& e : sections["terminal"]) {
        once(e);
        if (!detail::has_prefix(e.key, "h", suffix))
            throw ProblemFileError("unknown key '" + e.key + "' in [terminal]", e.line);
        verify(e, names::space(k));
        slot(def.terminal, m, detail::parse_count(suffix, e.line), e);
    }

    if (sections["terminal"].size() != m)
        throw ProblemFileError("[terminal] must define h1..h" + std::to_string(m), section_line["terminal"]);

    for (const auto& e : sections["box"]) {
        once(e);
        auto nums = detail::parse_reals(e.value, e.line);
        if (nums.size() != k) throw ProblemFileError("box bounds need " + std::to_string(k) + " values", e.line);
        if (e.key == "lower")
            def.box_lower = nums;
        else if (e.key == "upper")
            def.box_upper = nums;
        else
            throw ProblemFileError("unknown key '" + e.key + "' in [box]", e.line);
    }
    if (def.box_lower.empty() || def.box_upper.empty())
        throw ProblemFileError("[box] must declare lower and upper", section_line["box"]);
    return def;
}

/// Reads, parses and compiles a problem file.
inline SwitchingProblem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProblemFileError("cannot open problem file '" + path + "'", 0);
    ProblemDefinition def = parse_problem(in);
    try {
        return SwitchingProblem(std::move(def));
    } catch (const ProblemError& e) {
        throw ProblemFileError(e.what(), 0);
    }
}

inline SwitchingProblem problem_from_text(const std::string& text) {
    std::istringstream in(text);
    ProblemDefinition def = parse_problem(in);
    try {
        return SwitchingProblem(std::move(def));
    } catch (const ProblemError& e) {
        throw ProblemFileError(e.what(), 0);
    }
}

/// Writes a definition back in the file format (fully resolved: every slot explicit).
inline std::string problem_to_text(const SwitchingProblem& p) {
    std::ostringstream os;
    os.precision(17);
    const std::size_t m = p.modes(), k = p.state_dim(), d = p.brownian_dim();
    os << "[dims]\nm = " << m << "\nk = " << k << "\nd = " << d << "\nl = " << p.mark_dim() << "\nT = " << p.horizon()
       << "\np = " << p.growth_exponent() << "\n[levy]\n";
    for (const auto& a : p.levy().atoms()) {
        for (double v : a.mark) os << v << ' ';
        os << a.weight << '\n';
    }
    os << "[coeffs]\n";
    for (std::size_t r = 0; r < k; ++r) os << "b" << r + 1 << " = " << p.drift_exprs()[r].source() << '\n';
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < d; ++c)
            os << "sigma" << r + 1 << '_' << c + 1 << " = " << p.diffusion_exprs()[r * d + c].source() << '\n';
    for (std::size_t r = 0; r < k; ++r) os << "beta" << r + 1 << " = " << p.jump_exprs()[r].source() << '\n';
    for (std::size_t i = 0; i < m; ++i) os << "gamma" << i + 1 << " = " << p.gamma_expr(i).source() << '\n';
    os << "[drivers]\n";
    for (std::size_t i = 0; i < m; ++i) os << "f" << i + 1 << " = " << p.driver_expr(i).source() << '\n';
    os << "[costs]\n";
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (i != j) os << "g" << i + 1 << '_' << j + 1 << " = " << p.cost_expr(i, j).source() << '\n';
    os << "[terminal]\n";
    for (std::size_t i = 0; i < m; ++i) os << "h" << i + 1 << " = " << p.terminal_expr(i).source() << '\n';
    os << "[box]\nlower =";
    for (double v : p.box_lower()) os << ' ' << v;
    os << "\nupper =";
    for (double v : p.box_upper()) os << ' ' << v;
    os << '\n';
    return os.str();
}

}  // namespace swipde
