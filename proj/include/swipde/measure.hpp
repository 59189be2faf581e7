#pragma once

// Finite Levy measure represented by weighted atoms on E = R^l \ {0}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace swipde {

struct LevyAtom {
    std::vector<double> mark;
    double weight = 0.0;
};

class FiniteLevyMeasure {
public:
    FiniteLevyMeasure() = default;

    /// Marks must share one dimension, be nonzero, and carry positive finite weights.
    FiniteLevyMeasure(std::size_t mark_dim, std::vector<LevyAtom> atoms)
        : mark_dim_(mark_dim), atoms_(std::move(atoms)) {
        for (const auto& a : atoms_) {
            if (a.mark.size() != mark_dim_)
                throw std::invalid_argument("levy atom mark has wrong dimension");
            if (!(a.weight > 0.0) || !std::isfinite(a.weight))
                throw std::invalid_argument("levy atom weight must be positive and finite");
            bool nonzero = std::any_of(a.mark.begin(), a.mark.end(), [](double v) { return v != 0.0; });
            if (!nonzero) throw std::invalid_argument("levy atom mark must be nonzero");
            for (double v : a.mark)
                if (!std::isfinite(v)) throw std::invalid_argument("levy atom mark must be finite");
        }
    }

    std::size_t mark_dim() const noexcept { return mark_dim_; }
    std::size_t size() const noexcept { return atoms_.size(); }
    bool empty() const noexcept { return atoms_.empty(); }
    const std::vector<LevyAtom>& atoms() const noexcept { return atoms_; }
    const LevyAtom& operator[](std::size_t i) const { return atoms_[i]; }

    /// Sum of weight * integrand(mark), accumulated in atom order.
    template <class F>
    double integrate(F&& integrand) const {
        double total = 0.0;
        for (const auto& a : atoms_) total += a.weight * integrand(a.mark);
        return total;
    }

    /// lambda(E); the compound-Poisson intensity.
    double total_mass() const {
        double total = 0.0;
        for (const auto& a : atoms_) total += a.weight;
        return total;
    }

    /// Integral of (1 ^ |e|^2).
    double small_jump_moment() const {
        return integrate([](const std::vector<double>& e) { return std::min(1.0, norm_squared(e)); });
    }

    static double norm_squared(const std::vector<double>& e) {
        double s = 0.0;
        for (double v : e) s += v * v;
        return s;
    }

private:
    std::size_t mark_dim_ = 1;
    std::vector<LevyAtom> atoms_;
};

template <class F>
double integrate(const FiniteLevyMeasure& measure, F&& integrand) {
    return measure.integrate(std::forward<F>(integrand));
}

inline double total_mass(const FiniteLevyMeasure& measure) { return measure.total_mass(); }

}  // namespace swipde
