#pragma once

// Projection of per-mode values onto the interconnected obstacle
//   v_i >= max_{j != i} (v_j - g_ij).
// Modes are visited in ascending order and passes repeat until no value moves
// by more than the tolerance. Ties in the inner max resolve to the lowest j.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>

namespace swipde {

/// Returns the number of passes, or nullopt when `max_passes` passes still changed values.
/// `costs` is row-major m x m.
inline std::optional<std::size_t> obstacle_sweep(std::span<double> values, std::span<const double> costs,
                                                 double rel_tol, std::size_t max_passes) {
    const std::size_t m = values.size();
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    const double tol = rel_tol * (1.0 + scale);
    for (std::size_t pass = 1;; ++pass) {
        bool changed = false;
        for (std::size_t i = 0; i < m; ++i) {
            double obstacle = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j)
                if (j != i) obstacle = std::max(obstacle, values[j] - costs[i * m + j]);
            if (obstacle > values[i]) {
                if (obstacle - values[i] > tol) changed = true;
                values[i] = obstacle;
            }
        }
        if (!changed) return pass;
        if (pass >= max_passes) return std::nullopt;
    }
}

}  // namespace swipde
