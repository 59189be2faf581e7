#pragma once

// Rectangular space-time grid and mode x level x node arrays living on it.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace swipde {

class Grid {
public:
    Grid() = default;

    Grid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes,
         std::size_t time_steps, double horizon)
        : lower_(std::move(lower)), upper_(std::move(upper)), nodes_(std::move(nodes)),
          time_steps_(time_steps), horizon_(horizon) {
        if (lower_.empty() || lower_.size() != upper_.size() || lower_.size() != nodes_.size())
            throw std::invalid_argument("grid: bounds and node counts must share one positive dimension");
        for (std::size_t r = 0; r < dim(); ++r) {
            if (!std::isfinite(lower_[r]) || !std::isfinite(upper_[r]) || !(lower_[r] < upper_[r]))
                throw std::invalid_argument("grid: bounds must be finite with lower < upper");
            if (nodes_[r] < 3) throw std::invalid_argument("grid: need at least 3 nodes per dimension");
        }
        if (time_steps_ < 1) throw std::invalid_argument("grid: need at least one time step");
        if (!(horizon_ > 0.0)) throw std::invalid_argument("grid: horizon must be positive");
        size_ = 1;
        for (std::size_t r = 0; r < dim(); ++r) {
            steps_.push_back((upper_[r] - lower_[r]) / static_cast<double>(nodes_[r] - 1));
            strides_.push_back(size_);
            size_ *= nodes_[r];
        }
    }

    std::size_t dim() const noexcept { return nodes_.size(); }
    std::size_t size() const noexcept { return size_; }
    std::size_t nodes(std::size_t r) const { return nodes_[r]; }
    std::size_t stride(std::size_t r) const { return strides_[r]; }
    double lower(std::size_t r) const { return lower_[r]; }
    double upper(std::size_t r) const { return upper_[r]; }
    double step(std::size_t r) const { return steps_[r]; }
    std::size_t time_steps() const noexcept { return time_steps_; }
    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return horizon_ / static_cast<double>(time_steps_); }
    double time(std::size_t level) const {
        return level == time_steps_ ? horizon_ : static_cast<double>(level) * dt();
    }

    std::size_t index(std::size_t node, std::size_t r) const { return (node / strides_[r]) % nodes_[r]; }

    double coord(std::size_t node, std::size_t r) const {
        std::size_t j = index(node, r);
        return j + 1 == nodes_[r] ? upper_[r] : lower_[r] + static_cast<double>(j) * steps_[r];
    }

    void coords(std::size_t node, std::span<double> out) const {
        for (std::size_t r = 0; r < dim(); ++r) out[r] = coord(node, r);
    }

    bool is_boundary(std::size_t node) const {
        for (std::size_t r = 0; r < dim(); ++r) {
            std::size_t j = index(node, r);
            if (j == 0 || j + 1 == nodes_[r]) return true;
        }
        return false;
    }

    bool operator==(const Grid& o) const {
        return lower_ == o.lower_ && upper_ == o.upper_ && nodes_ == o.nodes_ && time_steps_ == o.time_steps_ &&
               horizon_ == o.horizon_;
    }

private:
    std::vector<double> lower_, upper_, steps_;
    std::vector<std::size_t> nodes_, strides_;
    std::size_t size_ = 0;
    std::size_t time_steps_ = 0;
    double horizon_ = 0.0;
};

/// Values indexed by (mode, time level, node). The tag keeps value, frozen-jump
/// and reflection arrays from being mixed up.
template <class Tag>
class ModeLevelArray {
public:
    ModeLevelArray() = default;
    ModeLevelArray(std::size_t modes, const Grid& grid, double fill = 0.0)
        : modes_(modes), grid_(grid), data_(modes * (grid.time_steps() + 1) * grid.size(), fill) {}

    std::size_t modes() const noexcept { return modes_; }
    const Grid& grid() const noexcept { return grid_; }
    std::size_t levels() const noexcept { return grid_.time_steps() + 1; }

    std::span<double> level(std::size_t mode, std::size_t n) {
        return {data_.data() + (mode * levels() + n) * grid_.size(), grid_.size()};
    }
    std::span<const double> level(std::size_t mode, std::size_t n) const {
        return {data_.data() + (mode * levels() + n) * grid_.size(), grid_.size()};
    }

    double& at(std::size_t mode, std::size_t n, std::size_t node) { return level(mode, n)[node]; }
    double at(std::size_t mode, std::size_t n, std::size_t node) const { return level(mode, n)[node]; }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    bool same_shape(const ModeLevelArray& o) const { return modes_ == o.modes_ && grid_ == o.grid_; }

private:
    std::size_t modes_ = 0;
    Grid grid_;
    std::vector<double> data_;
};

struct ValueTag {};
struct FrozenJumpTag {};
struct ReflectionTag {};

/// The discrete u^i(t_n, x_j).
using ValueField = ModeLevelArray<ValueTag>;
/// Frozen jump argument q^i(t_n, x_j), held fixed during one Picard stage.
using FrozenJumpField = ModeLevelArray<FrozenJumpTag>;
/// Nonnegative per-step increments added by the obstacle projection.
using ReflectionField = ModeLevelArray<ReflectionTag>;

}  // namespace swipde
