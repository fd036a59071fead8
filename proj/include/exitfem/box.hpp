#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace exitfem {

/// Axis-aligned open box (a1,a2) x (b1,b2) [x (c1,c2)] in model state units.
class BoxDomain {
public:
    /// Throws ConfigError unless dimension is 2 or 3 and lower < upper on every axis.
    BoxDomain(std::vector<double> lower, std::vector<double> upper);

    std::size_t dimension() const noexcept { return lower_.size(); }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    double lower(std::size_t axis) const { return lower_[axis]; }
    double upper(std::size_t axis) const { return upper_[axis]; }
    double extent(std::size_t axis) const { return upper_[axis] - lower_[axis]; }
    double volume() const noexcept;

    /// Open-box membership; points on a face are outside.
    bool contains_open(std::span<const double> p) const noexcept;
    bool contains_closed(std::span<const double> p, double tol = 0.0) const noexcept;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

}  // namespace exitfem
