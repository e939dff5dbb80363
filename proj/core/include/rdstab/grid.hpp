#pragma once

#include <span>
#include <vector>

namespace rdstab {

// Uniform grid x_i = i * length / intervals on [0, length].
struct Grid1D {
    double length = 0.0;
    int intervals = 0;

    double h() const { return length / intervals; }
    int points() const { return intervals + 1; }
    double x(int i) const { return length * static_cast<double>(i) / static_cast<double>(intervals); }

    std::vector<double> nodes() const;
};

// Composite trapezoid of nodal samples over the full grid.
double trapezoid(const Grid1D& grid, std::span<const double> values);

double inner_l2(const Grid1D& grid, std::span<const double> f, std::span<const double> g);
double norm_l2(const Grid1D& grid, std::span<const double> f);

// Piecewise-linear resampling of samples given on one uniform grid onto another
// uniform grid of the same length.
std::vector<double> resample_uniform(std::span<const double> values, double length, const Grid1D& target);

// Piecewise-linear resampling of scattered (x, y) pairs onto a uniform grid.
// x must be strictly increasing and cover [0, target.length].
std::vector<double> resample_scattered(std::span<const double> x, std::span<const double> y, const Grid1D& target);

}  // namespace rdstab
