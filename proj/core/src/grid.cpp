#include "rdstab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdstab {

std::vector<double> Grid1D::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(points()));
    for (int i = 0; i <= intervals; ++i) out[static_cast<std::size_t>(i)] = x(i);
    return out;
}

double trapezoid(const Grid1D& grid, std::span<const double> values) {
    if (static_cast<int>(values.size()) != grid.points())
        throw std::invalid_argument("trapezoid: sample count does not match grid");
    double acc = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) acc += values[i];
    return acc * grid.h();
}

double inner_l2(const Grid1D& grid, std::span<const double> f, std::span<const double> g) {
    if (f.size() != g.size() || static_cast<int>(f.size()) != grid.points())
        throw std::invalid_argument("inner_l2: sample count does not match grid");
    double acc = 0.5 * (f.front() * g.front() + f.back() * g.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i] * g[i];
    return acc * grid.h();
}

double norm_l2(const Grid1D& grid, std::span<const double> f) {
    return std::sqrt(inner_l2(grid, f, f));
}

std::vector<double> resample_uniform(std::span<const double> values, double length, const Grid1D& target) {
    if (values.size() < 2) throw std::invalid_argument("resample_uniform: need at least two samples");
    if (!(length > 0.0)) throw std::invalid_argument("resample_uniform: length must be positive");
    const int src_intervals = static_cast<int>(values.size()) - 1;
    const double src_h = length / src_intervals;
    std::vector<double> out(static_cast<std::size_t>(target.points()));
    for (int i = 0; i < target.points(); ++i) {
        const double x = std::min(target.x(i), length);
        int k = static_cast<int>(std::floor(x / src_h));
        k = std::clamp(k, 0, src_intervals - 1);
        const double s = (x - k * src_h) / src_h;
        out[static_cast<std::size_t>(i)] =
            (1.0 - s) * values[static_cast<std::size_t>(k)] + s * values[static_cast<std::size_t>(k) + 1];
    }
    return out;
}

std::vector<double> resample_scattered(std::span<const double> x, std::span<const double> y, const Grid1D& target) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("resample_scattered: need matching x/y with at least two points");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("resample_scattered: x must be strictly increasing");
    if (x.front() > 1e-12 * target.length || x.back() < target.length * (1.0 - 1e-12))
        throw std::invalid_argument("resample_scattered: samples must cover [0, L]");
    std::vector<double> out(static_cast<std::size_t>(target.points()));
    std::size_t k = 0;
    for (int i = 0; i < target.points(); ++i) {
        const double xi = std::min(target.x(i), x.back());
        while (k + 2 < x.size() && x[k + 1] < xi) ++k;
        const double s = (xi - x[k]) / (x[k + 1] - x[k]);
        out[static_cast<std::size_t>(i)] = (1.0 - s) * y[k] + s * y[k + 1];
    }
    return out;
}

}  // namespace rdstab
