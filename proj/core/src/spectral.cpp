#include "rdstab/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rdstab {

void OperatorSpec::validate() const {
    if (!(length > 0.0)) throw std::invalid_argument("OperatorSpec: L must be positive");
    if (c_samples.size() < 17) throw std::invalid_argument("OperatorSpec: c needs at least 17 samples (G >= 16)");
    for (double v : c_samples)
        if (!std::isfinite(v)) throw std::invalid_argument("OperatorSpec: c samples must be finite");
}

std::vector<double> OperatorSpec::c_on(const Grid1D& grid) const {
    if (static_cast<int>(c_samples.size()) == grid.points()) return c_samples;
    return resample_uniform(c_samples, length, grid);
}

double OperatorSpec::c_sup() const {
    double s = 0.0;
    for (double v : c_samples) s = std::max(s, std::abs(v));
    return s;
}

SpectralBasis solve_eigen(const OperatorSpec& spec, int num_modes, int grid_points) {
    spec.validate();
    if (num_modes < 1) throw std::invalid_argument("solve_eigen: num_modes must be positive");
    if (grid_points < 16) throw std::invalid_argument("solve_eigen: grid_points must be at least 16");
    if (8 * num_modes > grid_points)
        throw std::invalid_argument("solve_eigen: resolution guard num_modes <= grid_points/8 violated");

    const Grid1D grid{spec.length, grid_points};
    const double h = grid.h();
    const std::vector<double> c = spec.c_on(grid);

    // Interior rows of the central-difference operator; symmetric tridiagonal.
    const int m = grid_points - 1;
    Eigen::VectorXd diag(m), sub(m - 1);
    for (int i = 0; i < m; ++i) diag(i) = -2.0 / (h * h) + c[static_cast<std::size_t>(i) + 1];
    sub.setConstant(1.0 / (h * h));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("solve_eigen: tridiagonal eigensolver failed to converge");

    // Eigen returns ascending order; the modes of interest are the largest.
    const Eigen::VectorXd& ev = solver.eigenvalues();
    const double tie_tol = 1e-9 * std::max(1.0, std::abs(ev(m - 1)));
    for (int k = 0; k < num_modes; ++k) {
        const int i = m - 1 - k;
        if (i > 0 && std::abs(ev(i) - ev(i - 1)) <= tie_tol)
            throw std::runtime_error("solve_eigen: duplicate eigenvalues within tolerance (degenerate discretization)");
    }

    SpectralBasis basis;
    basis.spec = spec;
    basis.grid = grid;
    basis.modes.reserve(static_cast<std::size_t>(num_modes));

    for (int k = 0; k < num_modes; ++k) {
        const int i = m - 1 - k;
        EigenMode mode;
        mode.index = k + 1;
        mode.lambda = ev(i);
        mode.samples.assign(static_cast<std::size_t>(grid.points()), 0.0);
        for (int j = 0; j < m; ++j) mode.samples[static_cast<std::size_t>(j) + 1] = solver.eigenvectors()(j, i);

        const double nrm = norm_l2(grid, mode.samples);
        if (!(nrm > 0.0)) throw std::runtime_error("solve_eigen: zero eigenvector returned");
        double scale = 1.0 / nrm;
        // Sign convention e_j'(0) > 0, one-sided second-order difference with e(0) = 0.
        const double d0 = (4.0 * mode.samples[1] - mode.samples[2]) / (2.0 * h);
        if (d0 < 0.0) scale = -scale;
        for (double& v : mode.samples) v *= scale;

        const std::size_t g = static_cast<std::size_t>(grid_points);
        mode.flux_right = (mode.samples[g - 2] - 4.0 * mode.samples[g - 1]) / (2.0 * h);
        std::tie(mode.a_coef, mode.b_coef) = modal_coefficients(mode, spec, grid);
        basis.modes.push_back(std::move(mode));
    }
    return basis;
}

std::pair<double, double> modal_coefficients(const EigenMode& mode, const OperatorSpec& spec, const Grid1D& grid) {
    if (static_cast<int>(mode.samples.size()) != grid.points())
        throw std::invalid_argument("modal_coefficients: mode samples do not match the grid");
    const std::vector<double> c = spec.c_on(grid);
    std::vector<double> fa(mode.samples.size()), fb(mode.samples.size());
    for (int i = 0; i < grid.points(); ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double x = grid.x(i);
        fa[u] = x * c[u] * mode.samples[u];
        fb[u] = x * mode.samples[u];
    }
    const double a = trapezoid(grid, fa) / spec.length;
    const double b = -trapezoid(grid, fb) / spec.length;
    return {a, b};
}

UnstableSplit count_unstable(const SpectralBasis& basis) {
    if (basis.modes.empty()) throw std::invalid_argument("count_unstable: empty basis");
    int n = 0;
    while (n < static_cast<int>(basis.modes.size()) && basis.modes[static_cast<std::size_t>(n)].lambda >= 0.0) ++n;
    if (n == static_cast<int>(basis.modes.size()))
        throw std::runtime_error("count_unstable: all computed eigenvalues are nonnegative; increase num_modes");
    return UnstableSplit{n, -basis.modes[static_cast<std::size_t>(n)].lambda / 2.0};
}

CouplingNorms coupling_norms(const OperatorSpec& spec, const Grid1D& grid) {
    const std::vector<double> c = spec.c_on(grid);
    std::vector<double> a(static_cast<std::size_t>(grid.points())), b(a.size());
    for (int i = 0; i < grid.points(); ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double x = grid.x(i);
        a[u] = x * c[u] / spec.length;
        b[u] = -x / spec.length;
    }
    return CouplingNorms{norm_l2(grid, a), norm_l2(grid, b)};
}

}  // namespace rdstab
