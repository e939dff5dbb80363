#pragma once

// Dirichlet eigenproblem for A = d²/dx² + c(x)·id on (0, L) and the modal
// coupling coefficients consumed by the reduced delay model.
//
// Discretization: second-order central finite differences on a uniform grid,
// Dirichlet rows removed, symmetric tridiagonal eigensolve. Eigenfunctions are
// L²-normalized with the composite trapezoid rule on the same grid and carry
// the sign convention e_j'(0) > 0.

#include <utility>
#include <vector>

#include "rdstab/grid.hpp"

namespace rdstab {

// The operator data: interval length L and the reaction coefficient c given as
// samples on a uniform grid (piecewise linear in between).
struct OperatorSpec {
    double length = 0.0;
    std::vector<double> c_samples;

    void validate() const;
    std::vector<double> c_on(const Grid1D& grid) const;
    double c_sup() const;
};

struct EigenMode {
    int index = 0;                // 1-based
    double lambda = 0.0;
    std::vector<double> samples;  // on the shared grid, zero endpoints
    double a_coef = 0.0;          // <x c(x)/L, e_j>
    double b_coef = 0.0;          // <-x/L, e_j>
    double flux_right = 0.0;      // e_j'(L), one-sided second-order difference
};

struct SpectralBasis {
    OperatorSpec spec;
    Grid1D grid;
    std::vector<EigenMode> modes;  // strictly decreasing lambda
};

struct UnstableSplit {
    int n = 0;           // eigenvalues >= 0
    double margin = 0.0; // eta = -lambda_{n+1}/2
};

// L² norms of the coupling weights a(x) = x c(x)/L and b(x) = -x/L.
struct CouplingNorms {
    double a_norm = 0.0;
    double b_norm = 0.0;
};

// Largest `num_modes` eigenpairs of the discretized operator.
// Throws if num_modes > grid_points/8 (resolution guard), if the eigensolver
// fails, or if two computed eigenvalues coincide within
// 1e-9 * max(1, |lambda_1|) (the design assumes simple eigenvalues).
SpectralBasis solve_eigen(const OperatorSpec& spec, int num_modes, int grid_points);

// a_j = (1/L) ∫ x c(x) e_j dx and b_j = -(1/L) ∫ x e_j dx via composite
// trapezoid on the shared grid.
std::pair<double, double> modal_coefficients(const EigenMode& mode, const OperatorSpec& spec, const Grid1D& grid);

// n = number of nonnegative eigenvalues, margin = -lambda_{n+1}/2.
// Throws when every computed eigenvalue is nonnegative (num_modes too small).
UnstableSplit count_unstable(const SpectralBasis& basis);

CouplingNorms coupling_norms(const OperatorSpec& spec, const Grid1D& grid);

}  // namespace rdstab
