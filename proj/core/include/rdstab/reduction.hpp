#pragma once

// Assembly of the (n+1)-dimensional input-delay model
//
//   X1 = (u_D, w_1, ..., w_n),   X1' = A1 X1 + B1 alpha(t - D),
//
// with A1 = [0 0; a diag(lambda)] and B1 = (1, b_1, ..., b_n)^T, plus the
// controllability checks backing the gain design.

#include <Eigen/Core>

#include <vector>

#include "rdstab/spectral.hpp"

namespace rdstab {

struct ReducedModel {
    int n = 0;                    // retained unstable modes
    Eigen::MatrixXd A1;           // (n+1) x (n+1)
    Eigen::VectorXd B1;           // n+1
    double delay = 0.0;           // D >= 0
    std::vector<double> lambdas;  // lambda_1..lambda_n
    double margin = 0.0;          // eta, reporting only
};

struct KalmanResult {
    bool rank_ok = false;
    double det = 0.0;
};

ReducedModel build_reduced(const SpectralBasis& basis, double delay);

// [B, A B, ..., A^n B] for a single-input pair.
Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& B);

// Determinant test of the controllability matrix of (A1, B1); by the rank
// chain through e^{-D A1} the answer is independent of D.
KalmanResult kalman_check(const ReducedModel& model);

// Closed form prod_j (a_j + lambda_j b_j) * prod_{i<j} (lambda_j - lambda_i)
// of det(B1, A1 B1, ..., A1^n B1). Throws on duplicate lambdas.
double vandermonde_det(const ReducedModel& model);

}  // namespace rdstab
