#pragma once

// Gain design for the Artstein-reduced pair (A1, e^{-D A1} B1): matrix
// exponential, single-input pole placement (Ackermann form, so repeated poles
// are handled through the characteristic polynomial), the Lyapunov matrix P
// solving P Acl + Acl^T P = -I, and the certificate weight M(D).

#include <Eigen/Core>

#include <complex>
#include <vector>

#include "rdstab/reduction.hpp"

namespace rdstab {

struct GainSet {
    double delay = 0.0;
    Eigen::RowVectorXd K1;                   // 1 x (n+1)
    Eigen::MatrixXd P;                       // symmetric positive definite
    std::vector<std::complex<double>> poles; // closed under conjugation
    double weight_M = 0.0;                   // certificate weight M(D)
    Eigen::MatrixXd Acl;                     // A1 + e^{-D A1} B1 K1
    double lyapunov_residual = 0.0;          // ||P Acl + Acl^T P + I||_F
    double p_min_eigenvalue = 0.0;
    double safety_factor = 1.1;              // margin applied on the M(D) bound
};

// e^{tA} by scaling and squaring with a fixed-order (13) Pade core.
Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& A, double t);

// Gain K1 with spectrum(A1 + e^{-D A1} B1 K1) equal to `poles`.
// Preconditions: controllable pair, poles closed under conjugation with
// negative real parts, poles.size() == n+1.
Eigen::RowVectorXd place_poles(const ReducedModel& model, const std::vector<std::complex<double>>& poles, double delay);

// Unique symmetric positive definite P with P Acl + Acl^T P = -I, via the
// vectorized Kronecker system (dimension (n+1)^2, n is small).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Acl);

// Certificate weight: safety_factor * [ ||b||^2 ||K1||^2
//   + max(2||a||^2, max(lambda)/lambda_min(P)) * max(1, D e^{2 D ||A1||} ||B1||^2 ||K1||^2) ],
// floored at 1e-6. Norms: spectral for A1, Euclidean for B1/K1, L2 for a, b.
double compute_M(const ReducedModel& model, const Eigen::RowVectorXd& K1, const Eigen::MatrixXd& P,
                 double a_norm, double b_norm, double safety_factor = 1.1);

// Monic real characteristic coefficients (c_0 s^m + ... + c_m, c_0 = 1) from a
// conjugation-closed pole list.
std::vector<double> real_poly_from_roots(const std::vector<std::complex<double>>& roots);

// Coefficients of the characteristic polynomial of M assembled from its
// (computed) eigenvalues; symmetric functions keep this stable even for
// clustered spectra.
std::vector<double> charpoly_coefficients(const Eigen::MatrixXd& M);

// Full design pass: placement, closed loop, Lyapunov certificate, weight.
// Validates the GainSet invariants (spectrum match, residual, definiteness).
GainSet design_gains(const ReducedModel& model, std::vector<std::complex<double>> poles,
                     double a_norm, double b_norm);

}  // namespace rdstab
