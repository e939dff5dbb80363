#pragma once

// Closed-loop integration of the modal system
//
//   u_D'(t) = α(t-D),    w_j'(t) = λ_j w_j(t) + a_j u_D(t) + b_j α(t-D),
//
// with the predictor feedback α evaluated on the fly, plus the observables:
// reconstruction y = w + (x/L) u_D, L²/H¹ norms, and the Lyapunov certificate
//
//   V_D(t) = (M/2) Z1ᵀP Z1 + (M/2) ∫_{(t-D,t)∩(D,∞)} Z1ᵀP Z1 ds - ½ Σ λ_j w_j².
//
// Each mode advances by its exact exponential update with the delayed input
// held over the step and u_D sampled at the midpoint (exact for the held
// input, since u_D is linear within a step).

#include <Eigen/Core>

#include <span>
#include <vector>

#include "rdstab/artstein.hpp"
#include "rdstab/gain.hpp"
#include "rdstab/reduction.hpp"
#include "rdstab/spectral.hpp"

namespace rdstab {

struct SimConfig {
    int modes = 6;            // N >= n+1 simulated modes
    double dt = 0.0;          // must divide D
    double t_final = 0.0;     // >= 2D so the certificate window activates
    std::vector<double> y0;   // initial profile on the basis grid
    int record_every = 1;     // record decimation
};

struct SimState {
    double t = 0.0;
    double uD = 0.0;
    Eigen::VectorXd w;        // modal coefficients 1..N
    ControlHistory history;   // α record from t = 0
};

struct Trajectory {
    // record-resolution series
    std::vector<double> times, uD, alpha, vD, l2_y, h1_y;
    std::vector<Eigen::VectorXd> w;          // N coefficients per record
    std::vector<Eigen::VectorXd> X1, Z1;     // n+1 per record
    std::vector<std::vector<double>> y;      // grid profile per record

    // full-resolution series kept for the transform-consistency oracles
    std::vector<double> alpha_full;
    std::vector<Eigen::VectorXd> X1_full, Z1_full;
    std::vector<double> z1Pz1_full;

    // metadata
    double dt = 0.0, delay = 0.0, weight_M = 0.0, length = 0.0;
    int n = 0, modes = 0, record_every = 1;
    Grid1D grid;
};

struct DecayFit {
    double rate = 0.0;
    double r2 = 0.0;
};

// One transition of the closed-loop recurrence: evaluates α(state.t), appends
// it to the history, then advances u_D and every mode by dt.
SimState step(const SimState& state, const GainSet& gains, const ReducedModel& model,
              const SpectralBasis& basis, double dt);

Trajectory run(const SimConfig& config, const GainSet& gains, const ReducedModel& model,
               const SpectralBasis& basis);

// ‖w‖_{H¹₀} via the spectral identity ∫ c w² dx - Σ λ_j w_j² (square root of
// the truncated right-hand side; small negative values are clamped, larger
// ones signal inconsistent inputs and throw).
double h1_norm_spectral(const Eigen::VectorXd& w_modal, const SpectralBasis& basis);

// Forward-difference H¹ seminorm of a grid profile (any boundary values).
double h1_seminorm_grid(std::span<const double> profile, double h);

// Full H¹ norm sqrt(‖f‖²_{L²} + |f|²_{H¹}) of a grid profile.
double h1_norm_grid(const Grid1D& grid, std::span<const double> profile);

// V_D at time t from the full-resolution Z1ᵀPZ1 series (z1Pz1[i] at i·dt).
double lyapunov_VD(std::span<const double> z1Pz1, double t, double dt, const ReducedModel& model,
                   const GainSet& gains, const Eigen::VectorXd& w_modal, std::span<const double> lambdas);

// Least-squares slope of log(value) against t over [t_a, t_b]; values must be
// positive on the window.
DecayFit decay_fit(std::span<const double> times, std::span<const double> values, double t_a, double t_b);

}  // namespace rdstab
