#pragma once

// Artstein transform machinery for the input-delay pair (A1, B1):
//
//   Z1(t) = X1(t) + ∫_{max(t-D,D)}^{t} e^{(t-s-D)A1} B1 α(s) ds,
//   α(t)  = 0 for t < D,       α(t) = K1 Z1(t) for t ≥ D,
//
// together with two independent inversion routes used as mutual oracles: the
// Neumann series α = Σ_j (T_D^j K1 X1) with
//
//   (T_D g)(t) = K1 ∫_{max(t-D,D)}^{t} e^{(t-D-s)A1} B1 g(s) ds,
//
// and the kernel form
//
//   X1(t) = Z1(t) - ∫_{(D,t)} f(t-s) X1(s) ds,
//
// where f solves the Volterra equation f(r) = g(r) + ∫_{max(0,r-D)}^r
// g(r-u) f(u) du with g(r) = e^{(r-D)A1} B1 K1 restricted to 0 <= r <= D (the
// reach of one delay window). On (0, D) this matches the fixed-point
// equation of the transform inversion; past r = D the same recursion
// continues the kernel, which decays with the closed loop instead of
// vanishing.
//
// Quadrature: composite trapezoid on the control grid (dt divides D so every
// delayed lookup lands on a node). The s = t endpoint of the feedback integral
// multiplies the α(t) being defined; it is kept with its trapezoid half-weight
// and resolved by a scalar linear solve, which makes α(t) = K1 Z1(t) hold
// exactly on the grid. The window never dips below s = D, where α vanishes by
// definition.

#include <Eigen/Core>

#include <vector>

#include "rdstab/gain.hpp"
#include "rdstab/reduction.hpp"

namespace rdstab {

// Uniform record of past feedback values α(t0), α(t0+dt), ...
// Times before t0 read as zero (no control before the record starts).
struct ControlHistory {
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<double> samples;

    void append(double value) { samples.push_back(value); }
    // Grid index of time t; throws if t is off-grid beyond 1e-6*dt.
    int index_of(double t) const;
    // Sample at time t; 0 before t0, throws beyond the recorded range.
    double value_at(double t) const;
    double t_end() const { return t0 + dt * (static_cast<double>(samples.size()) - 1.0); }
};

// Kernel table f(r) at r = 0, dt, ..., horizon for the inversion formula,
// plus the diagnostics of the series cross-evaluation. The kernel is kept in
// split form f = g + smooth: g(r) = e^{(r-D)A1} B1 K1 on [0, D] (zero beyond,
// so f jumps by -B1 K1 across r = D) and the continuous remainder phi; the
// split lets every quadrature put the jump on a window edge where the
// trapezoid rule handles it exactly.
struct KernelTable {
    double dt = 0.0;
    double delay = 0.0;
    std::vector<Eigen::MatrixXd> values;    // f(r) = g(r) + smooth(r); at r = D the left limit
    std::vector<Eigen::MatrixXd> g_part;    // g on [0, D]
    std::vector<Eigen::MatrixXd> smooth;    // phi on [0, horizon]
    int series_terms = 0;
    double series_last_term = 0.0;
    double series_discrepancy = 0.0;  // max over r of ||marching - series||
};

struct SeriesEval {
    double value = 0.0;             // partial sum at the query time
    int terms = 0;
    double last_term_sup = 0.0;     // sup over the grid of the last term
    std::vector<double> term_sups;  // sup-norm of every term
    bool converged = false;
};

// Grid index of max(t-D, D): the active window of every delay integral.
// The window [lo, m] is empty when lo >= m (covers t <= D and D = 0).
int active_window_start(int m, int delay_steps);

// Precomputed propagator columns e^{-k dt A1} B1, k = 0..K (K = D/dt), shared
// by the transform, the feedback and the kernel assembly.
class DelayPropagators {
public:
    DelayPropagators(const ReducedModel& model, double dt);

    int delay_steps() const { return delay_steps_; }
    double dt() const { return dt_; }
    const Eigen::VectorXd& column(int k) const { return columns_.at(static_cast<std::size_t>(k)); }
    const Eigen::MatrixXd& exp_minus_DA() const { return exp_minus_DA_; }

private:
    double dt_ = 0.0;
    int delay_steps_ = 0;
    std::vector<Eigen::VectorXd> columns_;
    Eigen::MatrixXd exp_minus_DA_;
};

// Number of grid steps spanned by the delay; throws unless dt divides D
// within 1e-12 relative.
int delay_steps_of(double delay, double dt);

// Z1(t) per the transform above, trapezoid on the history grid.
Eigen::VectorXd forward_transform(const Eigen::VectorXd& X1, const ControlHistory& history,
                                  const ReducedModel& model, double t);
Eigen::VectorXd forward_transform(const Eigen::VectorXd& X1, const ControlHistory& history,
                                  const DelayPropagators& props, double t);

// Feedback value α(t); 0 for t < D. Uses stored α on [max(t-D,D), t) plus the
// implicit endpoint term, so appending the returned value keeps the discrete
// identity α(t) = K1 Z1(t).
double feedback_alpha(const Eigen::VectorXd& X1, const ControlHistory& history, const GainSet& gains,
                      const ReducedModel& model, double t);
double feedback_alpha(const Eigen::VectorXd& X1, const ControlHistory& history, const GainSet& gains,
                      const DelayPropagators& props, double t);

// Neumann-series evaluation of α over the whole grid [0, t]; X1_path holds
// X1 at 0, dt, ..., t. Terms are accumulated until the sup-norm of a term
// drops below `term_tol` (default 1e-12) or max_terms is reached.
SeriesEval series_alpha(const std::vector<Eigen::VectorXd>& X1_path, const GainSet& gains,
                        const ReducedModel& model, double t, int max_terms,
                        double term_tol = 1e-12);

// Full series sums on the grid (one value per node, zero before D).
std::vector<double> series_alpha_path(const std::vector<Eigen::VectorXd>& X1_path, const GainSet& gains,
                                      const ReducedModel& model, double t, int max_terms,
                                      SeriesEval* diagnostics = nullptr, double term_tol = 1e-12);

// Kernel f on [0, horizon] by causal Volterra marching (trapezoid, implicit
// endpoint). The Neumann-series evaluation is run alongside and its maximal
// discrepancy recorded.
KernelTable kernel_table(const GainSet& gains, const ReducedModel& model, double dt, double horizon);

// Reconstruction X1(t) from a sampled Z1 path via the kernel formula,
// marching forward from t = 0 (X1 = Z1 for t <= D). The kernel horizon must
// cover t - D, the full memory of the reconstruction.
std::vector<Eigen::VectorXd> invert_transform_path(const std::vector<Eigen::VectorXd>& Z1_path,
                                                   const KernelTable& kernel);
Eigen::VectorXd invert_transform(const std::vector<Eigen::VectorXd>& Z1_path, const KernelTable& kernel,
                                 double t);

}  // namespace rdstab
