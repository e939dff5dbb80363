#include "rdstab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rdstab {

namespace {

struct ModalData {
    std::vector<double> lambda, a, b;
};

ModalData modal_data(const SpectralBasis& basis, int N) {
    if (N < 1 || N > static_cast<int>(basis.modes.size()))
        throw std::invalid_argument("simulator: N exceeds the available modes");
    ModalData md;
    md.lambda.reserve(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        const EigenMode& mode = basis.modes[static_cast<std::size_t>(j)];
        md.lambda.push_back(mode.lambda);
        md.a.push_back(mode.a_coef);
        md.b.push_back(mode.b_coef);
    }
    return md;
}

// phi1(z) = (e^z - 1)/z, the exponential-integrator weight.
double phi1(double z) {
    if (std::abs(z) < 1e-12) return 1.0;
    return std::expm1(z) / z;
}

void advance(double& uD, Eigen::VectorXd& w, const ModalData& md, double alpha_D, double dt,
             std::span<const double> exp_l, std::span<const double> phi_l) {
    const double u_mid = uD + 0.5 * dt * alpha_D;  // u_D is linear within the step
    for (int j = 0; j < w.size(); ++j) {
        const auto u = static_cast<std::size_t>(j);
        w(j) = exp_l[u] * w(j) + dt * phi_l[u] * (md.a[u] * u_mid + md.b[u] * alpha_D);
    }
    uD += dt * alpha_D;
}

}  // namespace

SimState step(const SimState& state, const GainSet& gains, const ReducedModel& model,
              const SpectralBasis& basis, double dt) {
    const int N = static_cast<int>(state.w.size());
    const ModalData md = modal_data(basis, N);
    DelayPropagators props(model, dt);
    const int K = props.delay_steps();

    SimState next = state;
    Eigen::VectorXd X1(model.n + 1);
    X1(0) = next.uD;
    for (int j = 0; j < model.n; ++j) X1(j + 1) = next.w(j);
    const double alpha = feedback_alpha(X1, next.history, gains, props, next.t);
    next.history.append(alpha);

    const int m = next.history.index_of(next.t);
    const double alpha_D = (m >= K) ? next.history.samples[static_cast<std::size_t>(m - K)] : 0.0;

    std::vector<double> exp_l(static_cast<std::size_t>(N)), phi_l(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        exp_l[static_cast<std::size_t>(j)] = std::exp(md.lambda[static_cast<std::size_t>(j)] * dt);
        phi_l[static_cast<std::size_t>(j)] = phi1(md.lambda[static_cast<std::size_t>(j)] * dt);
    }
    advance(next.uD, next.w, md, alpha_D, dt, exp_l, phi_l);
    next.t += dt;
    if (!std::isfinite(next.uD) || !next.w.allFinite())
        throw std::runtime_error("simulator: state diverged (NaN/overflow) at t = " + std::to_string(next.t));
    return next;
}

Trajectory run(const SimConfig& config, const GainSet& gains, const ReducedModel& model,
               const SpectralBasis& basis) {
    if (!(config.dt > 0.0)) throw std::invalid_argument("simulator: dt must be positive");
    if (config.record_every < 1) throw std::invalid_argument("simulator: record_every must be >= 1");
    if (config.t_final < 2.0 * model.delay)
        throw std::invalid_argument("simulator: T must be at least 2D for the certificate window");
    if (static_cast<int>(config.y0.size()) != basis.grid.points())
        throw std::invalid_argument("simulator: y0 must be sampled on the basis grid");

    const int N = config.modes;
    if (N < model.n + 1) throw std::invalid_argument("simulator: N must be at least n+1");
    const ModalData md = modal_data(basis, N);
    DelayPropagators props(model, config.dt);
    const int K = props.delay_steps();
    const double dt = config.dt;
    const int M = static_cast<int>(std::round(config.t_final / dt));
    if (std::abs(M * dt - config.t_final) > 1e-9 * std::max(1.0, config.t_final))
        throw std::invalid_argument("simulator: dt must divide T");

    // Initial modal coefficients: w_j(0) = <y0, e_j> (u_D(0) = 0, so w(0) = y0).
    Eigen::VectorXd w(N);
    for (int j = 0; j < N; ++j)
        w(j) = inner_l2(basis.grid, config.y0, basis.modes[static_cast<std::size_t>(j)].samples);
    double uD = 0.0;

    std::vector<double> exp_l(static_cast<std::size_t>(N)), phi_l(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        exp_l[static_cast<std::size_t>(j)] = std::exp(md.lambda[static_cast<std::size_t>(j)] * dt);
        phi_l[static_cast<std::size_t>(j)] = phi1(md.lambda[static_cast<std::size_t>(j)] * dt);
    }

    // Mode samples as a (points x N) matrix for the profile reconstruction.
    Eigen::MatrixXd modes_matrix(basis.grid.points(), N);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < basis.grid.points(); ++i)
            modes_matrix(i, j) = basis.modes[static_cast<std::size_t>(j)].samples[static_cast<std::size_t>(i)];
    Eigen::VectorXd x_over_L(basis.grid.points());
    for (int i = 0; i < basis.grid.points(); ++i) x_over_L(i) = basis.grid.x(i) / basis.grid.length;

    Trajectory traj;
    traj.dt = dt;
    traj.delay = model.delay;
    traj.weight_M = gains.weight_M;
    traj.length = basis.grid.length;
    traj.n = model.n;
    traj.modes = N;
    traj.record_every = config.record_every;
    traj.grid = basis.grid;

    ControlHistory history{dt, 0.0, {}};
    history.samples.reserve(static_cast<std::size_t>(M) + 1);
    traj.z1Pz1_full.reserve(static_cast<std::size_t>(M) + 1);
    traj.alpha_full.reserve(static_cast<std::size_t>(M) + 1);
    traj.X1_full.reserve(static_cast<std::size_t>(M) + 1);
    traj.Z1_full.reserve(static_cast<std::size_t>(M) + 1);

    std::vector<double> lambdas_N(md.lambda.begin(), md.lambda.end());

    for (int m = 0; m <= M; ++m) {
        const double t = m * dt;
        Eigen::VectorXd X1(model.n + 1);
        X1(0) = uD;
        for (int j = 0; j < model.n; ++j) X1(j + 1) = w(j);

        const double alpha = feedback_alpha(X1, history, gains, props, t);
        if (!std::isfinite(alpha))
            throw std::runtime_error("simulator: feedback diverged (NaN/overflow) at t = " + std::to_string(t));
        history.append(alpha);

        const Eigen::VectorXd Z1 = forward_transform(X1, history, props, t);
        traj.alpha_full.push_back(alpha);
        traj.X1_full.push_back(X1);
        traj.Z1_full.push_back(Z1);
        traj.z1Pz1_full.push_back(Z1.dot(gains.P * Z1));

        if (m % config.record_every == 0 || m == M) {
            traj.times.push_back(t);
            traj.uD.push_back(uD);
            traj.alpha.push_back(alpha);
            traj.w.push_back(w);
            traj.X1.push_back(X1);
            traj.Z1.push_back(Z1);
            traj.vD.push_back(lyapunov_VD(traj.z1Pz1_full, t, dt, model, gains, w, lambdas_N));

            std::vector<double> profile(static_cast<std::size_t>(basis.grid.points()));
            Eigen::Map<Eigen::VectorXd>(profile.data(), basis.grid.points()) =
                modes_matrix * w + x_over_L * uD;
            traj.l2_y.push_back(norm_l2(basis.grid, profile));
            traj.h1_y.push_back(h1_norm_grid(basis.grid, profile));
            traj.y.push_back(std::move(profile));

            if (!w.allFinite())
                throw std::runtime_error("simulator: state diverged (NaN/overflow) at t = " + std::to_string(t));
        }
        if (m == M) break;

        const double alpha_D = (m >= K) ? history.samples[static_cast<std::size_t>(m - K)] : 0.0;
        advance(uD, w, md, alpha_D, dt, exp_l, phi_l);
        if (!std::isfinite(uD))
            throw std::runtime_error("simulator: boundary state diverged (NaN/overflow) at t = " + std::to_string(t));
    }
    return traj;
}

double h1_norm_spectral(const Eigen::VectorXd& w_modal, const SpectralBasis& basis) {
    const int N = static_cast<int>(w_modal.size());
    if (N > static_cast<int>(basis.modes.size()))
        throw std::invalid_argument("h1_norm_spectral: more coefficients than modes");
    const Grid1D& grid = basis.grid;

    std::vector<double> profile(static_cast<std::size_t>(grid.points()), 0.0);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < grid.points(); ++i)
            profile[static_cast<std::size_t>(i)] +=
                w_modal(j) * basis.modes[static_cast<std::size_t>(j)].samples[static_cast<std::size_t>(i)];

    const std::vector<double> c = basis.spec.c_on(grid);
    std::vector<double> cw2(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) cw2[i] = c[i] * profile[i] * profile[i];

    double rhs = trapezoid(grid, cw2);
    double scale = std::abs(rhs);
    for (int j = 0; j < N; ++j) {
        const double term = basis.modes[static_cast<std::size_t>(j)].lambda * w_modal(j) * w_modal(j);
        rhs -= term;
        scale += std::abs(term);
    }
    if (rhs < -1e-10 * std::max(1.0, scale))
        throw std::runtime_error("h1_norm_spectral: negative norm square (inconsistent inputs)");
    return std::sqrt(std::max(rhs, 0.0));
}

double h1_seminorm_grid(std::span<const double> profile, double h) {
    if (profile.size() < 2) throw std::invalid_argument("h1_seminorm_grid: need at least two samples");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
        const double d = (profile[i + 1] - profile[i]) / h;
        acc += d * d;
    }
    return std::sqrt(acc * h);
}

double h1_norm_grid(const Grid1D& grid, std::span<const double> profile) {
    const double l2 = norm_l2(grid, profile);
    const double semi = h1_seminorm_grid(profile, grid.h());
    return std::sqrt(l2 * l2 + semi * semi);
}

double lyapunov_VD(std::span<const double> z1Pz1, double t, double dt, const ReducedModel& model,
                   const GainSet& gains, const Eigen::VectorXd& w_modal, std::span<const double> lambdas) {
    if (static_cast<std::size_t>(w_modal.size()) != lambdas.size())
        throw std::invalid_argument("lyapunov_VD: modal data mismatch");
    const int K = delay_steps_of(model.delay, dt);
    const int m = static_cast<int>(std::round(t / dt));
    if (std::abs(m * dt - t) > 1e-9 * std::max(1.0, t) || m >= static_cast<int>(z1Pz1.size()))
        throw std::invalid_argument("lyapunov_VD: Z1 series does not cover t");

    double value = 0.5 * gains.weight_M * z1Pz1[static_cast<std::size_t>(m)];

    const int lo = active_window_start(m, K);
    if (lo < m) {
        double integral = 0.5 * (z1Pz1[static_cast<std::size_t>(lo)] + z1Pz1[static_cast<std::size_t>(m)]);
        for (int i = lo + 1; i < m; ++i) integral += z1Pz1[static_cast<std::size_t>(i)];
        value += 0.5 * gains.weight_M * integral * dt;
    }
    for (int j = 0; j < w_modal.size(); ++j)
        value -= 0.5 * lambdas[static_cast<std::size_t>(j)] * w_modal(j) * w_modal(j);
    return value;
}

DecayFit decay_fit(std::span<const double> times, std::span<const double> values, double t_a, double t_b) {
    if (times.size() != values.size()) throw std::invalid_argument("decay_fit: series size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_a || times[i] > t_b) continue;
        if (!(values[i] > 0.0)) throw std::invalid_argument("decay_fit: values must be positive on the window");
        const double x = times[i], y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) throw std::invalid_argument("decay_fit: window contains fewer than two samples");
    const double n = count;
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("decay_fit: degenerate window");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;

    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_a || times[i] > t_b) continue;
        const double y = std::log(values[i]);
        ss_res += (y - (intercept + slope * times[i])) * (y - (intercept + slope * times[i]));
        ss_tot += (y - mean) * (y - mean);
    }
    const double r2 = (ss_tot <= 1e-30) ? 1.0 : 1.0 - ss_res / ss_tot;
    return DecayFit{slope, r2};
}

}  // namespace rdstab
