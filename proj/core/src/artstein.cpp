#include "rdstab/artstein.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace rdstab {

int ControlHistory::index_of(double t) const {
    if (!(dt > 0.0)) throw std::invalid_argument("ControlHistory: dt must be positive");
    const double k = (t - t0) / dt;
    const double r = std::round(k);
    // Snap tolerance: a fixed fraction of a step plus accumulated rounding,
    // never so wide that distinct nodes alias.
    if (std::abs(k - r) > 1e-6 + 1e-9 * std::abs(k))
        throw std::invalid_argument("ControlHistory: time is off the sample grid");
    return static_cast<int>(r);
}

double ControlHistory::value_at(double t) const {
    const int k = index_of(t);
    if (k < 0) return 0.0;
    if (k >= static_cast<int>(samples.size()))
        throw std::out_of_range("ControlHistory: requested time beyond recorded range");
    return samples[static_cast<std::size_t>(k)];
}

int delay_steps_of(double delay, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("delay_steps_of: dt must be positive");
    if (delay < 0.0) throw std::invalid_argument("delay_steps_of: delay must be nonnegative");
    const double k = delay / dt;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-12 * std::max(1.0, k))
        throw std::invalid_argument("dt must divide the delay D");
    return static_cast<int>(r);
}

int active_window_start(int m, int delay_steps) {
    return std::max(m - delay_steps, delay_steps);
}

DelayPropagators::DelayPropagators(const ReducedModel& model, double dt)
    : dt_(dt), delay_steps_(delay_steps_of(model.delay, dt)) {
    exp_minus_DA_ = mat_exp(model.A1, -model.delay);
    columns_.reserve(static_cast<std::size_t>(delay_steps_) + 1);
    const Eigen::MatrixXd step = mat_exp(model.A1, -dt);
    Eigen::VectorXd col = model.B1;
    columns_.push_back(col);
    for (int k = 1; k <= delay_steps_; ++k) {
        col = step * col;
        columns_.push_back(col);
    }
}

namespace {

// Trapezoid weight profile over the node window [lo, m]: dt/2 at both ends.
inline double trapezoid_weight(int i, int lo, int m, double dt) {
    return (i == lo || i == m) ? 0.5 * dt : dt;
}

}  // namespace

Eigen::VectorXd forward_transform(const Eigen::VectorXd& X1, const ControlHistory& history,
                                  const DelayPropagators& props, double t) {
    const int m = history.index_of(t);
    const int K = props.delay_steps();
    const int lo = active_window_start(m, K);
    Eigen::VectorXd Z1 = X1;
    if (lo >= m) return Z1;
    if (m > static_cast<int>(history.samples.size()) - 1)
        throw std::out_of_range("forward_transform: history does not cover [max(t-D,D), t]");
    for (int i = lo; i <= m; ++i) {
        const double a = history.samples[static_cast<std::size_t>(i)];
        if (a == 0.0) continue;
        Z1 += trapezoid_weight(i, lo, m, props.dt()) * a * props.column(K - (m - i));
    }
    return Z1;
}

Eigen::VectorXd forward_transform(const Eigen::VectorXd& X1, const ControlHistory& history,
                                  const ReducedModel& model, double t) {
    return forward_transform(X1, history, DelayPropagators(model, history.dt), t);
}

double feedback_alpha(const Eigen::VectorXd& X1, const ControlHistory& history, const GainSet& gains,
                      const DelayPropagators& props, double t) {
    const int m = history.index_of(t);
    const int K = props.delay_steps();
    if (m < K) return 0.0;  // no control before t = D

    double value = gains.K1.dot(X1);
    const int lo = active_window_start(m, K);
    if (lo >= m) return value;

    if (m - 1 > static_cast<int>(history.samples.size()) - 1)
        throw std::out_of_range("feedback_alpha: history has a gap on [max(t-D,D), t)");
    const double dt = props.dt();
    for (int i = lo; i < m; ++i) {
        const double a = history.samples[static_cast<std::size_t>(i)];
        if (a == 0.0) continue;
        value += trapezoid_weight(i, lo, m, dt) * a * gains.K1.dot(props.column(K - (m - i)));
    }
    // Implicit endpoint: the s = t node carries weight dt/2 and multiplies the
    // α(t) being defined; one scalar solve keeps α(t) = K1 Z1(t) on the grid.
    const double denom = 1.0 - 0.5 * dt * gains.K1.dot(props.column(K));
    if (std::abs(denom) < 0.25)
        throw std::runtime_error("feedback_alpha: dt too large for the implicit endpoint step");
    return value / denom;
}

double feedback_alpha(const Eigen::VectorXd& X1, const ControlHistory& history, const GainSet& gains,
                      const ReducedModel& model, double t) {
    return feedback_alpha(X1, history, gains, DelayPropagators(model, history.dt), t);
}

std::vector<double> series_alpha_path(const std::vector<Eigen::VectorXd>& X1_path, const GainSet& gains,
                                      const ReducedModel& model, double t, int max_terms,
                                      SeriesEval* diagnostics, double term_tol) {
    if (max_terms < 1) throw std::invalid_argument("series_alpha: max_terms must be positive");
    if (X1_path.size() < 2) throw std::invalid_argument("series_alpha: need at least two path samples");
    DelayPropagators props(model, t / (static_cast<double>(X1_path.size()) - 1.0));
    const double dt = props.dt();
    const int M = static_cast<int>(X1_path.size()) - 1;
    if (std::abs(M * dt - t) > 1e-9 * std::max(1.0, t))
        throw std::invalid_argument("series_alpha: path length does not match t");
    const int K = props.delay_steps();

    // Precompute the scalar kernel values K1 e^{-k dt A1} B1.
    std::vector<double> kcol(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) kcol[static_cast<std::size_t>(k)] = gains.K1.dot(props.column(k));

    std::vector<double> current(static_cast<std::size_t>(M) + 1, 0.0);
    for (int i = 0; i <= M; ++i) current[static_cast<std::size_t>(i)] = gains.K1.dot(X1_path[static_cast<std::size_t>(i)]);

    std::vector<double> sum(static_cast<std::size_t>(M) + 1, 0.0);
    SeriesEval eval;
    for (int j = 0; j < max_terms; ++j) {
        double sup = 0.0;
        for (int i = K; i <= M; ++i) {
            sum[static_cast<std::size_t>(i)] += current[static_cast<std::size_t>(i)];
            sup = std::max(sup, std::abs(current[static_cast<std::size_t>(i)]));
        }
        eval.term_sups.push_back(sup);
        eval.terms = j + 1;
        eval.last_term_sup = sup;
        if (sup <= term_tol) {
            eval.converged = true;
            break;
        }
        if (j + 1 == max_terms) break;

        // next = T_D current (full trapezoid; the endpoint value is known).
        std::vector<double> next(static_cast<std::size_t>(M) + 1, 0.0);
        for (int i = K + 1; i <= M; ++i) {
            const int lo = active_window_start(i, K);
            double acc = 0.0;
            for (int l = lo; l <= i; ++l)
                acc += trapezoid_weight(l, lo, i, dt) * kcol[static_cast<std::size_t>(K - (i - l))] *
                       current[static_cast<std::size_t>(l)];
            next[static_cast<std::size_t>(i)] = acc;
        }
        current = std::move(next);
    }
    if (diagnostics) *diagnostics = eval;
    return sum;
}

SeriesEval series_alpha(const std::vector<Eigen::VectorXd>& X1_path, const GainSet& gains,
                        const ReducedModel& model, double t, int max_terms, double term_tol) {
    SeriesEval eval;
    const std::vector<double> sum = series_alpha_path(X1_path, gains, model, t, max_terms, &eval, term_tol);
    eval.value = sum.back();
    return eval;
}

KernelTable kernel_table(const GainSet& gains, const ReducedModel& model, double dt, double horizon) {
    const int K = delay_steps_of(model.delay, dt);
    const int P = delay_steps_of(horizon, dt);  // same divisibility rule for the horizon
    if (P < 1) throw std::invalid_argument("kernel_table: horizon must span at least one step");

    const Eigen::Index m = model.A1.rows();
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(m, m);

    KernelTable table;
    table.dt = dt;
    table.delay = model.delay;

    // g(r) = e^{(r-D) A1} B1 K1 on 0 <= r <= D, the reach of one delay window.
    table.g_part.resize(static_cast<std::size_t>(K) + 1);
    {
        const Eigen::MatrixXd step = mat_exp(model.A1, dt);
        Eigen::VectorXd col = mat_exp(model.A1, -model.delay) * model.B1;
        table.g_part[0] = col * gains.K1;
        for (int j = 1; j <= K; ++j) {
            col = step * col;
            table.g_part[static_cast<std::size_t>(j)] = col * gains.K1;
        }
    }
    auto g = [&](int j) -> const Eigen::MatrixXd& {
        return (j <= K) ? table.g_part[static_cast<std::size_t>(j)] : zero;
    };

    // conv0 = (g * g)(r), supported on [0, 2D]; both factors cut the window,
    // so the jump of g always sits on a quadrature edge.
    std::vector<Eigen::MatrixXd> conv0(static_cast<std::size_t>(P) + 1, zero);
    for (int p = 1; p <= P; ++p) {
        const int lo = std::max(0, p - K);
        const int hi = std::min(p, K);
        if (lo >= hi) continue;
        Eigen::MatrixXd acc = zero;
        for (int q = lo; q <= hi; ++q) {
            const double w = (q == lo || q == hi) ? 0.5 * dt : dt;
            acc += w * g(p - q) * g(q);
        }
        conv0[static_cast<std::size_t>(p)] = acc;
    }

    // Marching for the continuous remainder: phi = g*g + g*phi, with the
    // u = r endpoint implicit (phi(0) = 0, so the recursion is causal).
    // The convolution runs on flat buffers: the table can hold 10^4+ entries
    // and per-entry dynamic-matrix arithmetic dominates otherwise.
    table.smooth.resize(static_cast<std::size_t>(P) + 1);
    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m) - 0.5 * dt * g(0);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    {
        const std::size_t mm = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
        std::vector<double> g_flat((static_cast<std::size_t>(K) + 1) * mm);
        for (int j = 0; j <= K; ++j)
            Eigen::Map<Eigen::MatrixXd>(g_flat.data() + static_cast<std::size_t>(j) * mm, m, m) = g(j);
        std::vector<double> phi_flat((static_cast<std::size_t>(P) + 1) * mm, 0.0);
        Eigen::MatrixXd rhs(m, m), prod(m, m);
        table.smooth[0] = zero;
        for (int p = 1; p <= P; ++p) {
            rhs = conv0[static_cast<std::size_t>(p)];
            const int lo = std::max(0, p - K);
            for (int q = lo; q < p; ++q) {
                const double w = (q == lo) ? 0.5 * dt : dt;
                const double* gm = g_flat.data() + static_cast<std::size_t>(p - q) * mm;
                const double* fm = phi_flat.data() + static_cast<std::size_t>(q) * mm;
                // rhs += w * g(p-q) * phi(q), all column-major m x m
                for (Eigen::Index c = 0; c < m; ++c)
                    for (Eigen::Index k2 = 0; k2 < m; ++k2) {
                        const double s = w * fm[static_cast<std::size_t>(c * m + k2)];
                        for (Eigen::Index r = 0; r < m; ++r)
                            rhs(r, c) += s * gm[static_cast<std::size_t>(k2 * m + r)];
                    }
            }
            prod = lu.solve(rhs);
            table.smooth[static_cast<std::size_t>(p)] = prod;
            Eigen::Map<Eigen::MatrixXd>(phi_flat.data() + static_cast<std::size_t>(p) * mm, m, m) = prod;
        }
    }

    // f = g + phi; at r = D this stores the left limit (the jump is -B1 K1).
    table.values.resize(static_cast<std::size_t>(P) + 1);
    for (int p = 0; p <= P; ++p)
        table.values[static_cast<std::size_t>(p)] = g(p) + table.smooth[static_cast<std::size_t>(p)];

    // Neumann-series cross-evaluation of the same fixed point on [0, min(horizon, 2D)]
    // (the series is iterated windowed quadrature, independent of the marching path).
    const int Ps = std::min(P, 2 * K);
    std::vector<Eigen::MatrixXd> series_sum(conv0.begin(), conv0.begin() + Ps + 1);
    std::vector<Eigen::MatrixXd> current(series_sum);
    const int max_terms = 60;
    table.series_terms = 1;
    table.series_last_term = 0.0;
    for (const auto& v : current) table.series_last_term = std::max(table.series_last_term, v.cwiseAbs().maxCoeff());
    for (int j = 1; j < max_terms && table.series_last_term > 1e-12; ++j) {
        std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(Ps) + 1, zero);
        for (int p = 1; p <= Ps; ++p) {
            const int lo = std::max(0, p - K);
            Eigen::MatrixXd acc = zero;
            for (int q = lo; q <= p; ++q) {
                const double w = (q == lo || q == p) ? 0.5 * dt : dt;
                acc += w * g(p - q) * current[static_cast<std::size_t>(q)];
            }
            next[static_cast<std::size_t>(p)] = acc;
        }
        current = std::move(next);
        double sup = 0.0;
        for (int p = 0; p <= Ps; ++p) {
            series_sum[static_cast<std::size_t>(p)] += current[static_cast<std::size_t>(p)];
            sup = std::max(sup, current[static_cast<std::size_t>(p)].cwiseAbs().maxCoeff());
        }
        table.series_terms = j + 1;
        table.series_last_term = sup;
    }
    double disc = 0.0;
    for (int p = 0; p <= Ps; ++p)
        disc = std::max(disc, (table.smooth[static_cast<std::size_t>(p)] - series_sum[static_cast<std::size_t>(p)])
                                  .cwiseAbs()
                                  .maxCoeff());
    table.series_discrepancy = disc;
    return table;
}

std::vector<Eigen::VectorXd> invert_transform_path(const std::vector<Eigen::VectorXd>& Z1_path,
                                                   const KernelTable& kernel) {
    if (Z1_path.empty()) throw std::invalid_argument("invert_transform: empty Z1 path");
    const double dt = kernel.dt;
    const int K = delay_steps_of(kernel.delay, dt);
    const int M = static_cast<int>(Z1_path.size()) - 1;
    if (K == 0) return Z1_path;  // D = 0: the transform is the identity
    if (static_cast<int>(kernel.smooth.size()) - 1 < std::min(M, std::max(M - K, K)))
        throw std::invalid_argument("invert_transform: kernel horizon must cover t - D");
    const Eigen::Index m = Z1_path.front().size();

    std::vector<Eigen::VectorXd> X(static_cast<std::size_t>(M) + 1);

    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m) + 0.5 * dt * kernel.g_part[0];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);

    // X(t) = Z(t) - ∫_{max(t-D,D)}^t g(t-s) X(s) ds - ∫_D^t phi(t-s) X(s) ds.
    // The g window carries the jump on its edge; phi is continuous and keeps
    // the (exponentially decaying) closed-loop memory back to s = D. The phi
    // convolution runs over flat buffers: its cost is O(steps^2) and dominates
    // long reconstructions.
    const std::size_t mm = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    const std::size_t P = kernel.smooth.size();
    std::vector<double> phi_flat(P * mm);
    for (std::size_t p = 0; p < P; ++p)
        Eigen::Map<Eigen::MatrixXd>(phi_flat.data() + p * mm, m, m) = kernel.smooth[p];
    std::vector<double> x_flat((static_cast<std::size_t>(M) + 1) * static_cast<std::size_t>(m), 0.0);
    Eigen::VectorXd rhs(m), acc(m);

    for (int i = 0; i <= M; ++i) {
        if (i <= K) {  // t <= D: X1 = Z1
            X[static_cast<std::size_t>(i)] = Z1_path[static_cast<std::size_t>(i)];
            Eigen::Map<Eigen::VectorXd>(x_flat.data() + static_cast<std::size_t>(i) * m, m) =
                X[static_cast<std::size_t>(i)];
            continue;
        }
        rhs = Z1_path[static_cast<std::size_t>(i)];
        const int lo_g = std::max(i - K, K);
        for (int s = lo_g; s < i; ++s)
            rhs -= trapezoid_weight(s, lo_g, i, dt) * kernel.g_part[static_cast<std::size_t>(i - s)] *
                   X[static_cast<std::size_t>(s)];
        acc.setZero();
        for (int s = K; s < i; ++s) {  // phi(0) = 0, so the s = i endpoint drops
            const double w = (s == K) ? 0.5 : 1.0;
            const double* pm = phi_flat.data() + static_cast<std::size_t>(i - s) * mm;
            const double* xv = x_flat.data() + static_cast<std::size_t>(s) * m;
            for (Eigen::Index c = 0; c < m; ++c) {
                const double xc = w * xv[c];
                for (Eigen::Index r = 0; r < m; ++r) acc(r) += pm[static_cast<std::size_t>(c * m + r)] * xc;
            }
        }
        rhs -= dt * acc;
        X[static_cast<std::size_t>(i)] = lu.solve(rhs);
        Eigen::Map<Eigen::VectorXd>(x_flat.data() + static_cast<std::size_t>(i) * m, m) =
            X[static_cast<std::size_t>(i)];
    }
    return X;
}

Eigen::VectorXd invert_transform(const std::vector<Eigen::VectorXd>& Z1_path, const KernelTable& kernel,
                                 double t) {
    const int M = static_cast<int>(Z1_path.size()) - 1;
    if (std::abs(M * kernel.dt - t) > 1e-9 * std::max(1.0, t))
        throw std::invalid_argument("invert_transform: Z1 path does not cover t");
    return invert_transform_path(Z1_path, kernel).back();
}

}  // namespace rdstab
