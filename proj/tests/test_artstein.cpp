#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "rdstab/artstein.hpp"
#include "support/series_oracle.hpp"
#include "support/test_models.hpp"

using namespace rdstab;
using rdstab::testing::Lcg;
using rdstab::testing::random_model;

namespace {

ReducedModel scalar_model(double delay) {
    ReducedModel model;
    model.n = 0;
    model.A1 = Eigen::MatrixXd::Zero(1, 1);
    model.B1 = Eigen::VectorXd::Ones(1);
    model.delay = delay;
    return model;
}

GainSet plain_gains(const Eigen::RowVectorXd& K1, double delay) {
    GainSet gains;
    gains.delay = delay;
    gains.K1 = K1;
    gains.P = Eigen::MatrixXd::Identity(K1.size(), K1.size());
    gains.weight_M = 1.0;
    return gains;
}

// Closed-loop path of X' = A1 X + B1 alpha(t-D) with the library feedback,
// the held-input exponential step evaluated through the augmented exponential.
struct ClosedLoop {
    std::vector<Eigen::VectorXd> X, Z;
    ControlHistory history;
};

ClosedLoop march_closed_loop(const ReducedModel& model, const GainSet& gains, const Eigen::VectorXd& x0,
                             double dt, double t_final) {
    const Eigen::Index m = model.A1.rows();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(m + 1, m + 1);
    aug.topLeftCorner(m, m) = model.A1;
    aug.topRightCorner(m, 1) = model.B1;
    const Eigen::MatrixXd E = mat_exp(aug, dt);
    const Eigen::MatrixXd Phi = E.topLeftCorner(m, m);
    const Eigen::VectorXd Gamma = E.topRightCorner(m, 1);

    DelayPropagators props(model, dt);
    const int K = props.delay_steps();
    const int M = static_cast<int>(std::llround(t_final / dt));

    ClosedLoop out;
    out.history = ControlHistory{dt, 0.0, {}};
    Eigen::VectorXd x = x0;
    for (int i = 0; i <= M; ++i) {
        const double t = i * dt;
        const double alpha = feedback_alpha(x, out.history, gains, props, t);
        out.history.append(alpha);
        out.X.push_back(x);
        out.Z.push_back(forward_transform(x, out.history, props, t));
        const double alpha_D = (i >= K) ? out.history.samples[static_cast<std::size_t>(i - K)] : 0.0;
        x = (Phi * x + Gamma * alpha_D).eval();
    }
    return out;
}

}  // namespace

TEST_CASE("control history indexing") {
    ControlHistory h{0.1, 0.0, {1.0, 2.0, 3.0}};
    CHECK(h.value_at(0.2) == 3.0);
    CHECK(h.value_at(-0.5) == 0.0);  // before the record: no control
    CHECK_THROWS_AS(h.value_at(0.3), std::out_of_range);
    CHECK_THROWS_AS(h.value_at(0.123), std::invalid_argument);  // off-grid
}

TEST_CASE("delay step counting") {
    CHECK(delay_steps_of(1.0, 0.01) == 100);
    CHECK(delay_steps_of(0.0, 0.01) == 0);
    CHECK_THROWS_AS(delay_steps_of(1.0, 0.003), std::invalid_argument);
}

TEST_CASE("active window matches the three delay regimes") {
    const int K = 10;  // D = K dt
    CHECK(active_window_start(5, K) >= 5);    // t < D: empty
    CHECK(active_window_start(10, K) == 10);  // t = D: empty boundary
    CHECK(active_window_start(15, K) == 10);  // D < t < 2D: (D, t)
    CHECK(active_window_start(20, K) == 10);  // t = 2D: both forms agree
    CHECK(active_window_start(27, K) == 17);  // t > 2D: (t-D, t)
    CHECK(active_window_start(3, 0) == 3);    // D = 0: always empty
}

TEST_CASE("forward transform trivial cases") {
    const ReducedModel model = scalar_model(1.0);
    const double dt = 0.01;
    SUBCASE("zero control history") {
        ControlHistory h{dt, 0.0, std::vector<double>(301, 0.0)};
        const Eigen::VectorXd X = Eigen::VectorXd::Constant(1, 2.5);
        CHECK((forward_transform(X, h, model, 3.0) - X).norm() == 0.0);
    }
    SUBCASE("zero delay") {
        const ReducedModel d0 = scalar_model(0.0);
        ControlHistory h{dt, 0.0, std::vector<double>(301, 1.0)};
        const Eigen::VectorXd X = Eigen::VectorXd::Constant(1, -1.0);
        CHECK((forward_transform(X, h, d0, 3.0) - X).norm() == 0.0);
    }
    SUBCASE("constant control integrates exactly") {
        ControlHistory h{dt, 0.0, std::vector<double>(301, 1.0)};
        const Eigen::VectorXd X = Eigen::VectorXd::Constant(1, 0.7);
        const Eigen::VectorXd Z = forward_transform(X, h, model, 3.0);
        CHECK(std::abs(Z(0) - (X(0) + 1.0)) < 1e-10);  // trapezoid exact for constants
    }
    SUBCASE("coverage precondition") {
        ControlHistory h{dt, 0.0, std::vector<double>(100, 1.0)};
        const Eigen::VectorXd X = Eigen::VectorXd::Zero(1);
        CHECK_THROWS_AS(forward_transform(X, h, model, 3.0), std::out_of_range);
    }
}

TEST_CASE("feedback vanishes before the delay and for zero gain") {
    const ReducedModel model = scalar_model(1.0);
    const GainSet zero = plain_gains(Eigen::RowVectorXd::Zero(1), 1.0);
    const GainSet live = plain_gains(Eigen::RowVectorXd::Constant(1, -0.4), 1.0);
    ControlHistory h{0.01, 0.0, std::vector<double>(401, 0.5)};
    const Eigen::VectorXd X = Eigen::VectorXd::Constant(1, 3.0);
    CHECK(feedback_alpha(X, h, live, model, 0.5) == 0.0);  // t < D
    CHECK(feedback_alpha(X, h, zero, model, 2.0) == 0.0);
    CHECK(feedback_alpha(X, h, zero, model, 4.0) == 0.0);
}

TEST_CASE("feedback equals K1 Z1 along a closed-loop path") {
    Lcg rng(53);
    const ReducedModel model = random_model(rng, 1, 0.5);
    const GainSet gains = design_gains(model, {{-0.5, 0.0}, {-0.9, 0.0}}, 0.3, 0.8);
    const ClosedLoop loop = march_closed_loop(model, gains, Eigen::Vector2d(0.0, 1.0), 0.5 / 64, 6.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < loop.Z.size(); ++i) {
        const double t = static_cast<double>(i) * (0.5 / 64);
        if (t < 0.5) continue;
        worst = std::max(worst, std::abs(gains.K1.dot(loop.Z[i]) - loop.history.samples[i]));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("series against the piecewise closed form of the scalar fixed point") {
    // alpha(t) = k + k ∫_{max(t-D,D)}^t alpha(s) ds, X1 ≡ 1:
    // alpha = k e^{k(t-D)} on [D, 2D], then (k e^{kD} - k^2 (t-2D)) e^{k(t-2D)}.
    const double k = 0.5, D = 1.0, dt = D / 2000;
    const ReducedModel model = scalar_model(D);
    const GainSet gains = plain_gains(Eigen::RowVectorXd::Constant(1, k), D);
    const double t_eval = 2.5 * D;
    const int M = static_cast<int>(std::llround(t_eval / dt));
    const std::vector<Eigen::VectorXd> path(static_cast<std::size_t>(M) + 1, Eigen::VectorXd::Ones(1));

    const SeriesEval eval = series_alpha(path, gains, model, t_eval, 60);
    CHECK(eval.converged);
    const double exact = (k * std::exp(k * D) - k * k * (t_eval - 2 * D)) * std::exp(k * (t_eval - 2 * D));
    CHECK(std::abs(eval.value - exact) < 1e-8);

    // Mid-first-interval value through the path variant.
    SeriesEval diag;
    const std::vector<double> sum = series_alpha_path(path, gains, model, t_eval, 60, &diag);
    const int i_mid = static_cast<int>(std::llround(1.5 * D / dt));
    CHECK(std::abs(sum[static_cast<std::size_t>(i_mid)] - k * std::exp(k * 0.5 * D)) < 1e-8);
    CHECK(sum[static_cast<std::size_t>(std::llround(0.5 * D / dt))] == 0.0);  // quiet before D
}

TEST_CASE("series reproduces the history-based feedback and the factorial bound") {
    Lcg rng(59);
    const ReducedModel model = random_model(rng, 1, 0.5);
    const GainSet gains = design_gains(model, {{-0.5, 0.0}, {-0.9, 0.0}}, 0.3, 0.8);
    const double dt = 0.5 / 64;
    const ClosedLoop loop = march_closed_loop(model, gains, Eigen::Vector2d(0.0, 1.0), dt, 6.0);

    SeriesEval diag;
    const std::vector<double> sum = series_alpha_path(loop.X, gains, model, 6.0, 60, &diag);
    CHECK(diag.converged);
    double worst = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i)
        worst = std::max(worst, std::abs(sum[i] - loop.history.samples[i]));
    CHECK(worst < 1e-8);

    // Independent term-by-term oracle: same sums, and every term below the
    // composite factorial bound.
    const auto oracle = rdstab::testing::series_terms_oracle(loop.X, gains, model, dt, diag.terms);
    double sum_diff = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i)
        sum_diff = std::max(sum_diff, std::abs(oracle.sum[i] - sum[i]));
    CHECK(sum_diff < 1e-12);
    // Two discretization allowances on the continuum bound: nodes within 2j
    // steps of t = D are skipped (the j nested windows hold too few quadrature
    // nodes to resolve the simplex volume the bound counts, while the terms
    // sit at the truncation floor), and a (1 + kappa dt)^j factor absorbs the
    // per-level trapezoid inflation, kappa = sup_u |K1 e^{-u A1} B1|.
    const int K = delay_steps_of(model.delay, dt);
    double kappa = 0.0;
    {
        DelayPropagators props(model, dt);
        for (int k = 0; k <= K; ++k) kappa = std::max(kappa, std::abs(gains.K1.dot(props.column(k))));
    }
    for (int j = 1; j < static_cast<int>(oracle.terms.size()); ++j) {
        const double slack = std::pow(1.0 + kappa * dt, j);
        for (int i = K; i < static_cast<int>(oracle.terms[static_cast<std::size_t>(j)].size()); ++i) {
            if (i - K <= 2 * j) continue;
            const double bound =
                rdstab::testing::series_term_bound(loop.X, gains, model, dt, j, i);
            CHECK(std::abs(oracle.terms[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) <=
                  bound * slack + 1e-12);
        }
    }
}

TEST_CASE("series flags non-convergence instead of throwing") {
    // A hot gain over a long horizon: the term norms grow well past the
    // truncation threshold before the factorial decay can bite within the cap.
    const double k = 2.0, D = 1.0, dt = D / 50;
    const ReducedModel model = scalar_model(D);
    const GainSet gains = plain_gains(Eigen::RowVectorXd::Constant(1, k), D);
    const double t_eval = 20.0;
    const int M = static_cast<int>(std::llround(t_eval / dt));
    const std::vector<Eigen::VectorXd> path(static_cast<std::size_t>(M) + 1, Eigen::VectorXd::Ones(1));
    const SeriesEval eval = series_alpha(path, gains, model, t_eval, 30);
    CHECK_FALSE(eval.converged);
    CHECK(eval.terms == 30);
    CHECK(eval.last_term_sup > 1e-9);
}

TEST_CASE("kernel table") {
    SUBCASE("zero gain gives the zero kernel") {
        const ReducedModel model = scalar_model(1.0);
        const GainSet gains = plain_gains(Eigen::RowVectorXd::Zero(1), 1.0);
        const KernelTable table = kernel_table(gains, model, 0.01, 2.0);
        for (const auto& f : table.values) CHECK(f.norm() == 0.0);
        CHECK(table.series_discrepancy == 0.0);
    }
    SUBCASE("scalar closed form k e^{kr} on [0, D]") {
        const double k = 0.5, D = 1.0, dt = D / 2000;
        const ReducedModel model = scalar_model(D);
        const GainSet gains = plain_gains(Eigen::RowVectorXd::Constant(1, k), D);
        const KernelTable table = kernel_table(gains, model, dt, D);
        double worst = 0.0;
        for (std::size_t p = 0; p < table.values.size(); ++p)
            worst = std::max(worst, std::abs(table.values[p](0, 0) - k * std::exp(k * static_cast<double>(p) * dt)));
        CHECK(worst < 1e-8);
    }
    SUBCASE("marching agrees with the Neumann series on [0, 2D]") {
        Lcg rng(61);
        const ReducedModel model = random_model(rng, 1, 0.5);
        const GainSet gains = design_gains(model, {{-0.5, 0.0}, {-0.9, 0.0}}, 0.3, 0.8);
        const KernelTable table = kernel_table(gains, model, 0.5 / 128, 1.0);
        CHECK(table.series_discrepancy < 1e-8);
        CHECK(table.series_last_term <= 1e-12);
        CHECK(table.series_terms <= 60);
    }
}

TEST_CASE("transform inversion") {
    SUBCASE("identity cases") {
        const ReducedModel model = scalar_model(1.0);
        const GainSet zero = plain_gains(Eigen::RowVectorXd::Zero(1), 1.0);
        const KernelTable table = kernel_table(zero, model, 0.05, 3.0);
        std::vector<Eigen::VectorXd> Z;
        for (int i = 0; i <= 80; ++i) Z.push_back(Eigen::VectorXd::Constant(1, std::sin(0.1 * i)));
        const auto X = invert_transform_path(Z, table);
        for (std::size_t i = 0; i < Z.size(); ++i) CHECK((X[i] - Z[i]).norm() == 0.0);  // f = 0
        CHECK((invert_transform(Z, table, 4.0) - Z.back()).norm() == 0.0);
    }
    SUBCASE("round trip on a closed-loop path") {
        Lcg rng(67);
        const ReducedModel model = random_model(rng, 1, 0.5);
        const GainSet gains = design_gains(model, {{-0.5, 0.0}, {-0.9, 0.0}}, 0.3, 0.8);
        const double dt = 0.5 / 256, T = 8.0;
        const ClosedLoop loop = march_closed_loop(model, gains, Eigen::Vector2d(0.0, 1.0), dt, T);
        const KernelTable table = kernel_table(gains, model, dt, T - model.delay);
        const auto X = invert_transform_path(loop.Z, table);
        double worst = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) worst = std::max(worst, (X[i] - loop.X[i]).norm());
        CHECK(worst < 1e-5);  // 5x the observed quadrature floor at this step
        for (std::size_t i = 0; i * dt < 0.5; ++i) CHECK((X[i] - loop.Z[i]).norm() == 0.0);  // t < D
    }
    SUBCASE("horizon precondition") {
        const ReducedModel model = scalar_model(1.0);
        const GainSet gains = plain_gains(Eigen::RowVectorXd::Constant(1, -0.5), 1.0);
        const KernelTable table = kernel_table(gains, model, 0.05, 1.0);
        std::vector<Eigen::VectorXd> Z(200, Eigen::VectorXd::Zero(1));  // t up to ~10
        CHECK_THROWS_AS(invert_transform_path(Z, table), std::invalid_argument);
    }
}

TEST_CASE("transformed dynamics residual shrinks at first order") {
    Lcg rng(71);
    const ReducedModel model = random_model(rng, 1, 0.5);
    const GainSet gains = design_gains(model, {{-0.5, 0.0}, {-0.9, 0.0}}, 0.3, 0.8);
    const Eigen::VectorXd G = mat_exp(model.A1, -model.delay) * model.B1;
    auto residual = [&](double dt) {
        const ClosedLoop loop = march_closed_loop(model, gains, Eigen::Vector2d(0.0, 1.0), dt, 5.0);
        double sup = 0.0;
        for (std::size_t i = 1; i + 1 < loop.Z.size(); ++i) {
            const double t = static_cast<double>(i) * dt;
            if (std::abs(t - 0.5) <= 1.5 * dt || std::abs(t - 1.0) <= 1.5 * dt) continue;
            const Eigen::VectorXd dz = (loop.Z[i + 1] - loop.Z[i - 1]) / (2.0 * dt);
            sup = std::max(sup, (dz - model.A1 * loop.Z[i] - G * loop.history.samples[i]).norm());
        }
        return sup;
    };
    const double coarse = residual(0.5 / 100), fine = residual(0.5 / 200);
    CHECK(coarse / fine > 1.6);
    CHECK(coarse / fine < 2.6);
}
