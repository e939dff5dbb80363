#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "rdstab/gain.hpp"
#include "rdstab/reduction.hpp"
#include "support/test_models.hpp"

using namespace rdstab;
using rdstab::testing::Lcg;
using rdstab::testing::random_model;

namespace {

SpectralBasis sec3_basis(int modes = 6, int grid = 1200) {
    OperatorSpec spec;
    spec.length = 2.0 * std::numbers::pi;
    spec.c_samples.assign(33, 0.5);
    return solve_eigen(spec, modes, grid);
}

}  // namespace

TEST_CASE("reduced model of the reference problem") {
    const ReducedModel model = build_reduced(sec3_basis(), 1.0);
    REQUIRE(model.n == 1);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    CHECK(std::abs(model.A1(0, 0)) == 0.0);
    CHECK(model.A1(0, 1) == 0.0);
    CHECK(std::abs(model.A1(1, 0) - inv_sqrt_pi) < 1e-4);
    CHECK(std::abs(model.A1(1, 1) - 0.25) < 1e-4);
    CHECK(model.B1(0) == 1.0);
    CHECK(std::abs(model.B1(1) - (-2.0 * inv_sqrt_pi)) < 1e-4);
    CHECK(model.delay == 1.0);
    CHECK(model.margin == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("all modes stable: the state reduces to u_D") {
    OperatorSpec spec;
    spec.length = 2.0 * std::numbers::pi;
    spec.c_samples.assign(33, -1.0);
    const ReducedModel model = build_reduced(solve_eigen(spec, 4, 800), 1.0);
    CHECK(model.n == 0);
    CHECK(model.A1.rows() == 1);
    CHECK(model.A1(0, 0) == 0.0);
    CHECK(model.B1(0) == 1.0);
}

TEST_CASE("first row of A1 is zero for random models") {
    Lcg rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const ReducedModel model = random_model(rng, rng.integer(1, 5));
        for (int j = 0; j <= model.n; ++j) CHECK(model.A1(0, j) == 0.0);
    }
}

TEST_CASE("kalman determinant of the reference model") {
    const ReducedModel model = build_reduced(sec3_basis(), 1.0);
    const KalmanResult result = kalman_check(model);
    CHECK(result.rank_ok);
    CHECK(std::abs(result.det - 0.5 / std::sqrt(std::numbers::pi)) < 1e-4);
}

TEST_CASE("constructed rank deficiency is reported, not thrown") {
    ReducedModel model;
    model.n = 1;
    model.delay = 0.0;
    model.lambdas = {0.5};
    model.A1 = Eigen::MatrixXd::Zero(2, 2);
    model.A1(1, 1) = 0.5;
    model.B1 = Eigen::VectorXd::Zero(2);
    model.B1(0) = 1.0;
    model.B1(1) = 0.8;
    model.A1(1, 0) = -0.5 * 0.8;  // a_1 = -lambda_1 b_1
    const KalmanResult result = kalman_check(model);
    CHECK_FALSE(result.rank_ok);
    CHECK(std::abs(result.det) < 1e-12);
}

TEST_CASE("n = 3 model with nonzero flux terms is controllable") {
    Lcg rng(23);
    const ReducedModel model = random_model(rng, 3);
    CHECK(kalman_check(model).rank_ok);
    // direct rank oracle
    CHECK(controllability_matrix(model.A1, model.B1).fullPivLu().rank() == 4);
}

TEST_CASE("vandermonde closed form") {
    SUBCASE("reference model: single node, product collapses to a1 + lambda1 b1") {
        const ReducedModel model = build_reduced(sec3_basis(), 1.0);
        CHECK(std::abs(vandermonde_det(model) - 0.28209) < 1e-4);
        CHECK(vandermonde_det(model) ==
              doctest::Approx(controllability_matrix(model.A1, model.B1).determinant()).epsilon(1e-12));
    }
    SUBCASE("n = 2 hand case agrees with the direct determinant") {
        ReducedModel model;
        model.n = 2;
        model.lambdas = {1.0, -1.0};
        model.A1 = Eigen::MatrixXd::Zero(3, 3);
        model.A1(1, 0) = 1.0;
        model.A1(1, 1) = 1.0;
        model.A1(2, 0) = 1.0;
        model.A1(2, 2) = -1.0;
        model.B1 = Eigen::VectorXd::Zero(3);
        model.B1(0) = 1.0;
        const double direct = controllability_matrix(model.A1, model.B1).determinant();
        CHECK(direct == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(vandermonde_det(model) == doctest::Approx(direct).epsilon(1e-12));
    }
    SUBCASE("duplicate eigenvalues are rejected") {
        ReducedModel model;
        model.n = 2;
        model.lambdas = {0.5, 0.5};
        model.A1 = Eigen::MatrixXd::Zero(3, 3);
        model.B1 = Eigen::VectorXd::Ones(3);
        CHECK_THROWS_AS(vandermonde_det(model), std::invalid_argument);
    }
}

TEST_CASE("closed form equals the brute-force determinant on random models") {
    Lcg rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const ReducedModel model = random_model(rng, rng.integer(1, 5));
        const double direct = controllability_matrix(model.A1, model.B1).determinant();
        const double closed = vandermonde_det(model);
        CHECK(std::abs(closed - direct) <= 1e-8 * std::max(1e-300, std::abs(direct)));
    }
}

TEST_CASE("controllability is independent of the delay") {
    Lcg rng(31);
    for (int rep = 0; rep < 8; ++rep) {
        const ReducedModel model = random_model(rng, rng.integer(1, 4));
        const Eigen::Index rank0 = controllability_matrix(model.A1, model.B1).fullPivLu().rank();
        for (double delay : {0.0, 0.5, 1.0, 5.0}) {
            const Eigen::VectorXd Bd = mat_exp(model.A1, -delay) * model.B1;
            CHECK(controllability_matrix(model.A1, Bd).fullPivLu().rank() == rank0);
        }
    }
}
