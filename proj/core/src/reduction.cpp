#include "rdstab/reduction.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace rdstab {

ReducedModel build_reduced(const SpectralBasis& basis, double delay) {
    if (delay < 0.0) throw std::invalid_argument("build_reduced: delay must be nonnegative");
    const UnstableSplit split = count_unstable(basis);
    const int n = split.n;
    if (n + 1 > static_cast<int>(basis.modes.size()))
        throw std::invalid_argument("build_reduced: n + 1 exceeds available modes");

    ReducedModel model;
    model.n = n;
    model.delay = delay;
    model.margin = split.margin;
    model.A1 = Eigen::MatrixXd::Zero(n + 1, n + 1);
    model.B1 = Eigen::VectorXd::Zero(n + 1);
    model.B1(0) = 1.0;
    model.lambdas.reserve(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
        const EigenMode& mode = basis.modes[static_cast<std::size_t>(j) - 1];
        model.A1(j, 0) = mode.a_coef;
        model.A1(j, j) = mode.lambda;
        model.B1(j) = mode.b_coef;
        model.lambdas.push_back(mode.lambda);
    }
    return model;
}

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& B) {
    const auto m = A.rows();
    if (A.cols() != m || B.size() != m) throw std::invalid_argument("controllability_matrix: dimension mismatch");
    Eigen::MatrixXd C(m, m);
    Eigen::VectorXd col = B;
    for (Eigen::Index k = 0; k < m; ++k) {
        C.col(k) = col;
        col = A * col;
    }
    return C;
}

KalmanResult kalman_check(const ReducedModel& model) {
    const Eigen::MatrixXd C = controllability_matrix(model.A1, model.B1);
    const double det = C.determinant();
    double scale = 1.0;
    for (Eigen::Index k = 0; k < C.cols(); ++k) scale *= std::max(1.0, C.col(k).norm());
    return KalmanResult{std::abs(det) > 1e-10 * scale, det};
}

double vandermonde_det(const ReducedModel& model) {
    const int n = model.n;
    const double tol = 1e-9 * std::max(1.0, model.lambdas.empty() ? 0.0 : std::abs(model.lambdas.front()));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(model.lambdas[static_cast<std::size_t>(i)] - model.lambdas[static_cast<std::size_t>(j)]) <= tol)
                throw std::invalid_argument("vandermonde_det: duplicate eigenvalues");

    double value = 1.0;
    for (int j = 1; j <= n; ++j)
        value *= model.A1(j, 0) + model.A1(j, j) * model.B1(j);  // a_j + lambda_j b_j
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            value *= model.lambdas[static_cast<std::size_t>(j)] - model.lambdas[static_cast<std::size_t>(i)];
    return value;
}

}  // namespace rdstab
