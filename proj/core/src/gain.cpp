#include "rdstab/gain.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdstab {

namespace {

void require_square_finite(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("mat_exp: matrix must be square");
    if (!A.allFinite()) throw std::invalid_argument("mat_exp: matrix entries must be finite");
}

// Conjugation-closure check: every pole with nonzero imaginary part must pair
// with its conjugate.
void require_conjugate_closed(const std::vector<std::complex<double>>& poles) {
    std::vector<std::complex<double>> pending;
    const double tol = 1e-12;
    for (const auto& p : poles) {
        if (std::abs(p.imag()) <= tol) continue;
        auto it = std::find_if(pending.begin(), pending.end(), [&](const std::complex<double>& q) {
            return std::abs(q - std::conj(p)) <= 1e-9 * std::max(1.0, std::abs(p));
        });
        if (it != pending.end())
            pending.erase(it);
        else
            pending.push_back(p);
    }
    if (!pending.empty())
        throw std::invalid_argument("place_poles: poles must be closed under conjugation");
}

}  // namespace

Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& A, double t) {
    require_square_finite(A);
    if (!std::isfinite(t)) throw std::invalid_argument("mat_exp: t must be finite");
    const Eigen::Index m = A.rows();
    Eigen::MatrixXd M = t * A;

    const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(norm1) || norm1 > 350.0)
        throw std::overflow_error("mat_exp: ||tA|| too large");
    if (norm1 == 0.0) return Eigen::MatrixXd::Identity(m, m);

    const double theta13 = 5.371920351148152;
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
        M *= std::ldexp(1.0, -squarings);
    }

    static const double b[14] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd M2 = M * M;
    const Eigen::MatrixXd M4 = M2 * M2;
    const Eigen::MatrixXd M6 = M4 * M2;

    const Eigen::MatrixXd W1 = b[13] * M6 + b[11] * M4 + b[9] * M2;
    const Eigen::MatrixXd W2 = b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * I;
    const Eigen::MatrixXd U = M * (M6 * W1 + W2);
    const Eigen::MatrixXd Z1 = b[12] * M6 + b[10] * M4 + b[8] * M2;
    const Eigen::MatrixXd Z2 = b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * I;
    const Eigen::MatrixXd V = M6 * Z1 + Z2;

    Eigen::MatrixXd R = (V - U).partialPivLu().solve(V + U);
    for (int s = 0; s < squarings; ++s) R = R * R;
    return R;
}

Eigen::RowVectorXd place_poles(const ReducedModel& model, const std::vector<std::complex<double>>& poles,
                               double delay) {
    const Eigen::Index m = model.A1.rows();
    if (static_cast<Eigen::Index>(poles.size()) != m)
        throw std::invalid_argument("place_poles: need exactly n+1 poles");
    for (const auto& p : poles)
        if (!(p.real() < 0.0)) throw std::invalid_argument("place_poles: poles must have negative real parts");
    require_conjugate_closed(poles);

    const Eigen::VectorXd Bd = mat_exp(model.A1, -delay) * model.B1;
    const Eigen::MatrixXd C = controllability_matrix(model.A1, Bd);
    double scale = 1.0;
    for (Eigen::Index k = 0; k < m; ++k) scale *= std::max(1.0, C.col(k).norm());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
    if (std::abs(C.determinant()) <= 1e-12 * scale)
        throw std::invalid_argument("place_poles: pair (A1, e^{-D A1} B1) is not controllable");

    const std::vector<double> q = real_poly_from_roots(poles);

    // Horner evaluation of the desired characteristic polynomial at A1.
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(m, m) * q[0];
    for (std::size_t k = 1; k < q.size(); ++k)
        Q = Q * model.A1 + q[k] * Eigen::MatrixXd::Identity(m, m);

    // Ackermann: k_row = e_m^T C^{-1} q(A1); the closed loop A1 + Bd K1 with
    // K1 = -k_row has characteristic polynomial q.
    Eigen::VectorXd e_last = Eigen::VectorXd::Zero(m);
    e_last(m - 1) = 1.0;
    const Eigen::VectorXd y = C.transpose().fullPivLu().solve(e_last);
    return -(y.transpose() * Q);
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Acl) {
    const Eigen::Index m = Acl.rows();
    if (Acl.cols() != m) throw std::invalid_argument("solve_lyapunov: matrix must be square");

    {
        const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(Acl, false).eigenvalues();
        for (Eigen::Index i = 0; i < m; ++i)
            if (!(eigs(i).real() < 0.0))
                throw std::invalid_argument("solve_lyapunov: matrix is not Hurwitz");
    }

    // Vectorized operator: vec(P Acl + Acl^T P) = (Acl^T (x) I + I (x) Acl^T) vec(P),
    // column-major vec, entry ((c,r),(c2,r2)) = Acl(c2,c) δ_{r,r2} + δ_{c,c2} Acl(r2,r).
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(m * m, m * m);
    for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index r = 0; r < m; ++r) {
            const Eigen::Index row = c * m + r;
            for (Eigen::Index c2 = 0; c2 < m; ++c2) op(row, c2 * m + r) += Acl(c2, c);
            for (Eigen::Index r2 = 0; r2 < m; ++r2) op(row, c * m + r2) += Acl(r2, r);
        }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(op);

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m * m);
    for (Eigen::Index i = 0; i < m; ++i) rhs(i * m + i) = -1.0;

    Eigen::VectorXd p = lu.solve(rhs);
    // One step of iterative refinement keeps the residual near roundoff.
    p += lu.solve(rhs - op * p);

    Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(p.data(), m, m);
    P = 0.5 * (P + P.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw std::runtime_error("solve_lyapunov: P is not positive definite (matrix not Hurwitz?)");
    return P;
}

double compute_M(const ReducedModel& model, const Eigen::RowVectorXd& K1, const Eigen::MatrixXd& P,
                 double a_norm, double b_norm, double safety_factor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    const double p_min = es.eigenvalues().minCoeff();
    if (!(p_min > 0.0)) throw std::invalid_argument("compute_M: lambda_min(P) must be positive");

    const double k2 = K1.squaredNorm();
    const double b2 = model.B1.squaredNorm();
    const double norm_A1 = model.A1.jacobiSvd().singularValues()(0);

    double second = 2.0 * a_norm * a_norm;
    if (!model.lambdas.empty()) {
        const double max_lambda = *std::max_element(model.lambdas.begin(), model.lambdas.end());
        second = std::max(second, max_lambda / p_min);
    }
    const double amplification =
        std::max(1.0, model.delay * std::exp(2.0 * model.delay * norm_A1) * b2 * k2);

    const double bound = b_norm * b_norm * k2 + second * amplification;
    return std::max(safety_factor * bound, 1e-6);
}

std::vector<double> real_poly_from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= r * c[i];
        }
        c = std::move(next);
    }
    std::vector<double> out(c.size());
    double scale = 0.0;
    for (const auto& v : c) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::abs(c[i].imag()) > 1e-9 * std::max(1.0, scale))
            throw std::invalid_argument("real_poly_from_roots: roots are not closed under conjugation");
        out[i] = c[i].real();
    }
    return out;
}

std::vector<double> charpoly_coefficients(const Eigen::MatrixXd& M) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    std::vector<std::complex<double>> eigs(static_cast<std::size_t>(M.rows()));
    for (Eigen::Index i = 0; i < M.rows(); ++i) eigs[static_cast<std::size_t>(i)] = es.eigenvalues()(i);

    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : eigs) {
        std::vector<std::complex<double>> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= r * c[i];
        }
        c = std::move(next);
    }
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

GainSet design_gains(const ReducedModel& model, std::vector<std::complex<double>> poles,
                     double a_norm, double b_norm) {
    if (poles.empty())  // default choice: -1 with multiplicity n+1
        poles.assign(static_cast<std::size_t>(model.n) + 1, std::complex<double>(-1.0, 0.0));

    GainSet gains;
    gains.delay = model.delay;
    gains.poles = poles;
    gains.K1 = place_poles(model, poles, model.delay);
    gains.Acl = model.A1 + mat_exp(model.A1, -model.delay) * model.B1 * gains.K1;
    gains.P = solve_lyapunov(gains.Acl);

    const Eigen::Index m = gains.Acl.rows();
    gains.lyapunov_residual =
        (gains.P * gains.Acl + gains.Acl.transpose() * gains.P + Eigen::MatrixXd::Identity(m, m)).norm();
    gains.p_min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gains.P).eigenvalues().minCoeff();
    gains.weight_M = compute_M(model, gains.K1, gains.P, a_norm, b_norm, gains.safety_factor);

    // Spectrum check through characteristic coefficients; symmetric functions
    // of the computed eigenvalues stay accurate even for the repeated-pole
    // (defective closed loop) case.
    const std::vector<double> want = real_poly_from_roots(poles);
    const std::vector<double> got = charpoly_coefficients(gains.Acl);
    for (std::size_t i = 0; i < want.size(); ++i)
        if (std::abs(want[i] - got[i]) > 1e-8 * std::max(1.0, std::abs(want[i])))
            throw std::runtime_error("design_gains: closed-loop spectrum does not match the requested poles");
    if (gains.lyapunov_residual > 1e-8)
        throw std::runtime_error("design_gains: Lyapunov residual exceeds tolerance");
    return gains;
}

}  // namespace rdstab
