#pragma once

// Test-side realization of the delay operator
//   (T_D g)(t) = K1 ∫_{max(t-D,D)}^t e^{(t-D-s)A1} B1 g(s) ds
// on the control grid, written independently of the library path so the
// Neumann series can be cross-checked term by term (values, factorial bound,
// truncation behavior).

#include <Eigen/Core>

#include <cmath>
#include <vector>

#include "rdstab/gain.hpp"
#include "rdstab/reduction.hpp"

namespace rdstab::testing {

struct SeriesTerms {
    // terms[j][i]: value of (T_D^j K1 X1) at node i
    std::vector<std::vector<double>> terms;
    std::vector<double> sum;  // over all computed terms, zero before D
};

inline SeriesTerms series_terms_oracle(const std::vector<Eigen::VectorXd>& X1_path, const GainSet& gains,
                                       const ReducedModel& model, double dt, int num_terms) {
    const int M = static_cast<int>(X1_path.size()) - 1;
    const int K = static_cast<int>(std::llround(model.delay / dt));
    std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(K) + 1);
    cols[0] = model.B1;
    const Eigen::MatrixXd step = mat_exp(model.A1, -dt);
    for (int k = 1; k <= K; ++k) cols[static_cast<std::size_t>(k)] = step * cols[static_cast<std::size_t>(k) - 1];

    SeriesTerms out;
    std::vector<double> current(static_cast<std::size_t>(M) + 1, 0.0);
    for (int i = 0; i <= M; ++i) current[static_cast<std::size_t>(i)] = gains.K1.dot(X1_path[static_cast<std::size_t>(i)]);
    out.sum.assign(static_cast<std::size_t>(M) + 1, 0.0);

    for (int j = 0; j < num_terms; ++j) {
        out.terms.push_back(current);
        for (int i = K; i <= M; ++i) out.sum[static_cast<std::size_t>(i)] += current[static_cast<std::size_t>(i)];
        std::vector<double> next(static_cast<std::size_t>(M) + 1, 0.0);
        for (int i = K + 1; i <= M; ++i) {
            const int lo = std::max(i - K, K);
            double acc = 0.0;
            for (int l = lo; l <= i; ++l) {
                const double w = (l == lo || l == i) ? 0.5 * dt : dt;
                acc += w * gains.K1.dot(cols[static_cast<std::size_t>(K - (i - l))]) * current[static_cast<std::size_t>(l)];
            }
            next[static_cast<std::size_t>(i)] = acc;
        }
        current = std::move(next);
    }
    return out;
}

// Right-hand side of the factorial series bound for term j >= 1 at node i.
inline double series_term_bound(const std::vector<Eigen::VectorXd>& X1_path, const GainSet& gains,
                                const ReducedModel& model, double dt, int j, int i) {
    const int K = static_cast<int>(std::llround(model.delay / dt));
    const double t = i * dt;
    const double D = model.delay;
    if (i < K || j < 1) return 0.0;
    double x_max = 0.0;
    for (int s = K; s <= i; ++s) x_max = std::max(x_max, X1_path[static_cast<std::size_t>(s)].norm());
    const double norm_B = model.B1.norm();
    const double norm_K = gains.K1.norm();
    const double norm_A = model.A1.jacobiSvd().singularValues()(0);
    double log_bound = j * std::log(norm_B) + (j + 1) * std::log(norm_K);
    if (t - D > 0.0) log_bound += j * std::log(t - D);
    else if (j > 0) return 0.0;
    for (int q = 2; q < j; ++q) log_bound -= std::log(static_cast<double>(q));  // (j-1)!
    log_bound += (t - j * D) * norm_A;
    return std::exp(log_bound) * x_max;
}

}  // namespace rdstab::testing
