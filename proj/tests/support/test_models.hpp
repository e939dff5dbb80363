#pragma once

// Deterministic helpers for the test suite. No std::random anywhere: a fixed
// linear congruential sequence keeps every run byte-identical.

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <vector>

#include "rdstab/reduction.hpp"

namespace rdstab::testing {

struct Lcg {
    std::uint64_t state;
    explicit Lcg(std::uint64_t seed) : state(seed) {}

    double uniform() {  // in [0, 1)
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }
};

// Random reduced model with distinct eigenvalues and a solid controllability
// margin: |a_j + lambda_j b_j| >= 0.3 and pairwise lambda gaps >= 0.3.
inline ReducedModel random_model(Lcg& rng, int n, double delay = 0.0) {
    ReducedModel model;
    model.n = n;
    model.delay = delay;
    model.A1 = Eigen::MatrixXd::Zero(n + 1, n + 1);
    model.B1 = Eigen::VectorXd::Zero(n + 1);
    model.B1(0) = 1.0;
    double lambda = rng.uniform(0.2, 0.8);
    for (int j = 1; j <= n; ++j) {
        const double b = rng.uniform(-1.2, 1.2);
        double a = rng.uniform(-1.2, 1.2);
        if (std::abs(a + lambda * b) < 0.3) a += (a + lambda * b >= 0.0 ? 0.6 : -0.6);
        model.A1(j, 0) = a;
        model.A1(j, j) = lambda;
        model.B1(j) = b;
        model.lambdas.push_back(lambda);
        lambda -= rng.uniform(0.3, 0.8);
    }
    model.margin = 0.5;
    return model;
}

inline std::vector<std::complex<double>> distinct_stable_poles(Lcg& rng, int count) {
    std::vector<std::complex<double>> poles;
    double re = -rng.uniform(0.4, 0.7);
    for (int i = 0; i < count; ++i) {
        if (count - i >= 2 && rng.uniform() < 0.3) {
            const double im = rng.uniform(0.2, 0.8);
            poles.emplace_back(re, im);
            poles.emplace_back(re, -im);
            ++i;
        } else {
            poles.emplace_back(re, 0.0);
        }
        re -= rng.uniform(0.3, 0.6);
    }
    return poles;
}

}  // namespace rdstab::testing
