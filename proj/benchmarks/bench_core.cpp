// Microbenchmarks for the hot paths: the tridiagonal eigensolve, the matrix
// exponential, the per-step feedback evaluation and the kernel marching.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "rdstab/artstein.hpp"
#include "rdstab/gain.hpp"
#include "rdstab/simulator.hpp"
#include "rdstab/spectral.hpp"

namespace {

using namespace rdstab;

OperatorSpec reference_spec() {
    OperatorSpec spec;
    spec.length = 2.0 * std::numbers::pi;
    spec.c_samples.assign(33, 0.5);
    return spec;
}

struct Fixture {
    SpectralBasis basis;
    ReducedModel model;
    GainSet gains;

    Fixture() {
        basis = solve_eigen(reference_spec(), 6, 600);
        model = build_reduced(basis, 1.0);
        const CouplingNorms norms = coupling_norms(basis.spec, basis.grid);
        gains = design_gains(model, {{-0.5, 0.0}, {-1.0, 0.0}}, norms.a_norm, norms.b_norm);
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_solve_eigen(benchmark::State& state) {
    const OperatorSpec spec = reference_spec();
    const int grid = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(solve_eigen(spec, 6, grid));
    state.SetComplexityN(grid);
}
BENCHMARK(BM_solve_eigen)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_mat_exp(benchmark::State& state) {
    const auto n = state.range(0);
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = std::sin(0.7 * static_cast<double>(i * n + j));
    for (auto _ : state) benchmark::DoNotOptimize(mat_exp(A, 1.0));
}
BENCHMARK(BM_mat_exp)->Arg(2)->Arg(8)->Arg(32);

void BM_feedback_eval(benchmark::State& state) {
    const Fixture& f = fixture();
    const double dt = 0.01;
    DelayPropagators props(f.model, dt);
    ControlHistory history{dt, 0.0, {}};
    for (int i = 0; i <= 400; ++i) history.append(std::sin(0.05 * i));
    const Eigen::VectorXd X1 = Eigen::Vector2d(0.3, -1.2);
    for (auto _ : state) benchmark::DoNotOptimize(feedback_alpha(X1, history, f.gains, props, 4.0));
}
BENCHMARK(BM_feedback_eval);

void BM_closed_loop_run(benchmark::State& state) {
    const Fixture& f = fixture();
    SimConfig config;
    config.modes = 6;
    config.dt = 0.01;
    config.t_final = 5.0;
    config.record_every = 100;
    config.y0.resize(static_cast<std::size_t>(f.basis.grid.points()));
    for (int i = 0; i < f.basis.grid.points(); ++i) {
        const double x = f.basis.grid.x(i);
        config.y0[static_cast<std::size_t>(i)] = x * (f.basis.grid.length - x);
    }
    for (auto _ : state) benchmark::DoNotOptimize(run(config, f.gains, f.model, f.basis));
    state.SetItemsProcessed(state.iterations() * 500);  // steps per run
}
BENCHMARK(BM_closed_loop_run)->Unit(benchmark::kMillisecond);

void BM_kernel_march(benchmark::State& state) {
    const Fixture& f = fixture();
    const double dt = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernel_table(f.gains, f.model, dt, 4.0));
}
BENCHMARK(BM_kernel_march)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_invert_transform(benchmark::State& state) {
    const Fixture& f = fixture();
    const double dt = 0.01;
    const KernelTable table = kernel_table(f.gains, f.model, dt, 9.0);
    std::vector<Eigen::VectorXd> Z;
    for (int i = 0; i <= 1000; ++i) Z.push_back(Eigen::Vector2d(std::sin(0.02 * i), std::cos(0.03 * i)));
    for (auto _ : state) benchmark::DoNotOptimize(invert_transform_path(Z, table));
}
BENCHMARK(BM_invert_transform)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
