#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "blowctl/experiments.hpp"
#include "blowctl/quadrature.hpp"

using namespace blowctl;

namespace {

Grid make_default_grid(int n) { return build_grid(0.0, 2.0, n); }

void bm_laplacian_apply(benchmark::State& state) {
    const Grid g = make_default_grid(static_cast<int>(state.range(0)));
    std::vector<double> y(g.n), out(g.n);
    for (int i = 0; i < g.n; ++i) y[i] = std::sin(3.0 * g.nodes[i]);
    for (auto _ : state) {
        laplacian_apply(g, y, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(bm_laplacian_apply)->Arg(201)->Arg(401)->Arg(801);

void bm_step_imex(benchmark::State& state) {
    const Grid g = make_default_grid(static_cast<int>(state.range(0)));
    std::vector<double> y(g.n), src(g.n), out(g.n);
    for (int i = 0; i < g.n; ++i) {
        y[i] = std::sin(3.0 * g.nodes[i]);
        src[i] = y[i] * y[i];
    }
    for (auto _ : state) {
        step_imex(g, y, src, 1e-5, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(bm_step_imex)->Arg(201)->Arg(401)->Arg(801);

void bm_project_modes(benchmark::State& state) {
    const double s = 10.0;
    const ZGrid zg = ZGrid::for_coverage(14.0, 1.0);
    std::vector<double> q(zg.nodes.size());
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
        q[i] = std::exp(-0.1 * zg.nodes[i] * zg.nodes[i]);
    }
    for (auto _ : state) {
        auto dec = project_modes(q, zg, s, 1.0);
        benchmark::DoNotOptimize(dec.q0);
    }
}
BENCHMARK(bm_project_modes);

void bm_feedback_gain_apply(benchmark::State& state) {
    ExperimentConfig cfg = default_config();
    cfg.n = static_cast<int>(state.range(0));
    cfg.finalize();
    const Problem prob = make_problem(cfg);
    const RiccatiSolution sol = solve_lyapunov_q(prob.grid, prob.region,
                                                 prob.steering_horizon(), cfg.n_knots);
    std::vector<double> e(prob.grid.n), out(prob.grid.n);
    for (int i = 0; i < prob.grid.n; ++i) e[i] = std::sin(2.0 * prob.grid.nodes[i]);
    const double t = 0.5 * prob.steering_horizon();
    for (auto _ : state) {
        apply_feedback_gain(sol, prob.region, e, t, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(bm_feedback_gain_apply)->Arg(201)->Arg(401);

void bm_candidate_initial_data(benchmark::State& state) {
    ExperimentConfig cfg = default_config();
    const Problem prob = make_problem(cfg);
    const InitialDataParams prm = prob.data_params();
    for (auto _ : state) {
        auto y0 = candidate_initial_data(prm, prob.grid);
        benchmark::DoNotOptimize(y0.data());
    }
}
BENCHMARK(bm_candidate_initial_data);

void bm_aux_exit_time(benchmark::State& state) {
    ExperimentConfig cfg = default_config();
    const Problem prob = make_problem(cfg);
    InitialDataParams prm = prob.data_params();
    prm.d0 = 0.25;  // survives a while, exits before the floor
    const AuxRunConfig aux = prob.aux_config();
    for (auto _ : state) {
        auto r = exit_time(prm, prob.grid, prob.region, aux);
        benchmark::DoNotOptimize(r.s_exit);
    }
}
BENCHMARK(bm_aux_exit_time)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
