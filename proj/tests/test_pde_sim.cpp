#include <doctest.h>

#include <cmath>
#include <vector>

#include "blowctl/pde_sim.hpp"
#include "blowctl/quadrature.hpp"

using namespace blowctl;

namespace {

// Full-interior mask for the pure-reaction hook; built directly because the
// regular builder requires a proper subinterval.
ControlRegion full_mask(const Grid& g) {
    ControlRegion r;
    r.omega_lo = g.x_lo;
    r.omega_hi = g.x_hi;
    r.mask.assign(g.n, 1.0);
    return r;
}

// Reaction-only run of y' = |y|^{p-1} y from uniform data, using the
// diffusion-off hook with a full-interior control mask.
RunResult uniform_reaction_run(double y0_val, double p, double safety) {
    const Grid g = build_grid(0.0, 1.0, 11);
    const ControlRegion region = full_mask(g);
    PhaseContext ctx;
    ctx.grid = &g;
    ctx.region = &region;
    ctx.p = p;
    ctx.opts.disable_diffusion = true;
    ctx.opts.base_dt = 1e-4;
    ctx.opts.safety = safety;
    ctx.opts.floor_eps = 1e-8;
    ctx.opts.checkpoint_stride = 1 << 30;  // no checkpoints needed

    RunResult res;
    std::vector<double> y(g.n, y0_val);
    res.sup_series.push_back(SupSample{0.0, linf_norm(y), 0.5});
    const double t_exact = std::pow(y0_val, 1.0 - p) / (p - 1.0);
    run_phase(ctx, PhaseKind::nonlinear, 0.0, 2.0 * t_exact + 1.0, y, res);
    // amplitude floor ((p-1) floor)^(-1/(p-1)) caps the sup; keep the
    // detection threshold a decade below it
    const double cap = std::pow((p - 1.0) * ctx.opts.floor_eps, -1.0 / (p - 1.0));
    res.blowup = detect_blowup(res.sup_series, p, ctx.opts.floor_eps, 0.1 * cap);
    return res;
}

}  // namespace

TEST_CASE("step_imex: eigenmode decay oracle") {
    const Grid g = build_grid(0.0, 1.0, 199);
    std::vector<double> y(g.n), zero(g.n, 0.0), next(g.n);
    for (int i = 0; i < g.n; ++i) y[i] = std::sin(M_PI * g.nodes[i]);
    const double dt = 1e-3;
    step_imex(g, y, zero, dt, next);
    const double factor = 1.0 / (1.0 + dt * M_PI * M_PI);
    for (int i = 0; i < g.n; ++i) {
        CHECK(next[i] == doctest::Approx(factor * y[i]).epsilon(2e-4));
    }
}

TEST_CASE("step_imex: stationary balance when source cancels diffusion") {
    const Grid g = build_grid(0.0, 1.0, 101);
    std::vector<double> y(g.n), next(g.n);
    for (int i = 0; i < g.n; ++i) y[i] = g.nodes[i] * (1.0 - g.nodes[i]);
    std::vector<double> source(g.n);
    laplacian_apply(g, y, source);
    for (double& v : source) v = -v;
    step_imex(g, y, source, 2e-3, next);
    for (int i = 0; i < g.n; ++i) {
        CHECK(next[i] == doctest::Approx(y[i]).epsilon(1e-11));
    }
}

TEST_CASE("step_imex: M-matrix positivity from a masked source") {
    const Grid g = build_grid(0.0, 1.0, 101);
    const ControlRegion region = build_control_region(g, 0.3, 0.7);
    std::vector<double> zero(g.n, 0.0), next(g.n);
    step_imex(g, zero, region.mask, 1e-3, next);
    for (int i = 0; i < g.n; ++i) CHECK(next[i] >= 0.0);
    CHECK(linf_norm(next) > 0.0);
}

TEST_CASE("scheme stability: free flow is sup-contractive for any dt") {
    const Grid g = build_grid(0.0, 1.0, 101);
    std::vector<double> y(g.n), zero(g.n, 0.0), next(g.n);
    for (int i = 0; i < g.n; ++i) y[i] = std::sin(23.0 * g.nodes[i]) + 0.5;
    for (double dt : {1e-6, 1e-3, 1.0, 50.0}) {
        step_imex(g, y, zero, dt, next);
        CHECK(linf_norm(next) <= linf_norm(y) + 1e-14);
    }
}

TEST_CASE("adaptive_dt formula and cap") {
    const double base = 1e-3;
    std::vector<double> y_small(5, 0.5);
    CHECK(adaptive_dt(y_small, base, 2.0, 0.05) == base);

    std::vector<double> y_big(5, 1e3);
    CHECK(adaptive_dt(y_big, base, 2.0, 0.05) == doctest::Approx(5e-5).epsilon(1e-14));
}

TEST_CASE("adaptive_dt is nonincreasing along a blowing-up trajectory") {
    const Grid g = build_grid(0.0, 1.0, 11);
    const ControlRegion region = full_mask(g);
    PhaseContext ctx;
    ctx.grid = &g;
    ctx.region = &region;
    ctx.p = 2.0;
    ctx.opts.disable_diffusion = true;
    ctx.opts.base_dt = 1e-4;
    ctx.opts.safety = 0.05;
    ctx.opts.floor_eps = 1e-8;

    RunResult res;
    std::vector<double> y(g.n, 1.0);
    std::vector<double> dts;
    StepHook hook = [&dts](double, std::span<const double>, double dt) {
        dts.push_back(dt);
        return true;
    };
    res.sup_series.push_back(SupSample{0.0, 1.0, 0.5});
    run_phase(ctx, PhaseKind::nonlinear, 0.0, 3.0, y, res, hook);
    REQUIRE(dts.size() > 100);
    for (std::size_t i = 1; i < dts.size(); ++i) CHECK(dts[i] <= dts[i - 1] + 1e-15);
}

TEST_CASE("nonlinear phase preserves positivity") {
    const Grid g = build_grid(0.0, 1.0, 101);
    const ControlRegion region = build_control_region(g, 0.2, 0.8);
    PhaseContext ctx;
    ctx.grid = &g;
    ctx.region = &region;
    ctx.p = 2.0;
    ctx.opts.base_dt = 1e-5;
    ctx.opts.safety = 0.05;
    ctx.opts.floor_eps = 1e-6;

    RunResult res;
    std::vector<double> y(g.n);
    for (int i = 0; i < g.n; ++i) {
        y[i] = std::max(0.0, 1.0 - 40.0 * (g.nodes[i] - 0.5) * (g.nodes[i] - 0.5));
    }
    res.sup_series.push_back(SupSample{0.0, linf_norm(y), 0.5});
    run_phase(ctx, PhaseKind::nonlinear, 0.0, 5e-3, y, res);
    for (int i = 0; i < g.n; ++i) CHECK(y[i] >= 0.0);
}

TEST_CASE("detect_blowup: exact power-law series recovers T and kappa") {
    // p = 2, T = 1, kappa = 1: sup = (1 - t)^{-1}
    std::vector<SupSample> series;
    for (double t = 0.9; t <= 0.999; t += 1e-4) {
        series.push_back(SupSample{t, 1.0 / (1.0 - t), 0.5});
    }
    const auto est = detect_blowup(series, 2.0, 1e-6, 1e2);
    REQUIRE(est.detected);
    CHECK(est.t_star == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(est.kappa_hat == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(est.residual <= 1e-10);
}

TEST_CASE("detect_blowup: p = 3 with kappa scaling") {
    const double p = 3.0;
    const double kappa = std::pow(p - 1.0, -1.0 / (p - 1.0));
    std::vector<SupSample> series;
    for (double t = 0.9; t <= 0.99999; t += 5e-5) {
        series.push_back(SupSample{t, kappa * std::pow(1.0 - t, -0.5), 0.25});
    }
    const auto est = detect_blowup(series, p, 1e-6, 50.0);
    REQUIRE(est.detected);
    CHECK(est.t_star == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(est.kappa_hat == doctest::Approx(kappa).epsilon(1e-6));
}

TEST_CASE("detect_blowup: constant series reports no blowup") {
    std::vector<SupSample> series;
    for (double t = 0.0; t < 1.0; t += 1e-3) series.push_back(SupSample{t, 7.0, 0.5});
    const auto est = detect_blowup(series, 2.0, 1e-6, 1e5);
    CHECK_FALSE(est.detected);
}

TEST_CASE("reaction ODE hook: blowup time matches the closed form") {
    // y' = y^p from constant data: T = y0^{1-p}/(p-1).
    for (double p : {2.0, 3.0}) {
        for (double y0 : {0.5, 1.0, 2.0}) {
            const auto res = uniform_reaction_run(y0, p, 1e-4);
            REQUIRE(res.blowup.detected);
            const double t_exact = std::pow(y0, 1.0 - p) / (p - 1.0);
            CHECK(res.blowup.t_star == doctest::Approx(t_exact).epsilon(1e-3 / t_exact));
        }
    }
}

TEST_CASE("three-phase plan validation") {
    PhasePlan plan;
    plan.t_total = 0.1;
    plan.t1 = 5.5e-4;
    plan.eps_hat = 6.25e-3;
    plan.eps_hat1 = 6.9e-5;
    plan.p = 2.0;
    plan.floor_eps = 1e-6;
    CHECK_NOTHROW(plan.validate());
    CHECK(plan.steering_end() == doctest::Approx(0.1 - 5.5e-4 - 6.25e-3));

    PhasePlan bad = plan;
    bad.t1 = 0.06;  // violates T1 < T/2
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = plan;
    bad.eps_hat1 = plan.t1;  // violates eps_hat1 < T1/4
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("free flow trades L2 data for sup control at rate t^(-1/4)") {
    // One-dimensional smoothing: ||e^{t L} f||_inf <= (8 pi t)^{-1/4} ||f||_L2.
    // The difference of two steered states entering the smoothing window
    // obeys exactly this bound, so rough terminal errors become uniform ones.
    const Grid g = build_grid(0.0, 2.0, 401);
    std::vector<double> delta(g.n), zero(g.n, 0.0), next(g.n);
    for (int i = 0; i < g.n; ++i) {
        // rough data: oscillation plus a narrow spike
        delta[i] = std::sin(150.0 * g.nodes[i]) +
                   5.0 * std::exp(-4000.0 * (g.nodes[i] - 0.7) * (g.nodes[i] - 0.7));
    }
    const double l2_0 = l2_norm_h(delta, g.h);

    double t = 0.0;
    const double dt = 5e-5;
    for (double t_check : {1e-3, 4e-3, 1.6e-2}) {
        while (t < t_check - 1e-12) {
            const double step = std::min(dt, t_check - t);
            step_imex(g, delta, zero, step, next);
            delta.swap(next);
            t += step;
        }
        const double bound = std::pow(8.0 * M_PI * t_check, -0.25) * l2_0;
        CHECK(linf_norm(delta) <= bound * 1.05);
    }
}

TEST_CASE("zero phase from smooth data keeps the sup nonincreasing") {
    const Grid g = build_grid(0.0, 1.0, 101);
    const ControlRegion region = build_control_region(g, 0.2, 0.8);
    PhaseContext ctx;
    ctx.grid = &g;
    ctx.region = &region;
    ctx.p = 2.0;
    ctx.opts.base_dt = 1e-4;

    RunResult res;
    std::vector<double> y(g.n);
    for (int i = 0; i < g.n; ++i) y[i] = std::sin(M_PI * g.nodes[i]);
    res.sup_series.push_back(SupSample{0.0, linf_norm(y), 0.5});
    run_phase(ctx, PhaseKind::zero, 0.0, 0.05, y, res);
    for (std::size_t i = 1; i < res.sup_series.size(); ++i) {
        CHECK(res.sup_series[i].sup <= res.sup_series[i - 1].sup + 1e-14);
    }
}
