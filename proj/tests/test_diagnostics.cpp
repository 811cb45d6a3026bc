#include <doctest.h>

#include <cmath>
#include <vector>

#include "blowctl/diagnostics.hpp"

using namespace blowctl;

namespace {

// Exact self-similar ansatz y = (T-t)^{-1/(p-1)} f((x-a)/sqrt((T-t)|log(T-t)|)).
std::vector<double> ansatz_field(const Grid& grid, double t, double t_star, double a,
                                 const ProfileParams& prm) {
    const double rem = t_star - t;
    const double width = std::sqrt(rem * std::fabs(std::log(rem)));
    const double amp = std::pow(rem, -1.0 / (prm.p - 1.0));
    std::vector<double> y(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        y[i] = amp * profile_f((grid.nodes[i] - a) / width, prm);
    }
    return y;
}

}  // namespace

TEST_CASE("profile_error vanishes on the exact ansatz") {
    const Grid g = build_grid(0.0, 2.0, 401);
    const auto prm = ProfileParams::for_exponent(2.0);
    const double t_star = 0.1, a = 1.0;
    for (double rem : {1e-2, 1e-3}) {
        const auto y = ansatz_field(g, t_star - rem, t_star, a, prm);
        const auto s = profile_error(g, y, t_star - rem, t_star, a, 1.0, prm);
        CHECK(s.resolved);
        CHECK(s.sup_err <= 1e-12);
    }
}

TEST_CASE("profile_error picks up a constructed offset") {
    const Grid g = build_grid(0.0, 2.0, 401);
    const auto prm = ProfileParams::for_exponent(2.0);
    const double t_star = 0.1, a = 1.0, rem = 1e-3;
    auto y = ansatz_field(g, t_star - rem, t_star, a, prm);
    const double amp = std::pow(rem, -1.0);
    for (double& v : y) v += amp * 1e-3;
    const auto s = profile_error(g, y, t_star - rem, t_star, a, 1.0, prm);
    CHECK(s.sup_err == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(s.scaled_err == doctest::Approx(1e-3 * std::sqrt(std::fabs(std::log(rem)))));
}

TEST_CASE("profile_error marks narrow windows unresolved") {
    const Grid g = build_grid(0.0, 2.0, 101);  // h = 0.0198
    const auto prm = ProfileParams::for_exponent(2.0);
    const double t_star = 0.1, a = 1.0, rem = 1e-5;
    const auto y = ansatz_field(g, t_star - rem, t_star, a, prm);
    const auto s = profile_error(g, y, t_star - rem, t_star, a, 1.0, prm);
    CHECK_FALSE(s.resolved);
    CHECK(s.window_nodes < 8);
}

TEST_CASE("flatness: edge-crossing time satisfies its defining equation") {
    const double t_blowup = 5.5e-4;
    const double k0 = 1.0;
    for (double offset : {0.02, 0.05}) {
        const double t0 = flatness_time_t0(offset, t_blowup, k0, 1e-9);
        const double u = t_blowup - t0;
        CHECK(k0 * std::sqrt(u * std::fabs(std::log(u))) ==
              doctest::Approx(offset).epsilon(1e-10));
    }
    CHECK_THROWS_AS(flatness_time_t0(1.0, t_blowup, k0, 1e-9), RangeError);
}

TEST_CASE("flatness: closed-form values of U and y*") {
    const auto p2 = ProfileParams::for_exponent(2.0);
    CHECK(flatness_u(1.0, 2.0, p2) / flatness_u(1.0, 2.0, p2) == 1.0);
    // (p-1)(1-0) + b K0^2 with p = 2, K0 = 2: (1 + 0.5)^{-1}
    CHECK(flatness_u(0.0, 2.0, p2) == doctest::Approx(1.0 / 1.5).epsilon(1e-14));
    const double d = 0.05;
    const double expected = 1.0 / (d * d / (16.0 * std::fabs(std::log(d))));
    CHECK(flatness_y_star(d, p2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("flatness_check: bounded deviation, decreasing toward the center") {
    // Synthetic trajectory from the self-similar ansatz. The ratio
    // y(x0, t)/y*(x0) tracks U(tau)/U(1) up to slowly varying log factors;
    // the deviation stays bounded and shrinks across a dyadic family of
    // offsets approaching the center.
    const Grid g = build_grid(0.0, 2.0, 801);
    const auto prm = ProfileParams::for_exponent(2.0);
    const double t_star = 5.5e-4, a = 1.0, k0 = 1.0;
    std::vector<Checkpoint> checkpoints;
    for (double rem = t_star; rem > 2e-6; rem *= 0.9) {
        checkpoints.push_back(
            Checkpoint{t_star - rem, ansatz_field(g, t_star - rem, t_star, a, prm)});
    }
    double prev = 1e300;
    for (double offset : {0.04, 0.02, 0.01}) {
        const auto res = flatness_check(checkpoints, g, a + offset, a, t_star, k0, prm, 1e-6);
        CHECK(res.samples > 3);
        CHECK(res.max_deviation < 1.0);
        CHECK(res.max_deviation < prev + 1e-12);
        prev = res.max_deviation;
    }
}

TEST_CASE("regular region: zero trajectory passes with full slack") {
    const Grid g = build_grid(0.0, 2.0, 101);
    std::vector<Checkpoint> traj{{0.0, std::vector<double>(g.n, 0.0)},
                                 {0.5, std::vector<double>(g.n, 0.0)}};
    const auto rows = regular_region_bound(traj, g, 1.0, 0.22, 0.5, 1.0);
    for (const auto& r : rows) {
        CHECK(r.pass);
        CHECK(r.slack == doctest::Approx(1.0));
    }
}

TEST_CASE("regular region: injected far bump fails at its checkpoint") {
    const Grid g = build_grid(0.0, 2.0, 101);
    std::vector<double> quiet(g.n, 0.0), bumped(g.n, 0.0);
    // bump at |x - a| = 0.9 (x_hi - a), outside any mu eps0 of interest
    const double x_bump = 1.0 + 0.9 * (g.x_hi - 1.0);
    for (int i = 0; i < g.n; ++i) {
        if (std::fabs(g.nodes[i] - x_bump) < 0.05) bumped[i] = 2.0;
    }
    std::vector<Checkpoint> traj{{0.0, quiet}, {0.1, bumped}, {0.2, quiet}};
    const auto rows = regular_region_bound(traj, g, 1.0, 0.22, 0.5, 1.0);
    CHECK(rows[0].pass);
    CHECK_FALSE(rows[1].pass);
    CHECK(rows[2].pass);
}

TEST_CASE("regular region is monotone in mu") {
    const Grid g = build_grid(0.0, 2.0, 201);
    std::vector<double> y(g.n);
    for (int i = 0; i < g.n; ++i) {
        y[i] = 1.3 * std::exp(-80.0 * (g.nodes[i] - 1.0) * (g.nodes[i] - 1.0));
    }
    std::vector<Checkpoint> traj{{0.0, y}};
    double prev_max = 1e300;
    for (double mu : {0.2, 0.4, 0.6, 0.8}) {
        const auto rows = regular_region_bound(traj, g, 1.0, 0.22, mu, 1.0);
        CHECK(rows[0].max_abs <= prev_max + 1e-15);
        prev_max = rows[0].max_abs;
    }
}

TEST_CASE("smallness propagates outward from compactly supported data") {
    // Data vanishing for |x - a| >= mu1 eps0 stays below a small level
    // outside mu2 eps0 over a short window, under the full localized
    // nonlinear flow.
    const Grid g = build_grid(0.0, 2.0, 401);
    const ControlRegion region = build_control_region(g, 0.1, 1.9);
    const double a = 1.0, epsilon0 = 0.22;
    const double mu1 = 0.25, mu2 = 0.5;

    std::vector<double> y(g.n, 0.0);
    for (int i = 0; i < g.n; ++i) {
        const double u = (g.nodes[i] - a) / (mu1 * epsilon0);
        if (std::fabs(u) < 1.0) y[i] = 5.0 * std::exp(-1.0 / (1.0 - u * u));
    }

    PhaseContext ctx;
    ctx.grid = &g;
    ctx.region = &region;
    ctx.p = 2.0;
    ctx.opts.base_dt = 1e-6;
    ctx.opts.safety = 0.05;
    ctx.opts.floor_eps = 1e-9;
    ctx.opts.checkpoint_stride = 1;

    RunResult run;
    run.trajectory.push_back(Checkpoint{0.0, y});
    run.sup_series.push_back(SupSample{0.0, 5.0, a});
    run_phase(ctx, PhaseKind::nonlinear, 0.0, 2e-5, y, run);
    run.trajectory.push_back(Checkpoint{2e-5, y});

    const auto rows = regular_region_bound(run.trajectory, g, a, epsilon0, mu2, 0.01);
    for (const auto& r : rows) {
        CHECK(r.pass);
    }
}

TEST_CASE("fit_quality: exact model, affine reparameterization, rejection") {
    const double p = 2.0;
    std::vector<SupSample> series;
    for (double t = 0.5; t <= 0.999; t += 1e-3) {
        series.push_back(SupSample{t, 1.0 / (1.0 - t), 0.0});
    }
    const auto q = fit_quality(series, p);
    CHECK(q.kappa_hat == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(q.t_star == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(q.residual <= 1e-10);

    // shifting every t by c shifts t_star by exactly c
    const double c = 17.25;
    std::vector<SupSample> shifted = series;
    for (auto& s : shifted) s.t += c;
    const auto q2 = fit_quality(shifted, p);
    CHECK(q2.t_star - q.t_star == doctest::Approx(c).epsilon(1e-12));

    // non-monotone window is rejected
    std::vector<SupSample> bad = series;
    bad[bad.size() - 5].sup *= 3.0;
    CHECK_THROWS_AS(fit_quality(bad, p), SolverError);

    // too-short series rejected
    std::vector<SupSample> tiny(series.begin(), series.begin() + 5);
    CHECK_THROWS_AS(fit_quality(tiny, p), SolverError);
}

TEST_CASE("fit_quality for p = 3 recovers kappa") {
    const double p = 3.0;
    const double kappa = std::pow(2.0, -0.5);
    std::vector<SupSample> series;
    for (double t = 0.0; t <= 0.9999; t += 1e-3) {
        series.push_back(SupSample{t, kappa * std::pow(1.0 - t, -0.5), 0.0});
    }
    const auto q = fit_quality(series, p);
    CHECK(q.kappa_hat == doctest::Approx(kappa).epsilon(1e-9));
    CHECK(q.t_star == doctest::Approx(1.0).epsilon(1e-9));
}
