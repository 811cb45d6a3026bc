#include "blowctl/pde_sim.hpp"

#include <algorithm>
#include <cmath>

#include "blowctl/quadrature.hpp"

namespace blowctl {

void PhasePlan::validate() const {
    if (!(t_total > 0.0)) throw ConfigError("PhasePlan: need T > 0");
    if (!(t1 > 0.0 && t1 < 0.5 * t_total)) {
        throw ConfigError("PhasePlan: need T1 in (0, T/2)");
    }
    if (!(eps_hat1 > 0.0 && eps_hat1 < 0.25 * t1)) {
        throw ConfigError("PhasePlan: need eps_hat1 in (0, T1/4)");
    }
    if (!(0.0 < steering_end() && steering_end() < smoothing_end() &&
          smoothing_end() < t_total)) {
        throw ConfigError("PhasePlan: phase boundaries out of order");
    }
    if (!(p > 1.0)) throw ConfigError("PhasePlan: need p > 1");
    if (!(floor_eps > 0.0)) throw ConfigError("PhasePlan: need floor_eps > 0");
}

const char* phase_name(PhaseKind k) {
    switch (k) {
        case PhaseKind::riccati: return "riccati";
        case PhaseKind::zero: return "zero";
        case PhaseKind::nonlinear: return "nonlinear";
    }
    return "?";
}

void step_imex(const Grid& grid, std::span<const double> y, std::span<const double> source,
               double dt, std::span<double> y_next) {
    const auto n = static_cast<std::size_t>(grid.n);
    if (y.size() != n || source.size() != n || y_next.size() != n) {
        throw DimensionError("step_imex: field length does not match grid");
    }
    if (!(dt > 0.0)) throw ConfigError("step_imex: need dt > 0");
    static thread_local std::vector<double> rhs;
    rhs.resize(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = y[i] + dt * source[i];
    solve_implicit_diffusion(grid, dt, rhs, y_next);
}

double adaptive_dt(std::span<const double> y, double base_dt, double p, double safety) {
    if (!(base_dt > 0.0)) throw ConfigError("adaptive_dt: need base_dt > 0");
    const double sup = linf_norm(y);
    if (sup <= 1.0) return base_dt;
    return std::min(base_dt, safety * std::pow(sup, 1.0 - p));
}

namespace {

double argmax_parabolic(const Grid& grid, std::span<const double> y) {
    int j = 0;
    double best = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        const double v = std::fabs(y[i]);
        if (v > best) {
            best = v;
            j = i;
        }
    }
    if (j == 0 || j == grid.n - 1) return grid.nodes[j];
    const double ym = std::fabs(y[j - 1]);
    const double y0 = std::fabs(y[j]);
    const double yp = std::fabs(y[j + 1]);
    const double denom = ym - 2.0 * y0 + yp;
    if (denom >= 0.0) return grid.nodes[j];  // not a strict local max
    const double delta = 0.5 * (ym - yp) / denom;
    return grid.nodes[j] + std::clamp(delta, -0.5, 0.5) * grid.h;
}

}  // namespace

void run_phase(const PhaseContext& ctx, PhaseKind kind, double t_begin, double t_end,
               std::vector<double>& y, RunResult& accum, const StepHook& hook) {
    const Grid& grid = *ctx.grid;
    const auto n = static_cast<std::size_t>(grid.n);

    PhaseLogEntry entry;
    entry.phase = kind;
    entry.t_begin = t_begin;
    entry.t_end = t_begin;

    if (kind == PhaseKind::riccati && (ctx.steering == nullptr || ctx.law == nullptr)) {
        accum.failed = true;
        accum.failure = "riccati phase requires a steering solution and a feedback law";
        entry.ok = false;
        entry.note = accum.failure;
        accum.phase_log.push_back(entry);
        return;
    }

    // Amplitude floor for the nonlinear phase: remaining time of the flat
    // reaction mode, (p-1)^{-1} sup^{1-p}, has shrunk to floor_eps.
    const double sup_cap =
        std::pow((ctx.p - 1.0) * ctx.opts.floor_eps, -1.0 / (ctx.p - 1.0));

    std::vector<double> source(n, 0.0);
    std::vector<double> y_next(n, 0.0);

    auto record = [&](double t, double dt) -> bool {
        SupSample s;
        s.t = t;
        s.sup = linf_norm(y);
        s.argmax_x = argmax_parabolic(grid, y);
        accum.sup_series.push_back(s);
        if (entry.steps % ctx.opts.checkpoint_stride == 0) {
            accum.trajectory.push_back(Checkpoint{t, y});
        }
        return hook ? hook(t, y, dt) : true;
    };

    double t = t_begin;
    try {
        while (t < t_end - 1e-18) {
            double dt;
            if (kind == PhaseKind::nonlinear) {
                dt = adaptive_dt(y, ctx.opts.base_dt, ctx.p, ctx.opts.safety);
            } else {
                dt = ctx.opts.base_dt;
            }
            dt = std::min(dt, t_end - t);

            switch (kind) {
                case PhaseKind::riccati:
                    // The control enters the equation through the region mask.
                    control_value(*ctx.law, *ctx.steering, y, t, source);
                    for (std::size_t i = 0; i < n; ++i) source[i] *= ctx.region->mask[i];
                    break;
                case PhaseKind::zero:
                    std::fill(source.begin(), source.end(), 0.0);
                    break;
                case PhaseKind::nonlinear:
                    for (std::size_t i = 0; i < n; ++i) {
                        source[i] = ctx.region->mask[i] *
                                    std::pow(std::fabs(y[i]), ctx.p - 1.0) * y[i];
                    }
                    break;
            }

            if (ctx.opts.disable_diffusion) {
                for (std::size_t i = 0; i < n; ++i) y_next[i] = y[i] + dt * source[i];
            } else {
                step_imex(grid, y, source, dt, y_next);
            }

            bool finite = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(y_next[i])) {
                    finite = false;
                    break;
                }
            }
            if (!finite) {
                entry.ok = false;
                entry.note = "non-finite state, stopped at last good step";
                break;
            }

            y.swap(y_next);
            t += dt;
            ++entry.steps;
            entry.t_end = t;
            const bool keep_going = record(t, dt);

            if (kind == PhaseKind::nonlinear && linf_norm(y) >= sup_cap) {
                entry.note = "amplitude floor reached";
                break;
            }
            if (!keep_going) {
                entry.note = "stopped by hook";
                break;
            }
        }
    } catch (const Error& e) {
        entry.ok = false;
        entry.note = std::string(phase_name(kind)) + " phase: " + e.what();
        accum.failed = true;
        accum.failure = entry.note;
    }
    accum.phase_log.push_back(entry);
}

BlowupEstimate detect_blowup(std::span<const SupSample> sup_series, double p, double floor_eps,
                             double threshold) {
    (void)floor_eps;
    BlowupEstimate est;
    if (sup_series.empty()) return est;

    double sup_max = 0.0;
    for (const auto& s : sup_series) sup_max = std::max(sup_max, s.sup);
    if (sup_max < threshold) return est;  // no blowup detected

    // Fit window: the contiguous tail covering the last decade of growth.
    const double sup_lo = sup_max / 10.0;
    std::vector<double> ts, us;
    for (std::size_t i = sup_series.size(); i-- > 0;) {
        if (sup_series[i].sup < sup_lo) break;
        ts.push_back(sup_series[i].t);
        us.push_back(std::pow(sup_series[i].sup, 1.0 - p));
    }
    std::reverse(ts.begin(), ts.end());
    std::reverse(us.begin(), us.end());
    if (ts.size() < 10) return est;

    const LineFit fit = fit_line(ts, us);
    if (!(fit.slope < 0.0)) return est;

    est.detected = true;
    est.t_star = -fit.intercept / fit.slope;
    est.kappa_hat = std::pow(-fit.slope, -1.0 / (p - 1.0));
    est.residual = fit.max_rel_residual;
    est.a_star = sup_series.back().argmax_x;
    return est;
}

RunResult run_three_phase(const ThreePhaseInputs& in) {
    RunResult result;
    in.plan.validate();
    const Grid& grid = *in.grid;

    PhaseContext ctx;
    ctx.grid = in.grid;
    ctx.region = in.region;
    ctx.p = in.plan.p;
    ctx.opts = in.opts;
    ctx.opts.floor_eps = in.plan.floor_eps;

    std::optional<FeedbackLaw> law;
    try {
        law.emplace(grid, in.target, *in.region);
    } catch (const Error& e) {
        result.failed = true;
        result.failure = std::string("feedback law: ") + e.what();
        return result;
    }
    ctx.law = &*law;
    ctx.steering = in.steering;

    std::vector<double> y = in.y0;
    result.sup_series.push_back(SupSample{0.0, linf_norm(y), argmax_parabolic(grid, y)});
    result.trajectory.push_back(Checkpoint{0.0, y});

    run_phase(ctx, PhaseKind::riccati, 0.0, in.plan.steering_end(), y, result, in.hook);
    if (!result.failed) {
        run_phase(ctx, PhaseKind::zero, in.plan.steering_end(), in.plan.smoothing_end(), y,
                  result, in.hook);
    }
    if (!result.failed) {
        // The nonlinear phase runs to its amplitude floor; the time cap only
        // guards against a configuration whose data never blows up. Dense
        // checkpoints here: the blowup-phase diagnostics live on them.
        const double t_cap = in.plan.smoothing_end() + 2.0 * in.plan.t1 + in.plan.eps_hat;
        ctx.opts.checkpoint_stride = 1;
        run_phase(ctx, PhaseKind::nonlinear, in.plan.smoothing_end(), t_cap, y, result,
                  in.hook);
    }

    result.blowup = detect_blowup(result.sup_series, in.plan.p, in.plan.floor_eps,
                                  in.opts.blowup_threshold);
    // Keep the final state for diagnostics even off the checkpoint cadence.
    if (result.trajectory.empty() || result.trajectory.back().t != result.sup_series.back().t) {
        result.trajectory.push_back(Checkpoint{result.sup_series.back().t, y});
    }
    return result;
}

}  // namespace blowctl
