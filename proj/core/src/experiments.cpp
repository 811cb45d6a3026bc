#include "blowctl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>

#include <nlohmann/json.hpp>

#include "blowctl/cutoff.hpp"
#include "blowctl/quadrature.hpp"
#include "blowctl/version.hpp"

namespace blowctl {

namespace fs = std::filesystem;
using nlohmann::json;

Problem make_problem(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.finalize();
    Problem prob{cfg, build_grid(cfg.domain_lo, cfg.domain_hi, cfg.n),
                 ControlRegion{}, ProfileParams::for_exponent(cfg.p)};
    prob.region = build_control_region(prob.grid, cfg.omega_lo, cfg.omega_hi);
    return prob;
}

InitialDataParams Problem::data_params() const {
    return InitialDataParams::for_scale(cfg.a, cfg.s0, cfg.k0, cfg.epsilon0, cfg.a_bound,
                                        cfg.p);
}

AuxRunConfig Problem::aux_config() const {
    AuxRunConfig aux;
    aux.opts.base_dt = cfg.base_dt;
    aux.opts.safety = cfg.safety;
    aux.opts.blowup_threshold = cfg.blowup_threshold;
    aux.opts.floor_eps = cfg.floor_eps;
    aux.opts.checkpoint_stride = 1;
    aux.mu = cfg.mu;
    aux.eta0 = cfg.eta0;
    return aux;
}

PhasePlan Problem::plan() const {
    PhasePlan plan;
    plan.t_total = cfg.t_total;
    plan.t1 = cfg.t1;
    plan.eps_hat = cfg.eps_hat;
    plan.eps_hat1 = cfg.eps_hat1;
    plan.p = cfg.p;
    plan.floor_eps = cfg.floor_eps;
    plan.validate();
    return plan;
}

double w2inf_norm(const Grid& grid, std::span<const double> v) {
    if (v.size() != static_cast<std::size_t>(grid.n)) {
        throw DimensionError("w2inf_norm: field length does not match grid");
    }
    double m = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        const double left = i > 0 ? v[i - 1] : 0.0;
        const double right = i + 1 < grid.n ? v[i + 1] : 0.0;
        const double d1 = (right - left) / (2.0 * grid.h);
        const double d2 = (left - 2.0 * v[i] + right) / (grid.h * grid.h);
        m = std::max({m, std::fabs(v[i]), std::fabs(d1), std::fabs(d2)});
    }
    return m;
}

std::vector<double> stability_bump(const Problem& prob, std::span<const double> baseline) {
    const Grid& grid = prob.grid;
    const double center = prob.cfg.a + 0.3 * prob.cfg.epsilon0;
    const double radius = 0.5 * prob.cfg.epsilon0;

    std::vector<double> bump(grid.n, 0.0);
    for (int i = 0; i < grid.n; ++i) {
        const double u = (grid.nodes[i] - center) / radius;
        if (std::fabs(u) < 1.0) bump[i] = std::exp(-1.0 / (1.0 - u * u));
    }
    for (int i = 0; i < grid.n; ++i) {
        if (prob.region.mask[i] == 0.0 && bump[i] != 0.0) {
            throw GeometryError("stability_bump: direction escapes the control region");
        }
    }
    const double scale = w2inf_norm(grid, baseline) / w2inf_norm(grid, bump);
    for (double& v : bump) v *= scale;
    return bump;
}

bool profile_trend_ok(const std::vector<ProfileErrorSample>& samples) {
    const ProfileErrorSample* prev = nullptr;
    for (const auto& s : samples) {
        if (!s.resolved) continue;
        if (prev && s.sup_err > prev->sup_err * 1.05) return false;
        prev = &s;
    }
    return true;
}

ConstructOutcome run_construct(const Problem& prob) {
    ConstructOutcome out;
    SearchOptions sopt;
    sopt.budget = prob.cfg.budget;
    const InitialDataParams base = prob.data_params();
    out.shooting = search_dt(base, prob.grid, prob.region, prob.aux_config(), sopt);
    out.ok = !out.shooting.search_failed;

    InitialDataParams chosen = base;
    chosen.d0 = out.shooting.d0_star;
    chosen.d1 = out.shooting.d1_star;
    out.ytilde0 = candidate_initial_data(chosen, prob.grid);
    out.aux = run_auxiliary_monitored(chosen, prob.grid, prob.region, prob.aux_config(), false);
    return out;
}

namespace {

json shooting_to_json(const ShootingResult& r) {
    json trace = json::array();
    for (const auto& row : r.trace) trace.push_back({row[0], row[1], row[2]});
    return json{{"d0_star", r.d0_star},
                {"d1_star", r.d1_star},
                {"s_exit", r.s_exit},
                {"exit_mode", exit_mode_name(r.exit_mode)},
                {"worst_mode_ratio", r.worst_mode_ratio},
                {"search_failed", r.search_failed},
                {"trace", trace}};
}

json blowup_to_json(const BlowupEstimate& b) {
    return json{{"detected", b.detected}, {"t_star", b.t_star},     {"a_star", b.a_star},
                {"kappa_hat", b.kappa_hat}, {"residual", b.residual}};
}

json phase_log_to_json(const std::vector<PhaseLogEntry>& log) {
    json arr = json::array();
    for (const auto& e : log) {
        arr.push_back({{"phase", phase_name(e.phase)},
                       {"t_begin", e.t_begin},
                       {"t_end", e.t_end},
                       {"steps", e.steps},
                       {"ok", e.ok},
                       {"note", e.note}});
    }
    return arr;
}

void write_json(const fs::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

json summary_header(const ExperimentConfig& cfg) {
    return json{{"config_hash", cfg.hash()}, {"version", kVersion}};
}

void write_effective_config(const ExperimentConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    write_text_file(out_dir / "config.effective", cfg.canonical_string());
}

/// Membership series verdict: strict for q2/q_minus/q_e/region, saturation
/// factor for the two steered modes.
struct MembershipVerdict {
    bool strict_all = true;
    bool relaxed_all = true;  // q0/q1 allowed up to 1.5x
    double worst_q01_ratio = 0.0;
};

MembershipVerdict judge_membership(const std::vector<MembershipRow>& rows) {
    MembershipVerdict v;
    for (const auto& r : rows) {
        const double q01 = std::max(r.report.q0.ratio(), r.report.q1.ratio());
        v.worst_q01_ratio = std::max(v.worst_q01_ratio, q01);
        const bool rest = r.report.q2.pass && r.report.q_minus.pass && r.report.q_e.pass &&
                          r.region_ok;
        v.strict_all = v.strict_all && rest && r.report.q0.pass && r.report.q1.pass;
        v.relaxed_all = v.relaxed_all && rest && q01 <= 1.5;
    }
    return v;
}

}  // namespace

ConstructOutcome cmd_construct(const ExperimentConfig& cfg, const fs::path& out_dir) {
    const Problem prob = make_problem(cfg);
    write_effective_config(prob.cfg, out_dir);
    const fs::path dir = out_dir / "construct";
    fs::create_directories(dir);

    ConstructOutcome out = run_construct(prob);

    write_field_csv(dir / "ytilde0.csv", prob.grid, out.ytilde0);
    write_json(dir / "shooting.json", shooting_to_json(out.shooting));
    write_membership_csv(dir / "membership.csv", out.aux.membership);
    write_sup_series_csv(dir / "aux_sup_series.csv", out.aux.run.sup_series);
    write_trajectory_csv(dir / "aux_trajectory.csv", prob.grid, out.aux.run.trajectory);

    const MembershipVerdict verdict = judge_membership(out.aux.membership);
    json summary = summary_header(prob.cfg);
    summary["ok"] = out.ok;
    summary["s0"] = prob.cfg.s0;
    summary["t_horizon"] = prob.data_params().t_blowup;
    summary["shooting"] = shooting_to_json(out.shooting);
    summary["aux_blowup"] = blowup_to_json(out.aux.run.blowup);
    summary["membership_strict_all"] = verdict.strict_all;
    summary["membership_relaxed_all"] = verdict.relaxed_all;
    summary["worst_q01_ratio"] = verdict.worst_q01_ratio;
    write_json(dir / "summary.json", summary);
    return out;
}

RunResult run_auxiliary_plain(const Problem& prob, std::vector<double> y0) {
    RunResult result;
    PhaseContext ctx;
    ctx.grid = &prob.grid;
    ctx.region = &prob.region;
    ctx.p = prob.cfg.p;
    ctx.opts = prob.aux_config().opts;

    const double horizon = std::exp(-prob.cfg.s0);
    result.sup_series.push_back(SupSample{0.0, linf_norm(y0), prob.cfg.a});
    result.trajectory.push_back(Checkpoint{0.0, y0});
    run_phase(ctx, PhaseKind::nonlinear, 0.0, horizon - ctx.opts.floor_eps, y0, result);
    result.blowup = detect_blowup(result.sup_series, prob.cfg.p, ctx.opts.floor_eps,
                                  ctx.opts.blowup_threshold);
    if (result.trajectory.back().t != result.sup_series.back().t) {
        result.trajectory.push_back(Checkpoint{result.sup_series.back().t, y0});
    }
    return result;
}

ControlSummary cmd_control(const ExperimentConfig& cfg, const fs::path& out_dir,
                           const std::string& y0_source, bool no_construct,
                           const fs::path& cache_path) {
    const Problem prob = make_problem(cfg);
    write_effective_config(prob.cfg, out_dir);
    const fs::path dir = out_dir / "control";
    fs::create_directories(dir);

    // Steering target from the construct artifact (or construct on demand).
    const fs::path ytilde_path = out_dir / "construct" / "ytilde0.csv";
    std::vector<double> target;
    if (fs::exists(ytilde_path)) {
        target = read_field_csv(ytilde_path, prob.grid);
    } else if (no_construct) {
        throw ConfigError("control: " + ytilde_path.string() +
                          " not found; run the construct command first or drop --no-construct");
    } else {
        target = cmd_construct(cfg, out_dir).ytilde0;
    }

    // Initial data preset.
    std::vector<double> y0;
    if (y0_source == "zero" || y0_source.empty()) {
        y0.assign(prob.grid.n, 0.0);
    } else if (y0_source == "target") {
        y0 = target;
    } else {
        y0 = read_field_csv(y0_source, prob.grid);
    }

    // Steering kernel, cached when requested.
    const double horizon = prob.steering_horizon();
    RiccatiSolution steering;
    bool loaded = false;
    if (!cache_path.empty() && fs::exists(cache_path)) {
        steering = load_riccati_cache(cache_path, prob.grid, prob.region);
        loaded = std::fabs(steering.horizon - horizon) <= 1e-12 * horizon;
    }
    if (!loaded) {
        steering = solve_lyapunov_q(prob.grid, prob.region, horizon, cfg.n_knots, cfg.reg_eps);
        if (!cache_path.empty()) {
            save_riccati_cache(cache_path, steering, prob.grid, prob.region);
        }
    }

    ThreePhaseInputs in;
    in.grid = &prob.grid;
    in.region = &prob.region;
    in.plan = prob.plan();
    in.y0 = std::move(y0);
    in.target = target;
    in.steering = &steering;
    in.opts.base_dt = cfg.control_dt;
    in.opts.safety = cfg.safety;
    in.opts.blowup_threshold = cfg.blowup_threshold;
    in.opts.floor_eps = cfg.floor_eps;
    in.opts.checkpoint_stride = cfg.checkpoint_stride;

    RunResult run = run_three_phase(in);

    // The shrinking-set premises (similarity frame around the blowup ansatz)
    // apply to the localized nonlinear flow; the blowup-phase checkpoints are
    // the ones the region and profile diagnostics speak about.
    double nl_start = in.plan.smoothing_end();
    for (const auto& e : run.phase_log) {
        if (e.phase == PhaseKind::nonlinear) nl_start = e.t_begin;
    }
    std::vector<Checkpoint> blowup_phase;
    for (const auto& cp : run.trajectory) {
        if (cp.t >= nl_start) blowup_phase.push_back(cp);
    }

    std::vector<ProfileErrorSample> profile_samples;
    if (run.blowup.detected) {
        for (const auto& cp : blowup_phase) {
            if (run.blowup.t_star - cp.t >= cfg.floor_eps &&
                run.blowup.t_star - cp.t < 1.0) {
                profile_samples.push_back(profile_error(prob.grid, cp.y, cp.t,
                                                        run.blowup.t_star, run.blowup.a_star,
                                                        1.0, prob.profile));
            }
        }
    }
    const auto region_rows = regular_region_bound(blowup_phase, prob.grid, cfg.a,
                                                  cfg.epsilon0, cfg.mu, cfg.eta0);

    write_trajectory_csv(dir / "trajectory.csv", prob.grid, run.trajectory);
    write_sup_series_csv(dir / "sup_series.csv", run.sup_series);
    write_profile_error_csv(dir / "profile_error.csv", profile_samples);
    write_region_csv(dir / "regular_region.csv", region_rows);

    ControlSummary summary;
    summary.detected = run.blowup.detected;
    summary.t_star = run.blowup.t_star;
    summary.a_star = run.blowup.a_star;
    summary.time_err = std::fabs(run.blowup.t_star - cfg.t_total);
    summary.point_err = std::fabs(run.blowup.a_star - cfg.a);
    summary.pass_time = run.blowup.detected && summary.time_err < cfg.epsilon;
    summary.pass_point = run.blowup.detected && summary.point_err <= 2.0 * prob.grid.h;
    summary.region_all_pass =
        std::all_of(region_rows.begin(), region_rows.end(),
                    [](const RegionCheckRow& r) { return r.pass; });
    summary.ok = !run.failed && run.blowup.detected;
    if (run.failed) summary.failure = run.failure;

    json j = summary_header(prob.cfg);
    j["ok"] = summary.ok;
    j["failure"] = summary.failure;
    j["T"] = cfg.t_total;
    j["epsilon"] = cfg.epsilon;
    j["blowup"] = blowup_to_json(run.blowup);
    j["time_err"] = summary.time_err;
    j["point_err"] = summary.point_err;
    j["point_tol"] = 2.0 * prob.grid.h;
    j["pass_time"] = summary.pass_time;
    j["pass_point"] = summary.pass_point;
    j["region_all_pass"] = summary.region_all_pass;
    j["profile_trend_ok"] = profile_trend_ok(profile_samples);
    j["phase_log"] = phase_log_to_json(run.phase_log);
    try {
        const FitQuality fit = fit_quality(run.sup_series, cfg.p);
        j["fit"] = {{"kappa_hat", fit.kappa_hat},
                    {"t_star", fit.t_star},
                    {"residual", fit.residual}};
    } catch (const Error& e) {
        j["fit"] = {{"rejected", e.what()}};
    }
    write_json(dir / "summary.json", j);
    return summary;
}

RecenterSlopes recenter_slopes(const Problem& prob, std::span<const double> baseline,
                               const std::vector<double>& sizes) {
    const double s0 = prob.cfg.s0;
    const double t_hat = std::exp(-s0);
    const ZGrid zg = ZGrid::for_coverage(s0 + 1.0, prob.cfg.k0);

    auto modes_at = [&](double t_cand, double a_cand) {
        const std::vector<double> psi =
            recenter(prob.grid, baseline, baseline, t_cand, a_cand, t_hat, prob.cfg.a, s0,
                     prob.cfg.epsilon0, prob.profile, zg);
        const double tau = (t_cand - t_hat) * std::exp(s0);
        const double sigma0 = s0 - std::log1p(tau);
        return std::pair<SpectralDecomposition, double>(
            project_modes(psi, zg, sigma0, prob.cfg.k0), sigma0);
    };

    RecenterSlopes out;
    out.sizes = sizes;
    const auto [base_dec, base_sigma] = modes_at(t_hat, prob.cfg.a);

    const double p = prob.cfg.p;
    out.tau_predicted = prob.profile.kappa / (p - 1.0);
    out.alpha_predicted = -2.0 * prob.profile.b * prob.profile.kappa / ((p - 1.0) * (p - 1.0) * s0);

    for (double size : sizes) {
        // tau response of the zero mode
        const double t_cand = t_hat + size * std::exp(-s0);
        const auto [dec_tau, sigma_tau] = modes_at(t_cand, prob.cfg.a);
        const double corr = (sigma_tau / s0) * (sigma_tau / s0);
        out.tau_slopes.push_back((corr * dec_tau.q0 - base_dec.q0) / size);

        // alpha response of the first mode
        const double a_cand = prob.cfg.a + size * std::exp(-0.5 * s0);
        const auto [dec_alpha, sigma_alpha] = modes_at(t_hat, a_cand);
        (void)sigma_alpha;
        out.alpha_slopes.push_back((dec_alpha.q1 - base_dec.q1) / size);
    }

    out.signs_ok = true;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        out.signs_ok = out.signs_ok && out.tau_slopes[i] > 0.0 && out.alpha_slopes[i] < 0.0;
        out.tau_max_rel_err =
            std::max(out.tau_max_rel_err,
                     std::fabs(out.tau_slopes[i] - out.tau_predicted) /
                         std::fabs(out.tau_predicted));
        out.alpha_max_rel_err =
            std::max(out.alpha_max_rel_err,
                     std::fabs(out.alpha_slopes[i] - out.alpha_predicted) /
                         std::fabs(out.alpha_predicted));
    }
    return out;
}

StabilityReport cmd_stability(const ExperimentConfig& cfg, const fs::path& out_dir,
                              const std::vector<double>& sizes) {
    const Problem prob = make_problem(cfg);
    write_effective_config(prob.cfg, out_dir);
    const fs::path dir = out_dir / "stability";
    fs::create_directories(dir);

    // Baseline data: stored construct artifact, or construct now.
    const fs::path ytilde_path = out_dir / "construct" / "ytilde0.csv";
    std::vector<double> baseline;
    if (fs::exists(ytilde_path)) {
        baseline = read_field_csv(ytilde_path, prob.grid);
    } else {
        baseline = cmd_construct(cfg, out_dir).ytilde0;
    }

    const RunResult base_run = run_auxiliary_plain(prob, baseline);
    if (!base_run.blowup.detected) {
        throw SolverError("stability: baseline auxiliary run did not blow up");
    }
    const std::vector<double> bump = stability_bump(prob, baseline);

    // Fan the sweep out over a bounded pool of workers; rows are merged back
    // in size order, so the report is independent of completion order.
    auto run_row = [&](double sigma) {
        StabilityRow row;
        row.sigma = sigma;
        row.pert_norm = sigma * w2inf_norm(prob.grid, bump);
        std::vector<double> y0 = baseline;
        for (int i = 0; i < prob.grid.n; ++i) y0[i] += sigma * bump[i];

        const RunResult run = sigma == 0.0 ? base_run : run_auxiliary_plain(prob, y0);
        row.converged = run.blowup.detected && !run.failed;
        if (row.converged) {
            row.t_star = run.blowup.t_star;
            row.a_star = run.blowup.a_star;
            row.delta_t = std::fabs(run.blowup.t_star - base_run.blowup.t_star);
            row.delta_a = std::fabs(run.blowup.a_star - base_run.blowup.a_star);
            std::vector<ProfileErrorSample> samples;
            for (const auto& cp : run.trajectory) {
                const double rem = run.blowup.t_star - cp.t;
                if (rem >= cfg.floor_eps && rem < 1.0) {
                    samples.push_back(profile_error(prob.grid, cp.y, cp.t, run.blowup.t_star,
                                                    run.blowup.a_star, 1.0, prob.profile));
                }
            }
            row.profile_trend = profile_trend_ok(samples);
        }
        return row;
    };

    StabilityReport report;
    report.ok = true;
    constexpr std::size_t kPool = 4;
    std::vector<std::future<StabilityRow>> pending;
    report.rows.resize(sizes.size());
    for (std::size_t start = 0; start < sizes.size(); start += kPool) {
        const std::size_t stop = std::min(sizes.size(), start + kPool);
        pending.clear();
        for (std::size_t i = start; i < stop; ++i) {
            pending.push_back(std::async(std::launch::async, run_row, sizes[i]));
        }
        for (std::size_t i = start; i < stop; ++i) {
            report.rows[i] = pending[i - start].get();
            report.ok = report.ok && report.rows[i].converged;
        }
    }

    report.recenter = recenter_slopes(prob, baseline, {1e-4, 1e-3, 1e-2});

    // Artifacts.
    std::string csv = "sigma,pert_norm,converged,t_star,a_star,delta_t,delta_a,profile_trend\n";
    for (const auto& r : report.rows) {
        csv += fmt_double(r.sigma) + "," + fmt_double(r.pert_norm) + "," +
               (r.converged ? std::string("1") : std::string("0")) + "," +
               fmt_double(r.t_star) + "," + fmt_double(r.a_star) + "," +
               fmt_double(r.delta_t) + "," + fmt_double(r.delta_a) + "," +
               (r.profile_trend ? std::string("1") : std::string("0")) + "\n";
    }
    write_text_file(dir / "stability.csv", csv);

    json rec;
    rec["sizes"] = report.recenter.sizes;
    rec["tau_slopes"] = report.recenter.tau_slopes;
    rec["alpha_slopes"] = report.recenter.alpha_slopes;
    rec["tau_predicted"] = report.recenter.tau_predicted;
    rec["alpha_predicted"] = report.recenter.alpha_predicted;
    rec["tau_max_rel_err"] = report.recenter.tau_max_rel_err;
    rec["alpha_max_rel_err"] = report.recenter.alpha_max_rel_err;
    rec["signs_ok"] = report.recenter.signs_ok;
    write_json(dir / "recenter.json", rec);

    json summary = summary_header(prob.cfg);
    summary["ok"] = report.ok;
    summary["baseline"] = blowup_to_json(base_run.blowup);
    summary["rows"] = json::array();
    for (const auto& r : report.rows) {
        summary["rows"].push_back({{"sigma", r.sigma},
                                   {"converged", r.converged},
                                   {"delta_t", r.delta_t},
                                   {"delta_a", r.delta_a},
                                   {"profile_trend", r.profile_trend}});
    }
    write_json(dir / "summary.json", summary);
    return report;
}

void cmd_riccati_cache(const ExperimentConfig& cfg, const fs::path& cache_path) {
    const Problem prob = make_problem(cfg);
    const RiccatiSolution sol = solve_lyapunov_q(prob.grid, prob.region,
                                                 prob.steering_horizon(), cfg.n_knots,
                                                 cfg.reg_eps);
    save_riccati_cache(cache_path, sol, prob.grid, prob.region);
}

void cmd_diagnose(const ExperimentConfig& cfg, const fs::path& run_dir) {
    const Problem prob = make_problem(cfg);
    const fs::path control = run_dir / "control";
    const auto trajectory = read_trajectory_csv(control / "trajectory.csv", prob.grid);
    const auto sup_series = read_sup_series_csv(control / "sup_series.csv");

    const fs::path dir = run_dir / "diagnose";
    fs::create_directories(dir);

    const BlowupEstimate blowup =
        detect_blowup(sup_series, cfg.p, cfg.floor_eps, cfg.blowup_threshold);
    std::vector<ProfileErrorSample> samples;
    if (blowup.detected) {
        for (const auto& cp : trajectory) {
            const double rem = blowup.t_star - cp.t;
            if (rem >= cfg.floor_eps && rem < 1.0) {
                samples.push_back(profile_error(prob.grid, cp.y, cp.t, blowup.t_star,
                                                blowup.a_star, 1.0, prob.profile));
            }
        }
    }
    write_profile_error_csv(dir / "profile_error.csv", samples);
    write_region_csv(dir / "regular_region.csv",
                     regular_region_bound(trajectory, prob.grid, cfg.a, cfg.epsilon0, cfg.mu,
                                          cfg.eta0));

    json j = summary_header(prob.cfg);
    j["blowup"] = blowup_to_json(blowup);
    j["profile_trend_ok"] = profile_trend_ok(samples);
    try {
        const FitQuality fit = fit_quality(sup_series, cfg.p);
        j["fit"] = {{"kappa_hat", fit.kappa_hat},
                    {"t_star", fit.t_star},
                    {"residual", fit.residual}};
    } catch (const Error& e) {
        j["fit"] = {{"rejected", e.what()}};
    }
    write_json(dir / "summary.json", j);
}

}  // namespace blowctl
