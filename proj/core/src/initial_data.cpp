#include "blowctl/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "blowctl/cutoff.hpp"
#include "blowctl/quadrature.hpp"

namespace blowctl {

InitialDataParams InitialDataParams::for_scale(double a, double s0, double k0, double epsilon0,
                                               double a_bound, double p) {
    InitialDataParams prm;
    prm.a = a;
    prm.s0 = s0;
    prm.t_blowup = std::exp(-s0);
    prm.k0 = k0;
    prm.epsilon0 = epsilon0;
    prm.a_bound = a_bound;
    prm.p = p;
    prm.validate();
    return prm;
}

void InitialDataParams::validate() const {
    if (!(p > 1.0)) throw ConfigError("InitialDataParams: need p > 1");
    if (!(s0 > 1.0)) throw ConfigError("InitialDataParams: need s0 > 1");
    if (std::fabs(t_blowup - std::exp(-s0)) > 1e-12 * t_blowup) {
        throw ConfigError("InitialDataParams: T and s0 = -log T inconsistent");
    }
    if (!(k0 >= 1.0)) throw ConfigError("InitialDataParams: need K0 >= 1");
    if (!(epsilon0 > 0.0)) throw ConfigError("InitialDataParams: need epsilon0 > 0");
    if (!(a_bound > 0.0)) throw ConfigError("InitialDataParams: need A > 0");
    if (!(k0 * std::sqrt(s0) < epsilon0 * std::exp(0.5 * s0))) {
        throw ConfigError(
            "InitialDataParams: inner scale K0 sqrt(s0) must stay below the "
            "localization plateau eps0 e^{s0/2}; increase s0 or epsilon0");
    }
    if (std::fabs(d0) > 2.0 || std::fabs(d1) > 2.0) {
        throw ConfigError("InitialDataParams: (d0, d1) must lie in [-2, 2]^2");
    }
}

std::vector<double> candidate_initial_data(const InitialDataParams& prm, const Grid& grid) {
    prm.validate();
    const ProfileParams profile = ProfileParams::for_exponent(prm.p);
    const double t_hor = prm.t_blowup;
    const double amp = std::pow(t_hor, -1.0 / (prm.p - 1.0));
    const double root_t = std::sqrt(t_hor);
    const double d_amp = prm.a_bound / (prm.s0 * prm.s0);
    const double d_cut_scale = prm.k0 * std::sqrt(t_hor * prm.s0);

    std::vector<double> y0(grid.n, 0.0);
    for (int i = 0; i < grid.n; ++i) {
        const double dx = grid.nodes[i] - prm.a;
        const double z = dx / root_t;
        const double profile_term =
            phi(z, prm.s0, profile) * cutoff_chi0(8.0 * dx / prm.epsilon0);
        const double d_term =
            d_amp * (prm.d0 + prm.d1 * z) * cutoff_chi0(2.0 * std::fabs(dx) / d_cut_scale);
        y0[i] = amp * (profile_term + d_term);
    }
    return y0;
}

const char* exit_mode_name(ExitMode m) {
    switch (m) {
        case ExitMode::q0: return "q0";
        case ExitMode::q1: return "q1";
        case ExitMode::q2: return "q2";
        case ExitMode::q_minus: return "q_minus";
        case ExitMode::q_e: return "q_e";
        case ExitMode::regular_region: return "regular_region";
        case ExitMode::horizon: return "horizon";
    }
    return "?";
}

namespace {

struct MonitorState {
    const InitialDataParams* prm = nullptr;
    const Grid* grid = nullptr;
    ProfileParams profile{};
    ZGrid zgrid;
    ShrinkingSetParams set_prm;
    double mu = 0.5;
    double eta0 = 1.0;
    bool violated = false;
    ExitMode mode = ExitMode::horizon;
    double s_exit = 0.0;
    ShootingResult* result = nullptr;
    std::vector<MembershipRow>* rows = nullptr;  // optional
    double prev_s = 0.0;
    std::array<double, 6> prev_ratio{};  // q0, q1, q2, q_minus, q_e, region
    bool have_prev = false;

    /// Evaluates the monitor at physical time t; returns false on violation.
    bool evaluate(double t, std::span<const double> y) {
        const double remaining = prm->t_blowup - t;
        if (!(remaining > 0.0)) return true;
        const double s = -std::log(remaining);

        const SimilarityFrame frame(prm->a, prm->t_blowup, t);
        const SimilaritySlice slice = to_similarity(*grid, y, frame, prm->p);
        const std::vector<double> w = localize_w(*grid, slice, zgrid, prm->epsilon0);
        const std::vector<double> q = q_of_w(w, zgrid, s, profile);
        const SpectralDecomposition dec = project_modes(q, zgrid, s, prm->k0);
        const ShrinkingReport rep = shrinking_membership(dec, zgrid, set_prm, s);

        double region_max = 0.0;
        const double cut = mu * prm->epsilon0;
        for (int i = 0; i < grid->n; ++i) {
            if (std::fabs(grid->nodes[i] - prm->a) >= cut) {
                region_max = std::max(region_max, std::fabs(y[i]));
            }
        }
        const bool region_ok = region_max <= eta0;

        result->trace.push_back({s, dec.q0 * s * s, dec.q1 * s * s});
        result->worst_mode_ratio =
            std::max({result->worst_mode_ratio, rep.q0.ratio(), rep.q1.ratio()});
        if (rows) rows->push_back(MembershipRow{s, rep, region_ok, region_max});

        const std::array<double, 6> ratio = {rep.q0.ratio(),      rep.q1.ratio(),
                                             rep.q2.ratio(),      rep.q_minus.ratio(),
                                             rep.q_e.ratio(),     region_max / eta0};
        if (violated) return true;  // already recorded, report-only mode
        static constexpr ExitMode kModes[6] = {ExitMode::q0,      ExitMode::q1,
                                               ExitMode::q2,      ExitMode::q_minus,
                                               ExitMode::q_e,     ExitMode::regular_region};
        int bad_idx = -1;
        for (int i = 0; i < 6; ++i) {
            if (ratio[i] > 1.0) {
                bad_idx = i;
                break;
            }
        }
        if (bad_idx >= 0) {
            violated = true;
            mode = kModes[bad_idx];
            // Continuous exit time: interpolate the bound crossing between
            // the previous and the current monitor sample.
            s_exit = s;
            if (have_prev && ratio[bad_idx] > prev_ratio[bad_idx] &&
                prev_ratio[bad_idx] <= 1.0) {
                const double w =
                    (1.0 - prev_ratio[bad_idx]) / (ratio[bad_idx] - prev_ratio[bad_idx]);
                s_exit = prev_s + w * (s - prev_s);
            }
        }
        prev_s = s;
        prev_ratio = ratio;
        have_prev = true;
        return bad_idx < 0;
    }
};

}  // namespace

AuxRunOutput run_auxiliary_monitored(const InitialDataParams& prm, const Grid& grid,
                                     const ControlRegion& region, const AuxRunConfig& cfg,
                                     bool stop_at_violation) {
    prm.validate();
    AuxRunOutput out;
    out.exit_info.d0_star = prm.d0;
    out.exit_info.d1_star = prm.d1;

    const double s_floor = -std::log(cfg.opts.floor_eps);

    MonitorState mon;
    mon.prm = &prm;
    mon.grid = &grid;
    mon.profile = ProfileParams::for_exponent(prm.p);
    mon.zgrid = ZGrid::for_coverage(s_floor, prm.k0);
    mon.set_prm = ShrinkingSetParams{prm.k0,  prm.epsilon0, prm.a_bound,
                                     cfg.mu,  cfg.eta0,     prm.t_blowup};
    mon.mu = cfg.mu;
    mon.eta0 = cfg.eta0;
    mon.result = &out.exit_info;
    mon.rows = &out.membership;

    std::vector<double> y = candidate_initial_data(prm, grid);
    // Support must sit inside the control region; the localized nonlinearity
    // must act on the whole core.
    for (int i = 0; i < grid.n; ++i) {
        if (region.mask[i] == 0.0 && y[i] != 0.0) {
            throw GeometryError("candidate_initial_data: support escapes the control region");
        }
    }

    mon.evaluate(0.0, y);
    if (mon.violated && stop_at_violation) {
        out.exit_info.s_exit = mon.s_exit;
        out.exit_info.exit_mode = mon.mode;
        return out;
    }

    PhaseContext ctx;
    ctx.grid = &grid;
    ctx.region = &region;
    ctx.p = prm.p;
    ctx.opts = cfg.opts;

    StepHook hook = [&](double t, std::span<const double> yv, double) {
        const bool ok = mon.evaluate(t, yv);
        return stop_at_violation ? ok : true;
    };

    run_phase(ctx, PhaseKind::nonlinear, 0.0, prm.t_blowup - cfg.opts.floor_eps, y, out.run,
              hook);

    out.run.blowup = detect_blowup(out.run.sup_series, prm.p, cfg.opts.floor_eps,
                                   cfg.opts.blowup_threshold);
    if (out.run.trajectory.empty() || out.run.trajectory.back().t != out.run.sup_series.back().t) {
        out.run.trajectory.push_back(Checkpoint{out.run.sup_series.back().t, y});
    }

    if (mon.violated) {
        out.exit_info.s_exit = mon.s_exit;
        out.exit_info.exit_mode = mon.mode;
    } else {
        const double t_last = out.run.sup_series.empty() ? 0.0 : out.run.sup_series.back().t;
        const double remaining = std::max(prm.t_blowup - t_last, 1e-300);
        out.exit_info.s_exit = -std::log(remaining);
        out.exit_info.exit_mode = ExitMode::horizon;
    }
    return out;
}

ShootingResult exit_time(const InitialDataParams& prm, const Grid& grid,
                         const ControlRegion& region, const AuxRunConfig& cfg) {
    return run_auxiliary_monitored(prm, grid, region, cfg, true).exit_info;
}

namespace {

/// Candidate ordering: later exit wins; among equals, smaller worst mode
/// ratio, then the candidate closer to the symmetric line, then
/// lexicographic (d0, d1). Total and deterministic.
bool better_candidate(const ShootingResult& a, const ShootingResult& b) {
    if (a.s_exit != b.s_exit) return a.s_exit > b.s_exit;
    if (a.worst_mode_ratio != b.worst_mode_ratio) {
        return a.worst_mode_ratio < b.worst_mode_ratio;
    }
    if (std::fabs(a.d1_star) != std::fabs(b.d1_star)) {
        return std::fabs(a.d1_star) < std::fabs(b.d1_star);
    }
    if (a.d0_star != b.d0_star) return a.d0_star < b.d0_star;
    return a.d1_star < b.d1_star;
}

}  // namespace

std::pair<double, double> initial_modes(const InitialDataParams& prm, const Grid& grid) {
    const ProfileParams profile = ProfileParams::for_exponent(prm.p);
    const ZGrid zg = ZGrid::for_coverage(prm.s0 + 1.0, prm.k0);
    const std::vector<double> y0 = candidate_initial_data(prm, grid);
    const SimilarityFrame frame(prm.a, prm.t_blowup, 0.0);
    const SimilaritySlice slice = to_similarity(grid, y0, frame, prm.p);
    const std::vector<double> w = localize_w(grid, slice, zg, prm.epsilon0);
    const std::vector<double> q = q_of_w(w, zg, prm.s0, profile);
    const SpectralDecomposition dec = project_modes(q, zg, prm.s0, prm.k0);
    return {dec.q0, dec.q1};
}

namespace {

// Root of the affine map d -> (q0, q1)(s0), clamped to the parameter box.
std::pair<double, double> affine_seed_center(const InitialDataParams& prm, const Grid& grid) {
    InitialDataParams p00 = prm, p10 = prm, p01 = prm;
    p00.d0 = 0.0;
    p00.d1 = 0.0;
    p10.d0 = 1.0;
    p10.d1 = 0.0;
    p01.d0 = 0.0;
    p01.d1 = 1.0;
    const auto [c0, c1] = initial_modes(p00, grid);
    const auto [a0, a1] = initial_modes(p10, grid);
    const auto [b0, b1] = initial_modes(p01, grid);
    const double j00 = a0 - c0, j01 = b0 - c0;
    const double j10 = a1 - c1, j11 = b1 - c1;
    const double det = j00 * j11 - j01 * j10;
    if (std::fabs(det) < 1e-14 * (std::fabs(j00 * j11) + std::fabs(j01 * j10) + 1e-300)) {
        return {0.0, 0.0};
    }
    const double d0 = (-c0 * j11 + c1 * j01) / det;
    const double d1 = (-c1 * j00 + c0 * j10) / det;
    return {std::clamp(d0, -2.0, 2.0), std::clamp(d1, -2.0, 2.0)};
}

}  // namespace

namespace {

class ExitEvaluator {
  public:
    ExitEvaluator(const InitialDataParams& prm, const Grid& grid, const ControlRegion& region,
                  const AuxRunConfig& cfg, bool parallel)
        : prm_(prm), grid_(grid), region_(region), cfg_(cfg), parallel_(parallel) {}

    ShootingResult operator()(double d0, double d1) const {
        InitialDataParams local = prm_;
        local.d0 = std::clamp(d0, -2.0, 2.0);
        local.d1 = std::clamp(d1, -2.0, 2.0);
        ShootingResult r = exit_time(local, grid_, region_, cfg_);
        r.trace.clear();
        return r;
    }

    std::vector<ShootingResult> batch(const std::vector<std::pair<double, double>>& pts) const {
        std::vector<ShootingResult> out(pts.size());
        if (parallel_) {
            std::vector<std::future<ShootingResult>> futs;
            futs.reserve(pts.size());
            for (const auto& [d0, d1] : pts) {
                futs.push_back(std::async(std::launch::async, [this, d0 = d0, d1 = d1] {
                    return (*this)(d0, d1);
                }));
            }
            for (std::size_t i = 0; i < futs.size(); ++i) out[i] = futs[i].get();
        } else {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                out[i] = (*this)(pts[i].first, pts[i].second);
            }
        }
        return out;
    }

  private:
    const InitialDataParams& prm_;
    const Grid& grid_;
    const ControlRegion& region_;
    const AuxRunConfig& cfg_;
    bool parallel_;
};

// Golden-section climb of the exit map along one axis. The exit map is
// unimodal along each mode direction (transverse crossing), so a coarse
// bracket followed by golden refinement is reliable.
ShootingResult line_search(const ExitEvaluator& eval, double fixed, bool vary_d0,
                           ShootingResult& best_ever) {
    auto point = [&](double v) {
        return vary_d0 ? eval(v, fixed) : eval(fixed, v);
    };

    // coarse bracket over the parameter box
    constexpr int kScan = 17;
    std::vector<std::pair<double, double>> pts;
    pts.reserve(kScan);
    for (int i = 0; i < kScan; ++i) {
        const double v = -2.0 + 4.0 * i / (kScan - 1);
        pts.push_back(vary_d0 ? std::make_pair(v, fixed) : std::make_pair(fixed, v));
    }
    const auto scans = eval.batch(pts);
    int best_idx = 0;
    for (int i = 1; i < kScan; ++i) {
        if (better_candidate(scans[i], scans[best_idx])) best_idx = i;
    }
    ShootingResult best = scans[best_idx];
    if (better_candidate(best, best_ever)) best_ever = best;

    const double step = 4.0 / (kScan - 1);
    const double center = -2.0 + best_idx * step;
    double lo = std::max(-2.0, center - step);
    double hi = std::min(2.0, center + step);

    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    auto both = eval.batch({vary_d0 ? std::make_pair(x1, fixed) : std::make_pair(fixed, x1),
                            vary_d0 ? std::make_pair(x2, fixed) : std::make_pair(fixed, x2)});
    ShootingResult r1 = both[0], r2 = both[1];
    for (int it = 0; it < 40 && (hi - lo) > 1e-13; ++it) {
        if (better_candidate(r1, r2)) {
            hi = x2;
            x2 = x1;
            r2 = r1;
            x1 = hi - kInvPhi * (hi - lo);
            r1 = point(x1);
        } else {
            lo = x1;
            x1 = x2;
            r1 = r2;
            x2 = lo + kInvPhi * (hi - lo);
            r2 = point(x2);
        }
        const ShootingResult& cand = better_candidate(r1, r2) ? r1 : r2;
        if (better_candidate(cand, best)) best = cand;
        if (better_candidate(cand, best_ever)) best_ever = cand;
    }
    return best;
}

}  // namespace

ShootingResult search_dt(const InitialDataParams& prm, const Grid& grid,
                         const ControlRegion& region, const AuxRunConfig& cfg,
                         const SearchOptions& opt) {
    if (opt.budget < 1) throw ConfigError("search_dt: need budget >= 1");

    const ExitEvaluator eval(prm, grid, region, cfg, opt.parallel);

    double c0 = opt.center_d0;
    double c1 = opt.center_d1;
    if (opt.affine_seed) {
        const auto seed = affine_seed_center(prm, grid);
        c0 = seed.first;
        c1 = seed.second;
    }

    ShootingResult best = eval(c0, c1);
    ShootingResult best_ever = best;

    // Coordinate climbs: the fast mode direction first, then the slow one,
    // twice. Each climb brackets over the box and refines by golden section.
    if (opt.affine_seed) {
        for (int pass = 0; pass < 2; ++pass) {
            const ShootingResult r0 = line_search(eval, c1, true, best_ever);
            c0 = r0.d0_star;
            const ShootingResult r1 = line_search(eval, c0, false, best_ever);
            c1 = r1.d1_star;
        }
        c0 = best_ever.d0_star;
        c1 = best_ever.d1_star;
    }

    // Stencil polish: 3x3 rounds around the incumbent; the radius halves
    // whenever the center wins the round.
    double radius = opt.radius;
    for (int round = 0; round < opt.budget && radius > 1e-14; ++round) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(9);
        for (int i = -1; i <= 1; ++i) {
            for (int j = -1; j <= 1; ++j) {
                pts.emplace_back(std::clamp(c0 + i * radius, -2.0, 2.0),
                                 std::clamp(c1 + j * radius, -2.0, 2.0));
            }
        }
        const auto results = eval.batch(pts);
        int best_idx = 0;
        for (int idx = 1; idx < 9; ++idx) {
            if (better_candidate(results[idx], results[best_idx])) best_idx = idx;
        }
        if (better_candidate(results[best_idx], best_ever)) best_ever = results[best_idx];
        const bool centered =
            results[best_idx].d0_star == pts[4].first && results[best_idx].d1_star == pts[4].second;
        c0 = results[best_idx].d0_star;
        c1 = results[best_idx].d1_star;
        if (centered) radius *= 0.5;
    }

    // Re-run the winner to restore its trace.
    InitialDataParams final_prm = prm;
    final_prm.d0 = best_ever.d0_star;
    final_prm.d1 = best_ever.d1_star;
    ShootingResult final_result = exit_time(final_prm, grid, region, cfg);
    final_result.search_failed = final_result.s_exit < prm.s0 + 1.0;
    return final_result;
}

}  // namespace blowctl
