#pragma once

#include <array>
#include <string>
#include <vector>

#include "blowctl/pde_sim.hpp"
#include "blowctl/similarity.hpp"
#include "blowctl/spectral.hpp"

namespace blowctl {

/// Parameters of the two-parameter initial-data family for the auxiliary
/// system: a localized profile at scale s0 plus an (d0 + d1 z) correction in
/// the inner region, both supported in the control region.
struct InitialDataParams {
    double a = 0.0;
    double t_blowup = 0.0;  // T = e^{-s0}, horizon of the auxiliary system
    double s0 = 0.0;
    double d0 = 0.0;
    double d1 = 0.0;
    double k0 = 1.0;
    double epsilon0 = 0.0;
    double a_bound = 1.0;  // the shrinking-set constant A
    double p = 2.0;

    static InitialDataParams for_scale(double a, double s0, double k0, double epsilon0,
                                       double a_bound, double p);
    void validate() const;
};

std::vector<double> candidate_initial_data(const InitialDataParams& prm, const Grid& grid);

enum class ExitMode { q0, q1, q2, q_minus, q_e, regular_region, horizon };

const char* exit_mode_name(ExitMode m);

struct ShootingResult {
    double d0_star = 0.0;
    double d1_star = 0.0;
    double s_exit = 0.0;
    ExitMode exit_mode = ExitMode::horizon;
    std::vector<std::array<double, 3>> trace;  // (s, q0 s^2, q1 s^2)
    double worst_mode_ratio = 0.0;  // max over steps of |q_m| s^2 / A, m = 0, 1
    bool search_failed = false;
};

/// One row of the shrinking-set monitor.
struct MembershipRow {
    double s = 0.0;
    ShrinkingReport report;
    bool region_ok = true;
    double region_max = 0.0;  // max |y| outside |x - a| >= mu eps0
};

struct AuxRunConfig {
    SimOptions opts;
    double mu = 0.5;
    double eta0 = 1.0;
};

struct AuxRunOutput {
    RunResult run;
    std::vector<MembershipRow> membership;
    ShootingResult exit_info;
};

/// Runs the auxiliary system from the candidate data with the shrinking-set
/// monitor evaluated at every accepted step. With stop_at_violation the run
/// ends at the first violated bound (the exit-time map); otherwise it runs to
/// the numerical floor and reports every row.
AuxRunOutput run_auxiliary_monitored(const InitialDataParams& prm, const Grid& grid,
                                     const ControlRegion& region, const AuxRunConfig& cfg,
                                     bool stop_at_violation);

/// Exit-time map of the shooting problem.
ShootingResult exit_time(const InitialDataParams& prm, const Grid& grid,
                         const ControlRegion& region, const AuxRunConfig& cfg);

struct SearchOptions {
    double center_d0 = 0.0;
    double center_d1 = 0.0;
    double radius = 0.5;
    int budget = 18;  // stencil rounds; the radius halves on centered rounds
    bool parallel = true;
    bool affine_seed = true;  // start from the root of the data-to-mode map
};

/// Initial mode coordinates (q0, q1)(s0) of the candidate data. The map
/// d -> (q0, q1)(s0) is exactly affine in (d0, d1).
std::pair<double, double> initial_modes(const InitialDataParams& prm, const Grid& grid);

/// Stencil search for the (d0, d1) with the latest exit. Each round evaluates
/// a 3x3 stencil; the winner becomes the next center, and the radius halves
/// whenever the center itself wins. With affine_seed the start center is the
/// root of the (exact) affine map d -> (q0, q1)(s0). Candidates are ordered
/// by (s_exit, smaller worst mode ratio, lexicographic d), which makes the
/// merge deterministic under concurrent evaluation.
ShootingResult search_dt(const InitialDataParams& prm, const Grid& grid,
                         const ControlRegion& region, const AuxRunConfig& cfg,
                         const SearchOptions& opt);

}  // namespace blowctl
