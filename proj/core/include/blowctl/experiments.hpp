#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blowctl/config.hpp"
#include "blowctl/diagnostics.hpp"
#include "blowctl/initial_data.hpp"
#include "blowctl/io.hpp"
#include "blowctl/riccati.hpp"

namespace blowctl {

/// Materialized configuration: grid, control region and derived parameters.
struct Problem {
    ExperimentConfig cfg;
    Grid grid;
    ControlRegion region;
    ProfileParams profile;

    InitialDataParams data_params() const;
    AuxRunConfig aux_config() const;
    PhasePlan plan() const;
    double steering_horizon() const { return cfg.t_total - cfg.t1; }
};

Problem make_problem(const ExperimentConfig& cfg);

/// Discrete substitute for the W^{2,inf} norm: max over nodes of the value,
/// the first and the second central difference (zero ghost values).
double w2inf_norm(const Grid& grid, std::span<const double> v);

/// Fixed smooth perturbation direction supported in the control region,
/// scaled to the baseline's w2inf norm so sweep sizes are relative.
std::vector<double> stability_bump(const Problem& prob, std::span<const double> baseline);

/// Nonincreasing (with 5% jitter) check over the given profile-error samples.
bool profile_trend_ok(const std::vector<ProfileErrorSample>& samples);

struct ConstructOutcome {
    bool ok = false;
    ShootingResult shooting;
    std::vector<double> ytilde0;
    AuxRunOutput aux;  // full monitored run at the selected (d0, d1)
};

ConstructOutcome run_construct(const Problem& prob);
ConstructOutcome cmd_construct(const ExperimentConfig& cfg,
                               const std::filesystem::path& out_dir);

struct ControlSummary {
    bool ok = false;
    bool detected = false;
    double t_star = 0.0;
    double a_star = 0.0;
    double time_err = 0.0;   // |T* - T|
    double point_err = 0.0;  // |a* - a|
    bool pass_time = false;
    bool pass_point = false;
    bool region_all_pass = false;
    std::string failure;
};

ControlSummary cmd_control(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                           const std::string& y0_source, bool no_construct,
                           const std::filesystem::path& cache_path = {});

struct StabilityRow {
    double sigma = 0.0;
    double pert_norm = 0.0;  // w2inf norm of the applied perturbation
    bool converged = false;
    double t_star = 0.0;
    double a_star = 0.0;
    double delta_t = 0.0;
    double delta_a = 0.0;
    bool profile_trend = false;
};

struct RecenterSlopes {
    std::vector<double> sizes;
    std::vector<double> tau_slopes;    // response of psi0 to tau
    std::vector<double> alpha_slopes;  // response of psi1 to alpha
    double tau_predicted = 0.0;        // kappa / (p - 1)
    double alpha_predicted = 0.0;      // -2 b kappa / ((p-1)^2 s0)
    double tau_max_rel_err = 0.0;
    double alpha_max_rel_err = 0.0;
    bool signs_ok = false;
};

struct StabilityReport {
    bool ok = false;
    std::vector<StabilityRow> rows;
    RecenterSlopes recenter;
};

StabilityReport cmd_stability(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                              const std::vector<double>& sizes);

/// Solves the steering kernel for the configured horizon and saves the cache.
void cmd_riccati_cache(const ExperimentConfig& cfg, const std::filesystem::path& cache_path);

/// Re-runs the trajectory diagnostics on stored control artifacts.
void cmd_diagnose(const ExperimentConfig& cfg, const std::filesystem::path& run_dir);

/// Recenter slope sweep used by cmd_stability and the acceptance suite.
RecenterSlopes recenter_slopes(const Problem& prob, std::span<const double> baseline,
                               const std::vector<double>& sizes);

/// Plain (unmonitored) auxiliary run from the given data to the floor.
RunResult run_auxiliary_plain(const Problem& prob, std::vector<double> y0);

}  // namespace blowctl
