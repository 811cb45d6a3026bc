#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blowctl/grid.hpp"
#include "blowctl/linfit.hpp"
#include "blowctl/riccati.hpp"

namespace blowctl {

/// Timing of the three control phases: steering on [0, T - T1 - eps_hat),
/// free flow on [T - T1 - eps_hat, +eps_hat1), localized nonlinear feedback
/// afterwards until blowup.
struct PhasePlan {
    double t_total = 0.0;    // T, target blowup time
    double t1 = 0.0;         // auxiliary horizon, 0 < T1 < T/2
    double eps_hat = 0.0;
    double eps_hat1 = 0.0;
    double p = 2.0;
    double floor_eps = 1e-6;

    void validate() const;
    double steering_end() const { return t_total - t1 - eps_hat; }
    double smoothing_end() const { return steering_end() + eps_hat1; }
};

enum class PhaseKind { riccati, zero, nonlinear };

const char* phase_name(PhaseKind k);

struct SupSample {
    double t = 0.0;
    double sup = 0.0;
    double argmax_x = 0.0;
};

struct Checkpoint {
    double t = 0.0;
    std::vector<double> y;
};

struct PhaseLogEntry {
    PhaseKind phase{};
    double t_begin = 0.0;
    double t_end = 0.0;
    long steps = 0;
    bool ok = true;
    std::string note;
};

struct BlowupEstimate {
    bool detected = false;
    double t_star = 0.0;
    double a_star = 0.0;
    double kappa_hat = 0.0;
    double residual = 0.0;
};

struct RunResult {
    std::vector<Checkpoint> trajectory;
    std::vector<SupSample> sup_series;
    std::vector<PhaseLogEntry> phase_log;
    BlowupEstimate blowup;
    bool failed = false;
    std::string failure;
};

struct SimOptions {
    double base_dt = 1e-5;
    double safety = 0.05;            // reaction-resolution factor for adaptive steps
    double blowup_threshold = 1e5;   // sup level required before a fit is attempted
    double floor_eps = 1e-6;         // numerical floor on remaining time to blowup
    int checkpoint_stride = 8;       // trajectory cadence in accepted steps
    bool disable_diffusion = false;  // test hook: pure reaction ODE
};

/// One IMEX step: backward-Euler diffusion, explicit source.
/// Solves (I - dt Laplacian) y_next = y + dt * source.
void step_imex(const Grid& grid, std::span<const double> y, std::span<const double> source,
               double dt, std::span<double> y_next);

/// dt = min(base_dt, safety * ||y||_inf^{1-p}): at least 1/safety steps per
/// local doubling time of the reaction mode.
double adaptive_dt(std::span<const double> y, double base_dt, double p, double safety);

/// Invoked after every accepted step; returning false stops the phase.
using StepHook = std::function<bool(double t, std::span<const double> y, double dt)>;

struct PhaseContext {
    const Grid* grid = nullptr;
    const ControlRegion* region = nullptr;
    double p = 2.0;
    const RiccatiSolution* steering = nullptr;  // required for PhaseKind::riccati
    const FeedbackLaw* law = nullptr;           // required for PhaseKind::riccati
    SimOptions opts;
};

/// Integrates one phase on [t_begin, t_end), appending sup samples,
/// checkpoints and a phase-log entry to the accumulator. The nonlinear phase
/// additionally stops at the amplitude floor ||y||_inf >= ((p-1) floor)^(-1/(p-1)).
/// Throws nothing: failures are recorded in the accumulator and the entry.
void run_phase(const PhaseContext& ctx, PhaseKind kind, double t_begin, double t_end,
               std::vector<double>& y, RunResult& accum, const StepHook& hook = {});

/// Power-law fit of the sup series tail. Recovers the blowup time from the
/// linearized series sup^{1-p}, which is exactly linear in t for the model
/// sup = kappa_hat (T* - t)^{-1/(p-1)}; the blowup point is the parabolic
/// interpolation of the final argmax. Returns detected = false when the
/// threshold was never reached.
BlowupEstimate detect_blowup(std::span<const SupSample> sup_series, double p, double floor_eps,
                             double threshold = 1e5);

struct ThreePhaseInputs {
    const Grid* grid = nullptr;
    const ControlRegion* region = nullptr;
    PhasePlan plan;
    std::vector<double> y0;
    std::vector<double> target;  // steering target, supported in the region
    const RiccatiSolution* steering = nullptr;
    SimOptions opts;
    StepHook hook;  // optional, invoked in every phase
};

/// Executes the three phases in order and estimates (T*, a*).
RunResult run_three_phase(const ThreePhaseInputs& in);

}  // namespace blowctl
