#pragma once

#include <span>
#include <vector>

#include "blowctl/grid.hpp"
#include "blowctl/pde_sim.hpp"
#include "blowctl/profile.hpp"

namespace blowctl {

/// Sup distance between the rescaled solution and the blowup profile over
/// the self-similar window |x - a*| <= R sqrt((T*-t) |log(T*-t)|).
struct ProfileErrorSample {
    double t = 0.0;
    double remaining = 0.0;   // T* - t
    double radius = 0.0;      // R
    double sup_err = 0.0;
    double scaled_err = 0.0;  // sup_err * sqrt(|log remaining|)
    int window_nodes = 0;
    bool resolved = false;    // at least 8 grid nodes in the window
};

ProfileErrorSample profile_error(const Grid& grid, std::span<const double> y, double t,
                                 double t_star, double a_star, double radius,
                                 const ProfileParams& prm);

/// Flatness of the solution in the intermediate region: at the time t0(x0)
/// when the profile edge K0 sqrt((T-t)|log(T-t)|) passes x0, and afterwards,
/// y(x0, t)/y*(x0) tracks U(tau)/U(1) with tau = (t - t0)/(T - t0).
struct FlatnessResult {
    double t0 = 0.0;
    double y_star = 0.0;
    double max_deviation = 0.0;
    int samples = 0;
};

double flatness_time_t0(double x0_offset, double t_blowup, double k0, double floor_eps);
double flatness_y_star(double x0_offset, const ProfileParams& prm);
double flatness_u(double tau, double k0, const ProfileParams& prm);

FlatnessResult flatness_check(const std::vector<Checkpoint>& trajectory, const Grid& grid,
                              double x0, double a, double t_blowup, double k0,
                              const ProfileParams& prm, double floor_eps);

/// Per-checkpoint bound |y| <= eta0 on the region |x - a| >= mu eps0.
struct RegionCheckRow {
    double t = 0.0;
    bool pass = true;
    double max_abs = 0.0;
    double slack = 0.0;  // eta0 - max_abs
};

std::vector<RegionCheckRow> regular_region_bound(const std::vector<Checkpoint>& trajectory,
                                                 const Grid& grid, double a, double epsilon0,
                                                 double mu, double eta0);

/// Power-law fit quality of a sup series: the linearized model
/// sup^{1-p} = kappa_hat^{1-p} (T* - t) fitted over a monotone window.
struct FitQuality {
    double kappa_hat = 0.0;
    double t_star = 0.0;
    double residual = 0.0;
};

FitQuality fit_quality(std::span<const SupSample> sup_series, double p);

}  // namespace blowctl
