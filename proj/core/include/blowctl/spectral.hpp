#pragma once

#include <span>
#include <vector>

#include "blowctl/profile.hpp"

namespace blowctl {

/// Uniform symmetric grid [-z_max, z_max] used for every rho-weighted
/// integral and for the mode decomposition.
struct ZGrid {
    double z_max = 0.0;
    double dz = 0.0;
    std::vector<double> nodes;

    static ZGrid uniform(double z_max, double dz);
    /// Covers [-(2 K0 sqrt(s) + 2), 2 K0 sqrt(s) + 2] with floor z_max >= 12.
    static ZGrid for_coverage(double s, double k0, double dz = 0.01);
};

/// Components of a field against the eigensystem of L: the three nonnegative
/// modes, the cut remainder on modes >= 3, and the outer part.
struct SpectralDecomposition {
    double q0 = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    std::vector<double> q_minus;  // P_-(chi1 q) sampled on the z-grid
    std::vector<double> q_e;      // (1 - chi1) q sampled on the z-grid
    double s = 0.0;
    double k0 = 0.0;
};

/// Projects a field q on the z-grid: q_m = integral of k_m chi1 q rho,
/// q_minus = chi1 q - sum q_m h_m, q_e = (1 - chi1) q. The reconstruction
/// chi1 q = q0 h0 + q1 h1 + q2 h2 + q_minus is exact pointwise.
SpectralDecomposition project_modes(std::span<const double> q, const ZGrid& zg, double s,
                                    double k0);

struct ShrinkingSetParams {
    double k0 = 1.0;
    double epsilon0 = 0.0;
    double a_bound = 1.0;  // the constant A of the mode bounds
    double mu = 0.5;
    double eta0 = 1.0;
    double t_blowup = 0.0;  // target time of the run the bounds refer to
};

/// One monitored bound: measured value, its admissible bound, and the ratio
/// value/bound ("slack ratio", pass iff <= 1).
struct BoundCheck {
    double value = 0.0;
    double bound = 0.0;
    bool pass = true;
    double ratio() const { return bound > 0.0 ? value / bound : 0.0; }
};

struct ShrinkingReport {
    BoundCheck q0, q1, q2, q_minus, q_e;
    bool all_pass() const {
        return q0.pass && q1.pass && q2.pass && q_minus.pass && q_e.pass;
    }
};

/// Checks the five mode bounds of the shrinking set at similarity time s:
/// |q0|, |q1| <= A/s^2, |q2| <= A^2 log(s)/s^2, |q_minus| <= A(1+|z|^3)/s^2
/// pointwise, and the sup of |q_e| <= A^2 / sqrt(s). Never throws; reports.
ShrinkingReport shrinking_membership(const SpectralDecomposition& dec, const ZGrid& zg,
                                     const ShrinkingSetParams& prm, double s);

}  // namespace blowctl
