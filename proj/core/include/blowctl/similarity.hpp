#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "blowctl/grid.hpp"
#include "blowctl/spectral.hpp"

namespace blowctl {

/// Change of variables y(x, t) <-> W(z, s) around center a and reference
/// blowup time T: z = (x - a) e^{s/2}, s = -log(T - t).
struct SimilarityFrame {
    double a;
    double t_blowup;  // T
    double t;         // physical time, t < T

    SimilarityFrame(double a_, double t_blowup_, double t_);

    double s() const;
    double scale() const;  // e^{s/2} = (T - t)^{-1/2}
};

/// W sampled on the image of the physical nodes, z_i = scale * (x_i - a).
struct SimilaritySlice {
    SimilarityFrame frame;
    std::vector<double> z;
    std::vector<double> w;
};

/// Exact pointwise rescaling W_i = (T - t)^{1/(p-1)} y_i, no interpolation.
SimilaritySlice to_similarity(const Grid& grid, std::span<const double> y,
                              const SimilarityFrame& frame, double p);

/// Exact inverse of to_similarity on the same grid.
std::vector<double> from_similarity(std::span<const double> w_values, const Grid& grid,
                                    const SimilarityFrame& frame, double p);

/// Localized similarity field: w = W * chi0(z e^{-s/2} / epsilon0) inside the
/// rescaled domain, zero outside, resampled by linear interpolation onto the
/// uniform z-grid. Requires (a - 2 eps0, a + 2 eps0) inside the domain.
std::vector<double> localize_w(const Grid& grid, const SimilaritySlice& slice, const ZGrid& zg,
                               double epsilon0);

/// Perturbation from the corrected profile: q = w - phi(., s).
std::vector<double> q_of_w(std::span<const double> w, const ZGrid& zg, double s,
                           const ProfileParams& prm);

/// Recentred-frame parameters for a candidate (T, a) near a baseline
/// (T_hat, a_hat) at reference log-time s0.
struct RecenterParams {
    double tau;     // (T - T_hat) e^{s0}
    double alpha;   // (a - a_hat) e^{s0/2}
    double sigma0;  // s0 - log(1 + tau)

    RecenterParams(double t_cand, double a_cand, double t_hat, double a_hat, double s0);
    double z_tilde(double z) const { return z * std::sqrt(1.0 + tau) + alpha; }
};

/// Evaluates the recentred perturbation q_{T,a}(., sigma0) on the z-grid from
/// two physical fields at the common time t0 = T_hat - e^{-s0}: the candidate
/// run y and the baseline y_hat. Inside the rescaled domain this composes the
/// baseline localized field at z_tilde with the difference term and the
/// profile mismatch; outside it equals -phi(., sigma0).
std::vector<double> recenter(const Grid& grid, std::span<const double> y,
                             std::span<const double> y_hat, double t_cand, double a_cand,
                             double t_hat, double a_hat, double s0, double epsilon0,
                             const ProfileParams& prm, const ZGrid& zg);

}  // namespace blowctl
