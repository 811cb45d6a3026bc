#include "blowctl/similarity.hpp"

#include <cmath>
#include <string>

#include "blowctl/cutoff.hpp"

namespace blowctl {

SimilarityFrame::SimilarityFrame(double a_, double t_blowup_, double t_)
    : a(a_), t_blowup(t_blowup_), t(t_) {
    if (!(t < t_blowup)) {
        throw FrameError("SimilarityFrame: need t < T (t = " + std::to_string(t) +
                         ", T = " + std::to_string(t_blowup) + ")");
    }
}

double SimilarityFrame::s() const { return -std::log(t_blowup - t); }

double SimilarityFrame::scale() const { return 1.0 / std::sqrt(t_blowup - t); }

SimilaritySlice to_similarity(const Grid& grid, std::span<const double> y,
                              const SimilarityFrame& frame, double p) {
    if (y.size() != static_cast<std::size_t>(grid.n)) {
        throw DimensionError("to_similarity: field length does not match grid");
    }
    const double remaining = frame.t_blowup - frame.t;
    const double amp = std::pow(remaining, 1.0 / (p - 1.0));
    const double scale = frame.scale();

    SimilaritySlice slice{frame, {}, {}};
    slice.z.resize(grid.n);
    slice.w.resize(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        slice.z[i] = scale * (grid.nodes[i] - frame.a);
        slice.w[i] = amp * y[i];
    }
    return slice;
}

std::vector<double> from_similarity(std::span<const double> w_values, const Grid& grid,
                                    const SimilarityFrame& frame, double p) {
    if (w_values.size() != static_cast<std::size_t>(grid.n)) {
        throw DimensionError("from_similarity: field length does not match grid");
    }
    const double remaining = frame.t_blowup - frame.t;
    const double amp = std::pow(remaining, -1.0 / (p - 1.0));
    std::vector<double> y(grid.n);
    for (int i = 0; i < grid.n; ++i) y[i] = amp * w_values[i];
    return y;
}

std::vector<double> localize_w(const Grid& grid, const SimilaritySlice& slice, const ZGrid& zg,
                               double epsilon0) {
    const double a = slice.frame.a;
    if (a - 2.0 * epsilon0 < grid.x_lo || a + 2.0 * epsilon0 > grid.x_hi) {
        throw GeometryError("localize_w: cutoff window (a +- 2 eps0) escapes the domain");
    }
    const double s = slice.frame.s();
    const double shrink = std::exp(-0.5 * s);  // e^{-s/2}

    std::vector<double> w(zg.nodes.size(), 0.0);
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
        const double z = zg.nodes[i];
        const double x = a + z * shrink;
        if (x <= grid.x_lo || x >= grid.x_hi) continue;
        const double cut = cutoff_chi0(z * shrink / epsilon0);
        if (cut == 0.0) continue;
        w[i] = cut * interp_field(grid, slice.w, x);
    }
    return w;
}

std::vector<double> q_of_w(std::span<const double> w, const ZGrid& zg, double s,
                           const ProfileParams& prm) {
    if (w.size() != zg.nodes.size()) {
        throw DimensionError("q_of_w: field length does not match z-grid");
    }
    std::vector<double> q(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        q[i] = w[i] - phi(zg.nodes[i], s, prm);
    }
    return q;
}

RecenterParams::RecenterParams(double t_cand, double a_cand, double t_hat, double a_hat,
                               double s0) {
    tau = (t_cand - t_hat) * std::exp(s0);
    alpha = (a_cand - a_hat) * std::exp(0.5 * s0);
    if (std::fabs(tau) > 1.0 / 16.0 || std::fabs(alpha) > 0.25) {
        throw RecenterError("RecenterParams: (tau, alpha) = (" + std::to_string(tau) + ", " +
                            std::to_string(alpha) + ") outside the validity box");
    }
    sigma0 = s0 - std::log1p(tau);
}

std::vector<double> recenter(const Grid& grid, std::span<const double> y,
                             std::span<const double> y_hat, double t_cand, double a_cand,
                             double t_hat, double a_hat, double s0, double epsilon0,
                             const ProfileParams& prm, const ZGrid& zg) {
    if (y.size() != static_cast<std::size_t>(grid.n) || y_hat.size() != y.size()) {
        throw DimensionError("recenter: field length does not match grid");
    }
    const RecenterParams rp(t_cand, a_cand, t_hat, a_hat, s0);
    const double sigma0 = rp.sigma0;
    const double root_1p_tau = std::sqrt(1.0 + rp.tau);
    const double jac_amp = std::pow(1.0 + rp.tau, 1.0 / (prm.p - 1.0));
    const double amp_s0 = std::exp(-s0 / (prm.p - 1.0));
    const double amp_sigma0 = std::exp(-sigma0 / (prm.p - 1.0));
    const double shrink_s0 = std::exp(-0.5 * s0);
    const double shrink_sigma0 = std::exp(-0.5 * sigma0);

    std::vector<double> psi(zg.nodes.size());
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
        const double z = zg.nodes[i];
        const double x_new = a_cand + z * shrink_sigma0;
        if (x_new <= grid.x_lo || x_new >= grid.x_hi) {
            psi[i] = -phi(z, sigma0, prm);
            continue;
        }
        const double zt = z * root_1p_tau + rp.alpha;
        const double x_base = a_hat + zt * shrink_s0;

        // Baseline localized field at (z_tilde, s0).
        const double chi_base = cutoff_chi0(zt * shrink_s0 / epsilon0);
        const double w_base = chi_base * amp_s0 * interp_field(grid, y_hat, x_base);

        // Perturbation of the data, rescaled and cut in the new frame.
        const double chi_new = cutoff_chi0(z * shrink_sigma0 / epsilon0);
        const double eps_term =
            amp_s0 * (interp_field(grid, y, x_base) - interp_field(grid, y_hat, x_base)) *
            chi_new;

        // Mismatch of the two cutoff frames carried by the baseline solution.
        const double frame_term =
            amp_sigma0 * interp_field(grid, y_hat, x_new) * (chi_new - chi_base);

        psi[i] = jac_amp * (w_base + eps_term) - phi(z, sigma0, prm) + frame_term;
    }
    return psi;
}

}  // namespace blowctl
