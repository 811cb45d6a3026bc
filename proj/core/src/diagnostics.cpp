#include "blowctl/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "blowctl/linfit.hpp"

namespace blowctl {

ProfileErrorSample profile_error(const Grid& grid, std::span<const double> y, double t,
                                 double t_star, double a_star, double radius,
                                 const ProfileParams& prm) {
    ProfileErrorSample sample;
    sample.t = t;
    sample.radius = radius;
    sample.remaining = t_star - t;
    if (!(sample.remaining > 0.0) || sample.remaining >= 1.0) return sample;

    const double log_abs = std::fabs(std::log(sample.remaining));
    const double width = std::sqrt(sample.remaining * log_abs);
    const double amp = std::pow(sample.remaining, 1.0 / (prm.p - 1.0));

    double sup = 0.0;
    int count = 0;
    for (int i = 0; i < grid.n; ++i) {
        const double dx = grid.nodes[i] - a_star;
        if (std::fabs(dx) > radius * width) continue;
        const double err = std::fabs(amp * y[i] - profile_f(dx / width, prm));
        sup = std::max(sup, err);
        ++count;
    }
    sample.window_nodes = count;
    sample.resolved = count >= 8;
    sample.sup_err = sup;
    sample.scaled_err = sup * std::sqrt(log_abs);
    return sample;
}

double flatness_time_t0(double x0_offset, double t_blowup, double k0, double floor_eps) {
    const double d = std::fabs(x0_offset);
    auto edge = [&](double u) { return k0 * std::sqrt(u * std::fabs(std::log(u))); };
    double lo = floor_eps;
    double hi = t_blowup;
    if (d > edge(hi) || d < edge(lo)) {
        throw RangeError("flatness_time_t0: offset outside the reachable edge range");
    }
    // edge(u) is increasing in u for u < 1/e; bisect on u = T - t0.
    for (int it = 0; it < 200 && (hi - lo) > 1e-18 * t_blowup; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (edge(mid) < d) lo = mid;
        else hi = mid;
    }
    return t_blowup - 0.5 * (lo + hi);
}

double flatness_y_star(double x0_offset, const ProfileParams& prm) {
    const double d = std::fabs(x0_offset);
    const double p = prm.p;
    const double val = (p - 1.0) * (p - 1.0) * d * d / (8.0 * p * std::fabs(std::log(d)));
    return std::pow(val, -1.0 / (p - 1.0));
}

double flatness_u(double tau, double k0, const ProfileParams& prm) {
    return std::pow((prm.p - 1.0) * (1.0 - tau) + prm.b * k0 * k0, -1.0 / (prm.p - 1.0));
}

FlatnessResult flatness_check(const std::vector<Checkpoint>& trajectory, const Grid& grid,
                              double x0, double a, double t_blowup, double k0,
                              const ProfileParams& prm, double floor_eps) {
    const double offset = x0 - a;
    if (offset == 0.0) throw RangeError("flatness_check: x0 must differ from the center");

    FlatnessResult res;
    res.t0 = flatness_time_t0(offset, t_blowup, k0, floor_eps);
    res.y_star = flatness_y_star(offset, prm);
    const double u1 = flatness_u(1.0, k0, prm);

    for (const auto& cp : trajectory) {
        if (cp.t < res.t0 || cp.t > t_blowup - floor_eps) continue;
        const double tau = (cp.t - res.t0) / (t_blowup - res.t0);
        const double y_val = interp_field(grid, cp.y, x0);
        const double dev = std::fabs(y_val / res.y_star - flatness_u(tau, k0, prm) / u1);
        res.max_deviation = std::max(res.max_deviation, dev);
        ++res.samples;
    }
    if (res.samples == 0) {
        throw RangeError("flatness_check: no checkpoints at or after t0");
    }
    return res;
}

std::vector<RegionCheckRow> regular_region_bound(const std::vector<Checkpoint>& trajectory,
                                                 const Grid& grid, double a, double epsilon0,
                                                 double mu, double eta0) {
    std::vector<RegionCheckRow> rows;
    rows.reserve(trajectory.size());
    const double cut = mu * epsilon0;
    for (const auto& cp : trajectory) {
        RegionCheckRow row;
        row.t = cp.t;
        for (int i = 0; i < grid.n; ++i) {
            if (std::fabs(grid.nodes[i] - a) >= cut) {
                row.max_abs = std::max(row.max_abs, std::fabs(cp.y[i]));
            }
        }
        row.pass = row.max_abs <= eta0;
        row.slack = eta0 - row.max_abs;
        rows.push_back(row);
    }
    return rows;
}

FitQuality fit_quality(std::span<const SupSample> sup_series, double p) {
    double sup_max = 0.0;
    for (const auto& s : sup_series) sup_max = std::max(sup_max, s.sup);
    if (sup_max <= 0.0) throw SolverError("fit_quality: empty or zero series");

    const double sup_lo = sup_max / 10.0;
    std::vector<double> ts, us;
    for (std::size_t i = sup_series.size(); i-- > 0;) {
        if (sup_series[i].sup < sup_lo) break;
        ts.push_back(sup_series[i].t);
        us.push_back(std::pow(sup_series[i].sup, 1.0 - p));
    }
    std::reverse(ts.begin(), ts.end());
    std::reverse(us.begin(), us.end());
    if (ts.size() < 10) throw SolverError("fit_quality: fewer than 10 samples in the window");
    for (std::size_t i = 1; i < us.size(); ++i) {
        if (us[i] > us[i - 1]) {
            throw SolverError("fit_quality: fit window is not monotone");
        }
    }

    const LineFit fit = fit_line(ts, us);
    if (!(fit.slope < 0.0)) throw SolverError("fit_quality: non-decreasing linearized series");

    FitQuality q;
    q.t_star = -fit.intercept / fit.slope;
    q.kappa_hat = std::pow(-fit.slope, -1.0 / (p - 1.0));
    q.residual = fit.max_rel_residual;
    return q;
}

}  // namespace blowctl
