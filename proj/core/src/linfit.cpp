#include "blowctl/linfit.hpp"

#include <cmath>

#include "blowctl/errors.hpp"

namespace blowctl {

LineFit fit_line(std::span<const double> t, std::span<const double> v) {
    if (t.size() != v.size()) throw DimensionError("fit_line: length mismatch");
    const std::size_t n = t.size();
    if (n < 2) throw DimensionError("fit_line: need at least 2 samples");

    // Center t for conditioning.
    double t_mean = 0.0, v_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t_mean += t[i];
        v_mean += v[i];
    }
    t_mean /= n;
    v_mean /= n;

    double stt = 0.0, stv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = t[i] - t_mean;
        stt += dt * dt;
        stv += dt * (v[i] - v_mean);
    }
    if (stt == 0.0) throw DimensionError("fit_line: all abscissae equal");

    LineFit fit;
    fit.slope = stv / stt;
    fit.intercept = v_mean - fit.slope * t_mean;

    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) vmax = std::max(vmax, std::fabs(v[i]));
    if (vmax == 0.0) vmax = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::fabs(fit.intercept + fit.slope * t[i] - v[i]) / vmax;
        fit.max_rel_residual = std::max(fit.max_rel_residual, r);
    }
    return fit;
}

}  // namespace blowctl
