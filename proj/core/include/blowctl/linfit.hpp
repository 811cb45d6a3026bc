#pragma once

#include <span>

namespace blowctl {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_rel_residual = 0.0;  // max |fit - y| / max|y| over the samples
};

/// Ordinary least-squares line through (t_i, v_i). Requires >= 2 samples.
LineFit fit_line(std::span<const double> t, std::span<const double> v);

}  // namespace blowctl
