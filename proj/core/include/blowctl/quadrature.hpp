#pragma once

#include <span>

namespace blowctl {

/// Trapezoid rule for integral of values(z) * weights(z) dz on a uniform grid
/// with spacing h.
double weighted_quadrature(std::span<const double> values, std::span<const double> weights,
                           double h);

/// Discrete L2 norm with measure h: sqrt(h * sum v_i^2).
double l2_norm_h(std::span<const double> v, double h);

/// Max absolute value; 0 for an empty span.
double linf_norm(std::span<const double> v);

}  // namespace blowctl
