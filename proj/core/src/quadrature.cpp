#include "blowctl/quadrature.hpp"

#include <cmath>

#include "blowctl/errors.hpp"

namespace blowctl {

double weighted_quadrature(std::span<const double> values, std::span<const double> weights,
                           double h) {
    if (values.size() != weights.size()) {
        throw DimensionError("weighted_quadrature: values/weights length mismatch");
    }
    if (values.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += values[i] * weights[i];
    }
    acc -= 0.5 * (values.front() * weights.front() + values.back() * weights.back());
    return acc * h;
}

double l2_norm_h(std::span<const double> v, double h) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(h * acc);
}

double linf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace blowctl
