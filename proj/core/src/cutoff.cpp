#include "blowctl/cutoff.hpp"

#include <cmath>

namespace blowctl {

namespace {
double bump_g(double r) { return r > 0.0 ? std::exp(-1.0 / r) : 0.0; }
}  // namespace

double cutoff_chi0(double xi) {
    const double a = std::fabs(xi);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    const double g_out = bump_g(2.0 - a);
    const double g_in = bump_g(a - 1.0);
    return g_out / (g_out + g_in);
}

}  // namespace blowctl
