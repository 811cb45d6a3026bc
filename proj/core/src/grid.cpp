#include "blowctl/grid.hpp"

#include <cmath>

namespace blowctl {

Grid build_grid(double x_lo, double x_hi, int n) {
    if (!(x_lo < x_hi)) {
        throw ConfigError("build_grid: degenerate interval [" + std::to_string(x_lo) + ", " +
                          std::to_string(x_hi) + "]");
    }
    if (n < 3) {
        throw ConfigError("build_grid: need n >= 3 interior points, got " + std::to_string(n));
    }
    Grid g;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    g.n = n;
    g.h = (x_hi - x_lo) / static_cast<double>(n + 1);
    g.nodes.resize(n);
    for (int i = 0; i < n; ++i) {
        g.nodes[i] = x_lo + (i + 1) * g.h;
    }
    return g;
}

ControlRegion build_control_region(const Grid& grid, double omega_lo, double omega_hi) {
    if (!(grid.x_lo < omega_lo && omega_lo < omega_hi && omega_hi < grid.x_hi)) {
        throw ConfigError("build_control_region: need x_lo < omega_lo < omega_hi < x_hi");
    }
    ControlRegion r;
    r.omega_lo = omega_lo;
    r.omega_hi = omega_hi;
    r.mask.resize(grid.n);
    int ones = 0;
    for (int i = 0; i < grid.n; ++i) {
        const bool in = omega_lo <= grid.nodes[i] && grid.nodes[i] <= omega_hi;
        r.mask[i] = in ? 1.0 : 0.0;
        ones += in;
    }
    if (ones == 0 || ones == grid.n) {
        throw ConfigError("build_control_region: mask must be neither empty nor the whole grid");
    }
    return r;
}

void laplacian_apply(const Grid& grid, std::span<const double> field, std::span<double> out) {
    const auto n = static_cast<std::size_t>(grid.n);
    if (field.size() != n || out.size() != n) {
        throw DimensionError("laplacian_apply: field length does not match grid");
    }
    const double inv_h2 = 1.0 / (grid.h * grid.h);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = (i == 0) ? 0.0 : field[i - 1];
        const double right = (i + 1 == n) ? 0.0 : field[i + 1];
        out[i] = (left - 2.0 * field[i] + right) * inv_h2;
    }
}

std::vector<double> laplacian_apply(const Grid& grid, std::span<const double> field) {
    std::vector<double> out(field.size());
    laplacian_apply(grid, field, out);
    return out;
}

void solve_implicit_diffusion(const Grid& grid, double dt, std::span<const double> rhs,
                              std::span<double> x) {
    const auto n = static_cast<std::size_t>(grid.n);
    if (rhs.size() != n || x.size() != n) {
        throw DimensionError("solve_implicit_diffusion: field length does not match grid");
    }
    const double r = dt / (grid.h * grid.h);
    const double diag = 1.0 + 2.0 * r;
    const double off = -r;

    // Thomas forward sweep. The system is strictly diagonally dominant for
    // dt > 0, so no pivoting is needed.
    static thread_local std::vector<double> c_prime, d_prime;
    c_prime.assign(n, 0.0);
    d_prime.assign(n, 0.0);

    c_prime[0] = off / diag;
    d_prime[0] = rhs[0] / diag;
    for (std::size_t i = 1; i < n; ++i) {
        const double m = diag - off * c_prime[i - 1];
        c_prime[i] = off / m;
        d_prime[i] = (rhs[i] - off * d_prime[i - 1]) / m;
    }
    x[n - 1] = d_prime[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    }
}

double interp_field(const Grid& grid, std::span<const double> field, double x) {
    if (field.size() != static_cast<std::size_t>(grid.n)) {
        throw DimensionError("interp_field: field length does not match grid");
    }
    if (x <= grid.x_lo || x >= grid.x_hi) return 0.0;
    // Node coordinates including the boundary ghost values y = 0 at x_lo, x_hi.
    const double u = (x - grid.x_lo) / grid.h;  // in (0, n+1)
    const int k = static_cast<int>(u);          // segment [k, k+1]
    const double w = u - k;
    const double y_left = (k == 0) ? 0.0 : field[k - 1];
    const double y_right = (k >= grid.n) ? 0.0 : field[k];
    return (1.0 - w) * y_left + w * y_right;
}

}  // namespace blowctl
