#pragma once

#include <span>
#include <vector>

#include "blowctl/errors.hpp"

namespace blowctl {

/// Uniform grid of interior points on (x_lo, x_hi) with implicit zero
/// Dirichlet boundary values. Fields live on the n interior nodes only.
struct Grid {
    double x_lo = 0.0;
    double x_hi = 1.0;
    int n = 0;                  // interior point count
    double h = 0.0;             // spacing (x_hi - x_lo) / (n + 1)
    std::vector<double> nodes;  // x_i = x_lo + (i+1) h, strictly increasing
};

Grid build_grid(double x_lo, double x_hi, int n);

/// Per-node indicator of the control interval [omega_lo, omega_hi].
struct ControlRegion {
    double omega_lo = 0.0;
    double omega_hi = 0.0;
    std::vector<double> mask;  // 1 where omega_lo <= x_i <= omega_hi, else 0
};

ControlRegion build_control_region(const Grid& grid, double omega_lo, double omega_hi);

/// Second-order central difference Laplacian with zero ghost values at both
/// boundaries. out[i] = (f[i-1] - 2 f[i] + f[i+1]) / h^2.
void laplacian_apply(const Grid& grid, std::span<const double> field, std::span<double> out);
std::vector<double> laplacian_apply(const Grid& grid, std::span<const double> field);

/// Solves (I - dt * Laplacian) x = rhs by the Thomas algorithm.
void solve_implicit_diffusion(const Grid& grid, double dt, std::span<const double> rhs,
                              std::span<double> x);

/// Linear interpolation of a grid field at physical coordinate x, zero
/// outside (x_lo, x_hi) (the Dirichlet extension).
double interp_field(const Grid& grid, std::span<const double> field, double x);

}  // namespace blowctl
