#pragma once

#include "blowctl/errors.hpp"

namespace blowctl {

/// Exponent p > 1 of the focusing nonlinearity and the two derived constants
/// appearing in every profile formula: kappa = f(0) and the parabolic shape
/// coefficient b = (p-1)^2 / (4p).
struct ProfileParams {
    double p;
    double kappa;
    double b;

    static ProfileParams for_exponent(double p);
};

/// Blowup profile f(eta) = (p - 1 + b eta^2)^(-1/(p-1)).
double profile_f(double eta, const ProfileParams& prm);

/// Analytic derivative f'(eta) = -(2 b eta / (p-1)) f(eta)^p.
double profile_f_deriv(double eta, const ProfileParams& prm);

/// Corrected profile phi(z, s) = f(z / sqrt(s)) + kappa / (2 p s), s > 1.
double phi(double z, double s, const ProfileParams& prm);

/// Potential V(z, s) = p phi^(p-1) - p/(p-1). Vanishes at the profile fixed
/// point as s -> infinity.
double potential_v(double z, double s, const ProfileParams& prm);

/// Gaussian weight rho(z) = exp(-z^2/4) / sqrt(4 pi).
double gaussian_weight(double z);

/// Eigenfunctions h_m of L = d^2/dz^2 - (z/2) d/dz + 1 in L^2_rho, normalized
/// so that h_0 = 1, h_1 = z, h_2 = z^2 - 2, with eigenvalue 1 - m/2.
double hermite_h(int m, double z);

/// Dual functions k_m = h_m / (2^m m!), biorthogonal to h_m against rho.
double dual_k(int m, double z);

/// Time-dependent inner cutoff chi1(z, s) = chi0(|z| / (K0 sqrt(s))).
double cutoff_chi1(double z, double s, double k0);

/// Quadratic-and-higher remainder of the nonlinearity around the profile:
/// |phi+q|^(p-1)(phi+q) - phi^p - p phi^(p-1) q. Diagnostic only.
double nonlinear_remainder(double z, double s, double q, const ProfileParams& prm);

/// Residual of the corrected profile in the self-similar equation:
/// phi_zz - (z/2) phi_z - phi/(p-1) + phi^p - phi_s. Diagnostic only.
double profile_residual(double z, double s, const ProfileParams& prm);

}  // namespace blowctl
