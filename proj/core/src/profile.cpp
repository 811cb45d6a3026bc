#include "blowctl/profile.hpp"

#include <cmath>
#include <string>

#include "blowctl/cutoff.hpp"

namespace blowctl {

namespace {
// |y|^(p-1) y, the odd power of the nonlinearity.
double sign_pow(double y, double p) { return std::pow(std::fabs(y), p - 1.0) * y; }
}  // namespace

ProfileParams ProfileParams::for_exponent(double p) {
    if (!(p > 1.0)) throw ConfigError("ProfileParams: need p > 1, got " + std::to_string(p));
    ProfileParams prm;
    prm.p = p;
    prm.kappa = std::pow(p - 1.0, -1.0 / (p - 1.0));
    prm.b = (p - 1.0) * (p - 1.0) / (4.0 * p);
    return prm;
}

double profile_f(double eta, const ProfileParams& prm) {
    return std::pow(prm.p - 1.0 + prm.b * eta * eta, -1.0 / (prm.p - 1.0));
}

double profile_f_deriv(double eta, const ProfileParams& prm) {
    const double f = profile_f(eta, prm);
    return -(2.0 * prm.b * eta / (prm.p - 1.0)) * std::pow(f, prm.p);
}

double phi(double z, double s, const ProfileParams& prm) {
    if (!(s > 1.0)) throw DomainError("phi: need s > 1, got s = " + std::to_string(s));
    return profile_f(z / std::sqrt(s), prm) + prm.kappa / (2.0 * prm.p * s);
}

double potential_v(double z, double s, const ProfileParams& prm) {
    const double ph = phi(z, s, prm);
    return prm.p * std::pow(ph, prm.p - 1.0) - prm.p / (prm.p - 1.0);
}

double gaussian_weight(double z) {
    static const double inv_sqrt_4pi = 1.0 / std::sqrt(4.0 * M_PI);
    return std::exp(-0.25 * z * z) * inv_sqrt_4pi;
}

double hermite_h(int m, double z) {
    if (m < 0) throw DomainError("hermite_h: mode index must be >= 0");
    // h_{m+1} = z h_m - 2 m h_{m-1}
    double h_prev = 1.0;
    if (m == 0) return h_prev;
    double h_cur = z;
    for (int k = 1; k < m; ++k) {
        const double h_next = z * h_cur - 2.0 * k * h_prev;
        h_prev = h_cur;
        h_cur = h_next;
    }
    return h_cur;
}

double dual_k(int m, double z) {
    if (m < 0) throw DomainError("dual_k: mode index must be >= 0");
    double norm = 1.0;  // 2^m m!
    for (int k = 1; k <= m; ++k) norm *= 2.0 * k;
    return hermite_h(m, z) / norm;
}

double cutoff_chi1(double z, double s, double k0) {
    return cutoff_chi0(std::fabs(z) / (k0 * std::sqrt(s)));
}

double nonlinear_remainder(double z, double s, double q, const ProfileParams& prm) {
    const double ph = phi(z, s, prm);
    return sign_pow(ph + q, prm.p) - std::pow(ph, prm.p) -
           prm.p * std::pow(ph, prm.p - 1.0) * q;
}

double profile_residual(double z, double s, const ProfileParams& prm) {
    if (!(s > 1.0)) throw DomainError("profile_residual: need s > 1");
    const double eta = z / std::sqrt(s);
    const double f = profile_f(eta, prm);
    const double fp = profile_f_deriv(eta, prm);
    // f'' from differentiating f' = -(2 b eta/(p-1)) f^p
    const double fpp = -(2.0 * prm.b / (prm.p - 1.0)) *
                       (std::pow(f, prm.p) + eta * prm.p * std::pow(f, prm.p - 1.0) * fp);
    const double ph = phi(z, s, prm);
    const double phi_s = -(eta / (2.0 * s)) * fp - prm.kappa / (2.0 * prm.p * s * s);
    return fpp / s - 0.5 * eta * fp - ph / (prm.p - 1.0) + std::pow(ph, prm.p) - phi_s;
}

}  // namespace blowctl
