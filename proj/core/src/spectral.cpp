#include "blowctl/spectral.hpp"

#include <cmath>
#include <string>

#include "blowctl/errors.hpp"
#include "blowctl/quadrature.hpp"

namespace blowctl {

ZGrid ZGrid::uniform(double z_max, double dz) {
    if (!(z_max > 0.0) || !(dz > 0.0)) throw ConfigError("ZGrid: need z_max > 0, dz > 0");
    ZGrid zg;
    const int half = static_cast<int>(std::ceil(z_max / dz));
    zg.z_max = half * dz;
    zg.dz = dz;
    zg.nodes.resize(2 * half + 1);
    for (int i = 0; i <= 2 * half; ++i) {
        zg.nodes[i] = (i - half) * dz;
    }
    return zg;
}

ZGrid ZGrid::for_coverage(double s, double k0, double dz) {
    const double needed = 2.0 * k0 * std::sqrt(std::max(s, 0.0)) + 2.0;
    return uniform(std::max(12.0, needed), dz);
}

SpectralDecomposition project_modes(std::span<const double> q, const ZGrid& zg, double s,
                                    double k0) {
    const std::size_t n = zg.nodes.size();
    if (q.size() != n) throw DimensionError("project_modes: field length does not match z-grid");
    if (!(s > 0.0)) throw DomainError("project_modes: need s > 0");
    const double support = 2.0 * k0 * std::sqrt(s);
    if (zg.z_max < support + 2.0 - 1e-12) {
        throw CoverageError("project_modes: z-grid [-" + std::to_string(zg.z_max) +
                            ", ...] does not cover the localized support radius " +
                            std::to_string(support + 2.0));
    }

    SpectralDecomposition dec;
    dec.s = s;
    dec.k0 = k0;
    dec.q_minus.resize(n);
    dec.q_e.resize(n);

    static thread_local std::vector<double> qb;
    qb.assign(n, 0.0);

    // Single pass: trapezoid weights are uniform except the two endpoints,
    // which carry no rho-mass to machine precision at |z| >= 12 anyway.
    double qm[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double z = zg.nodes[i];
        const double c1 = cutoff_chi1(z, s, k0);
        qb[i] = c1 * q[i];
        dec.q_e[i] = (1.0 - c1) * q[i];
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        const double common = w * gaussian_weight(z) * qb[i];
        qm[0] += common;                          // k0 = 1
        qm[1] += common * (0.5 * z);              // k1 = z/2
        qm[2] += common * ((z * z - 2.0) / 8.0);  // k2 = (z^2-2)/8
    }
    for (double& m : qm) m *= zg.dz;
    dec.q0 = qm[0];
    dec.q1 = qm[1];
    dec.q2 = qm[2];

    for (std::size_t i = 0; i < n; ++i) {
        const double z = zg.nodes[i];
        dec.q_minus[i] = qb[i] - (qm[0] + qm[1] * z + qm[2] * (z * z - 2.0));
    }
    return dec;
}

ShrinkingReport shrinking_membership(const SpectralDecomposition& dec, const ZGrid& zg,
                                     const ShrinkingSetParams& prm, double s) {
    ShrinkingReport rep;
    const double a = prm.a_bound;
    const double s2 = s * s;

    auto check = [](double value, double bound) {
        BoundCheck c;
        c.value = value;
        c.bound = bound;
        c.pass = value <= bound;
        return c;
    };

    rep.q0 = check(std::fabs(dec.q0), a / s2);
    rep.q1 = check(std::fabs(dec.q1), a / s2);
    rep.q2 = check(std::fabs(dec.q2), a * a * std::log(s) / s2);

    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
        const double z = std::fabs(zg.nodes[i]);
        worst_ratio = std::max(worst_ratio, std::fabs(dec.q_minus[i]) / (1.0 + z * z * z));
    }
    rep.q_minus = check(worst_ratio, a / s2);
    rep.q_e = check(linf_norm(dec.q_e), a * a / std::sqrt(s));
    return rep;
}

}  // namespace blowctl
