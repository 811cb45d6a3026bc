#include <doctest.h>

#include <cmath>
#include <vector>

#include "blowctl/quadrature.hpp"
#include "blowctl/spectral.hpp"

using namespace blowctl;

namespace {

// Quadrature oracle for rho-weighted inner products on [-12, 12].
double rho_inner(const ZGrid& zg, const std::vector<double>& f, const std::vector<double>& g) {
    std::vector<double> prod(zg.nodes.size()), rho(zg.nodes.size());
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
        prod[i] = f[i] * g[i];
        rho[i] = gaussian_weight(zg.nodes[i]);
    }
    return weighted_quadrature(prod, rho, zg.dz);
}

std::vector<double> sample_hermite(const ZGrid& zg, int m) {
    std::vector<double> out(zg.nodes.size());
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) out[i] = hermite_h(m, zg.nodes[i]);
    return out;
}

double factorial2m(int m) {
    double v = 1.0;
    for (int k = 1; k <= m; ++k) v *= 2.0 * k;
    return v;  // 2^m m!
}

}  // namespace

TEST_CASE("profile constants and values") {
    const auto p2 = ProfileParams::for_exponent(2.0);
    CHECK(p2.kappa == doctest::Approx(1.0));
    CHECK(p2.b == doctest::Approx(0.125));
    CHECK(profile_f(0.0, p2) == doctest::Approx(p2.kappa));
    CHECK(profile_f(1.0, p2) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));

    const auto p3 = ProfileParams::for_exponent(3.0);
    CHECK(profile_f(0.0, p3) == doctest::Approx(p3.kappa));
    CHECK(profile_f(2.0, p3) == doctest::Approx(std::pow(2.0 + 4.0 / 3.0, -0.5)).epsilon(1e-12));

    for (double p : {2.0, 3.0, 5.0}) {
        const auto prm = ProfileParams::for_exponent(p);
        CHECK(profile_f(0.0, prm) == doctest::Approx(prm.kappa).epsilon(1e-14));
        // even, decreasing in |eta|
        CHECK(profile_f(1.3, prm) == doctest::Approx(profile_f(-1.3, prm)));
        CHECK(profile_f(2.0, prm) < profile_f(1.0, prm));
    }
}

TEST_CASE("profile derivative identity against finite differences") {
    for (double p : {2.0, 3.0, 5.0}) {
        const auto prm = ProfileParams::for_exponent(p);
        for (double eta : {-2.7, -1.0, -0.3, 0.4, 1.1, 3.5}) {
            const double h = 1e-6;
            const double fd =
                (profile_f(eta + h, prm) - profile_f(eta - h, prm)) / (2.0 * h);
            const double analytic = profile_f_deriv(eta, prm);
            CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("corrected profile phi") {
    const auto prm = ProfileParams::for_exponent(2.0);
    CHECK(phi(0.0, 10.0, prm) == doctest::Approx(1.025).epsilon(1e-14));
    CHECK(phi(0.0, 1e8, prm) == doctest::Approx(prm.kappa).epsilon(1e-7));
    const double s = 25.0;
    CHECK(phi(std::sqrt(s), s, prm) ==
          doctest::Approx(8.0 / 9.0 + 1.0 / (4.0 * s)).epsilon(1e-13));
    CHECK_THROWS_AS(phi(0.0, 1.0, prm), DomainError);
}

TEST_CASE("potential vanishes at the fixed point and matches values") {
    const auto prm = ProfileParams::for_exponent(2.0);
    CHECK(potential_v(0.0, 1e9, prm) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(potential_v(0.0, 10.0, prm) == doctest::Approx(0.05).epsilon(1e-12));
    // |z| -> infinity limit at fixed s: phi -> kappa/(2 p s)
    const double s = 50.0;
    const double tail = prm.p * std::pow(prm.kappa / (2.0 * prm.p * s), prm.p - 1.0) -
                        prm.p / (prm.p - 1.0);
    CHECK(potential_v(1e8, s, prm) == doctest::Approx(tail).epsilon(1e-6));
}

TEST_CASE("gaussian weight") {
    CHECK(gaussian_weight(0.0) == doctest::Approx(0.28209479177387814).epsilon(1e-12));
    CHECK(gaussian_weight(2.0) == doctest::Approx(gaussian_weight(-2.0)));
}

TEST_CASE("hermite eigenfunctions: closed forms") {
    CHECK(hermite_h(0, 3.7) == 1.0);
    CHECK(hermite_h(1, 3.7) == doctest::Approx(3.7));
    CHECK(hermite_h(2, 0.0) == doctest::Approx(-2.0));
    CHECK(hermite_h(3, 1.0) == doctest::Approx(-5.0));
    CHECK(hermite_h(4, 1.0) == doctest::Approx(1.0 - 12.0 + 12.0));
}

TEST_CASE("dual functions and biorthogonality by quadrature") {
    CHECK(dual_k(0, 123.0) == 1.0);
    CHECK(dual_k(2, 3.0) == doctest::Approx((9.0 - 2.0) / 8.0));

    const ZGrid zg = ZGrid::uniform(12.0, 0.005);
    for (int n = 0; n <= 4; ++n) {
        for (int m = 0; m <= 4; ++m) {
            std::vector<double> kn(zg.nodes.size());
            for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
                kn[i] = dual_k(n, zg.nodes[i]);
            }
            const double ip = rho_inner(zg, kn, sample_hermite(zg, m));
            CHECK(ip == doctest::Approx(n == m ? 1.0 : 0.0).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("orthogonality matrix equals diag(2^n n!) within 1e-6") {
    const ZGrid zg = ZGrid::uniform(12.0, 0.006);  // 4001 points
    for (int n = 0; n <= 4; ++n) {
        const auto hn = sample_hermite(zg, n);
        for (int m = 0; m <= 4; ++m) {
            const double ip = rho_inner(zg, hn, sample_hermite(zg, m));
            const double expected = n == m ? factorial2m(n) : 0.0;
            CHECK(ip == doctest::Approx(expected).epsilon(1e-6).scale(factorial2m(n)));
        }
    }
}

TEST_CASE("discrete eigen-relation of the drift operator") {
    // L = d_zz - (z/2) d_z + 1 with central differences reproduces
    // (1 - m/2) h_m within 1e-3 relative on |z| <= 5 for m <= 3.
    const double hz = 0.005;
    const ZGrid zg = ZGrid::uniform(8.0, hz);
    for (int m = 0; m <= 3; ++m) {
        const auto hm = sample_hermite(zg, m);
        const double eig = 1.0 - 0.5 * m;
        double worst = 0.0;
        double scale = 0.0;
        for (std::size_t i = 1; i + 1 < zg.nodes.size(); ++i) {
            const double z = zg.nodes[i];
            if (std::fabs(z) > 5.0) continue;
            const double dzz = (hm[i - 1] - 2.0 * hm[i] + hm[i + 1]) / (hz * hz);
            const double dz = (hm[i + 1] - hm[i - 1]) / (2.0 * hz);
            const double val = dzz - 0.5 * z * dz + hm[i];
            worst = std::max(worst, std::fabs(val - eig * hm[i]));
            scale = std::max(scale, std::fabs(eig * hm[i]));
        }
        if (m == 2) scale = std::max(scale, 1.0);  // eigenvalue 0: absolute check
        CHECK(worst <= 1e-3 * std::max(scale, 1.0));
    }
}

TEST_CASE("chi1 plateau and support") {
    const double s = 9.0;
    const double k0 = 2.0;
    const double edge = k0 * std::sqrt(s);
    CHECK(cutoff_chi1(0.5 * edge, s, k0) == 1.0);
    CHECK(cutoff_chi1(3.0 * edge, s, k0) == 0.0);
    const double mid = cutoff_chi1(1.5 * edge, s, k0);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
}

TEST_CASE("project_modes: zero field") {
    const ZGrid zg = ZGrid::for_coverage(9.0, 1.0);
    std::vector<double> q(zg.nodes.size(), 0.0);
    const auto dec = project_modes(q, zg, 9.0, 1.0);
    CHECK(dec.q0 == 0.0);
    CHECK(dec.q1 == 0.0);
    CHECK(dec.q2 == 0.0);
    CHECK(linf_norm(dec.q_minus) == 0.0);
    CHECK(linf_norm(dec.q_e) == 0.0);
}

TEST_CASE("project_modes: orthogonality oracle on h1 and h3") {
    // s large enough that chi1 is 1 on the Gaussian bulk
    const double s = 144.0;
    const double k0 = 1.0;
    const ZGrid zg = ZGrid::for_coverage(s, k0);
    std::vector<double> q(zg.nodes.size());

    for (std::size_t i = 0; i < zg.nodes.size(); ++i) q[i] = hermite_h(1, zg.nodes[i]);
    auto dec = project_modes(q, zg, s, k0);
    CHECK(dec.q1 == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(std::fabs(dec.q0) < 1e-4);
    CHECK(std::fabs(dec.q2) < 1e-4);

    for (std::size_t i = 0; i < zg.nodes.size(); ++i) q[i] = hermite_h(3, zg.nodes[i]);
    dec = project_modes(q, zg, s, k0);
    CHECK(std::fabs(dec.q0) < 1e-4);
    CHECK(std::fabs(dec.q1) < 1e-4);
    CHECK(std::fabs(dec.q2) < 1e-4);
    // q_minus is essentially chi1 h3
    for (std::size_t i = 0; i < zg.nodes.size(); i += 50) {
        const double z = zg.nodes[i];
        const double expected = cutoff_chi1(z, s, k0) * hermite_h(3, z);
        CHECK(dec.q_minus[i] ==
              doctest::Approx(expected).epsilon(5e-4).scale(1.0 + std::fabs(expected)));
    }
}

TEST_CASE("project_modes reconstruction is exact pointwise") {
    const double s = 16.0;
    const double k0 = 1.5;
    const ZGrid zg = ZGrid::for_coverage(s, k0);
    std::vector<double> q(zg.nodes.size());
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
        const double z = zg.nodes[i];
        q[i] = std::sin(1.3 * z) * std::exp(-0.01 * z * z) + 0.2;
    }
    const auto dec = project_modes(q, zg, s, k0);
    double worst = 0.0;
    for (std::size_t i = 0; i < zg.nodes.size(); ++i) {
        const double z = zg.nodes[i];
        const double recon = dec.q0 + dec.q1 * z + dec.q2 * (z * z - 2.0) + dec.q_minus[i];
        worst = std::max(worst, std::fabs(cutoff_chi1(z, s, k0) * q[i] - recon));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("project_modes coverage error") {
    const ZGrid zg = ZGrid::uniform(12.0, 0.01);
    std::vector<double> q(zg.nodes.size(), 0.0);
    CHECK_THROWS_AS(project_modes(q, zg, 100.0, 2.0), CoverageError);
}

TEST_CASE("shrinking membership: zero decomposition passes with full slack") {
    const double s = 10.0;
    const ZGrid zg = ZGrid::for_coverage(s, 1.0);
    std::vector<double> q(zg.nodes.size(), 0.0);
    const auto dec = project_modes(q, zg, s, 1.0);
    ShrinkingSetParams prm;
    prm.k0 = 1.0;
    prm.a_bound = 20.0;
    const auto rep = shrinking_membership(dec, zg, prm, s);
    CHECK(rep.all_pass());
    CHECK(rep.q0.ratio() == 0.0);
    CHECK(rep.q_e.ratio() == 0.0);
}

TEST_CASE("shrinking membership: constructed violation of the first bound") {
    const double s = 10.0;
    const double a_bound = 20.0;
    const ZGrid zg = ZGrid::for_coverage(s, 1.0);
    SpectralDecomposition dec;
    dec.s = s;
    dec.k0 = 1.0;
    dec.q0 = 2.0 * a_bound / (s * s);
    dec.q_minus.assign(zg.nodes.size(), 0.0);
    dec.q_e.assign(zg.nodes.size(), 0.0);
    ShrinkingSetParams prm;
    prm.k0 = 1.0;
    prm.a_bound = a_bound;
    const auto rep = shrinking_membership(dec, zg, prm, s);
    CHECK_FALSE(rep.q0.pass);
    CHECK(rep.q1.pass);
    CHECK(rep.q2.pass);
    CHECK(rep.q_minus.pass);
    CHECK(rep.q_e.pass);
    CHECK(rep.q0.ratio() == doctest::Approx(2.0));
}

TEST_CASE("nonlinear remainder is quadratic at the profile") {
    // |phi+q|^{p-1}(phi+q) - phi^p - p phi^{p-1} q has no linear part:
    // dividing by q^2 converges to the half second derivative of the power.
    const auto prm = ProfileParams::for_exponent(3.0);
    const double z = 1.2, s = 9.0;
    const double ph = phi(z, s, prm);
    const double curvature = 0.5 * prm.p * (prm.p - 1.0) * std::pow(ph, prm.p - 2.0);
    double prev_err = 1e300;
    for (double q : {1e-2, 1e-3, 1e-4}) {
        const double ratio = nonlinear_remainder(z, s, q, prm) / (q * q);
        const double err = std::fabs(ratio - curvature);
        CHECK(err < prev_err + 1e-12);
        prev_err = err;
    }
    CHECK(prev_err <= 1e-2 * curvature);
}

TEST_CASE("profile residual stays small for large s") {
    const auto prm = ProfileParams::for_exponent(2.0);
    // The corrected profile is an approximate steady state of the rescaled
    // flow on the parabolic core, with residual decaying in s.
    for (double s : {25.0, 100.0, 400.0}) {
        double worst = 0.0;
        for (double z = -2.0 * std::sqrt(s); z <= 2.0 * std::sqrt(s); z += 0.5) {
            worst = std::max(worst, std::fabs(profile_residual(z, s, prm)));
        }
        CHECK(worst <= 5.0 / s);
    }
}
