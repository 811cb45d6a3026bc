#include "blowctl/riccati.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "blowctl/quadrature.hpp"

namespace blowctl {

namespace {

// (1 - e^{mu sigma}) / (-mu) = expm1(mu sigma) / mu, the scalar
// variation-of-constants factor of the Gramian form; equals sigma in the
// limit mu -> 0.
double gram_factor(double mu, double sigma) {
    if (mu == 0.0) return sigma;
    return std::expm1(mu * sigma) / mu;
}

Eigen::MatrixXd gram_closed_form(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& m_gram,
                                 double sigma) {
    const int n = static_cast<int>(lambda.size());
    Eigen::MatrixXd g(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k <= j; ++k) {
            const double v = m_gram(j, k) * gram_factor(lambda(j) + lambda(k), sigma);
            g(j, k) = v;
            g(k, j) = v;
        }
    }
    return g;
}

}  // namespace

void dirichlet_laplacian_eigensystem(const Grid& grid, Eigen::VectorXd& eigenvalues,
                                     Eigen::MatrixXd& eigenvectors) {
    const int n = grid.n;
    const double denom = static_cast<double>(n + 1);
    eigenvalues.resize(n);
    eigenvectors.resize(n, n);
    const double norm = std::sqrt(2.0 / denom);
    for (int k = 0; k < n; ++k) {
        const double theta = (k + 1) * M_PI / (2.0 * denom);
        const double sin_theta = std::sin(theta);
        eigenvalues(k) = -4.0 / (grid.h * grid.h) * sin_theta * sin_theta;
        for (int i = 0; i < n; ++i) {
            eigenvectors(i, k) = norm * std::sin((i + 1) * (k + 1) * M_PI / denom);
        }
    }
}

Eigen::MatrixXd RiccatiSolution::gram_at(double t) const {
    if (knots.empty()) throw RangeError("RiccatiSolution: no knots stored");
    if (t < 0.0 || t > knots.back() + 1e-15 * horizon) {
        throw RangeError("RiccatiSolution: t = " + std::to_string(t) +
                         " outside the stored knot range [0, " + std::to_string(knots.back()) +
                         "]");
    }
    if (knots.size() == 1) return gram_at_knot.front();
    const double dt = knots[1] - knots[0];
    const auto k = std::min(knots.size() - 2, static_cast<std::size_t>(std::max(0.0, t / dt)));
    const double w = std::clamp((t - knots[k]) / dt, 0.0, 1.0);
    return (1.0 - w) * gram_at_knot[k] + w * gram_at_knot[k + 1];
}

Eigen::MatrixXd RiccatiSolution::q_at(double t) const {
    const double sigma = horizon - t;
    const double worst = -eigenvalues.minCoeff() * sigma;
    if (worst > 340.0) {
        throw NumericalError("RiccatiSolution::q_at: kernel entries exceed double range "
                             "(|lambda|_max * sigma = " + std::to_string(worst) + ")");
    }
    const Eigen::MatrixXd g = gram_at(t);
    Eigen::VectorXd d_inv = (-eigenvalues.array() * sigma).exp();  // e^{|lambda| sigma}
    Eigen::MatrixXd q_tilde = d_inv.asDiagonal() * g * d_inv.asDiagonal();
    return eigenvectors * q_tilde * eigenvectors.transpose();
}

RiccatiSolution solve_lyapunov_q(const Grid& grid, const ControlRegion& region, double horizon,
                                 int n_knots, double reg_eps) {
    if (!(horizon > 0.0)) throw ConfigError("solve_lyapunov_q: need horizon > 0");
    if (n_knots < 64) throw ConfigError("solve_lyapunov_q: need n_knots >= 64");
    if (region.mask.size() != static_cast<std::size_t>(grid.n)) {
        throw DimensionError("solve_lyapunov_q: region does not match grid");
    }

    RiccatiSolution sol;
    sol.horizon = horizon;
    sol.reg_eps = reg_eps >= 0.0 ? reg_eps : 1e-10 * horizon;

    dirichlet_laplacian_eigensystem(grid, sol.eigenvalues, sol.eigenvectors);

    Eigen::VectorXd mask = Eigen::Map<const Eigen::VectorXd>(region.mask.data(), grid.n);
    sol.control_gram = sol.eigenvectors.transpose() * mask.asDiagonal() * sol.eigenvectors;
    const double asym = (sol.control_gram - sol.control_gram.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8) {
        throw NumericalError("solve_lyapunov_q: control Gramian lost symmetry");
    }
    sol.control_gram = 0.5 * (sol.control_gram + sol.control_gram.transpose()).eval();

    sol.knots.resize(n_knots);
    sol.gram_at_knot.resize(n_knots);
    const double dt = horizon / n_knots;
    for (int k = 0; k < n_knots; ++k) {
        sol.knots[k] = k * dt;
        sol.gram_at_knot[k] = gram_closed_form(sol.eigenvalues, sol.control_gram,
                                               horizon - sol.knots[k]);
    }
    return sol;
}

void apply_feedback_gain(const RiccatiSolution& sol, const ControlRegion& region,
                         std::span<const double> error, double t, std::span<double> out) {
    const int n = sol.dim();
    if (error.size() != static_cast<std::size_t>(n) || out.size() != error.size()) {
        throw DimensionError("apply_feedback_gain: field length mismatch");
    }
    if (t < 0.0 || t >= sol.horizon) {
        throw RangeError("apply_feedback_gain: t = " + std::to_string(t) +
                         " outside the steering window [0, " + std::to_string(sol.horizon) +
                         ")");
    }
    const double sigma = sol.horizon - t;

    // Live spectral subspace: modes with |lambda| sigma <= theta. Beyond it
    // the kernel directions carry weight e^{2 lambda sigma} below double
    // precision, the gain contribution vanishes to roundoff, and including
    // them only makes the Gramian numerically singular. The live block is
    // evaluated in closed form, exactly, at any t in the window.
    constexpr double kTheta = 20.0;
    std::vector<int> live;
    live.reserve(n);
    for (int j = 0; j < n; ++j) {
        if (-sol.eigenvalues(j) * sigma <= kTheta) live.push_back(j);
    }
    std::fill(out.begin(), out.end(), 0.0);
    if (live.empty()) return;

    const int m = static_cast<int>(live.size());
    Eigen::MatrixXd lhs(m, m);
    Eigen::VectorXd d(m);
    for (int a = 0; a < m; ++a) {
        d(a) = std::exp(sol.eigenvalues(live[a]) * sigma);
        for (int b = 0; b <= a; ++b) {
            const double mu = sol.eigenvalues(live[a]) + sol.eigenvalues(live[b]);
            const double v = sol.control_gram(live[a], live[b]) * gram_factor(mu, sigma);
            lhs(a, b) = v;
            lhs(b, a) = v;
        }
        lhs(a, a) += sol.reg_eps * d(a) * d(a);
    }

    Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(error.data(), n);
    Eigen::VectorXd rhs(m);
    for (int a = 0; a < m; ++a) {
        rhs(a) = d(a) * sol.eigenvectors.col(live[a]).dot(e);
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success) {
        throw SolverError("apply_feedback_gain: Gramian solve failed at t = " +
                          std::to_string(t));
    }
    const Eigen::VectorXd w = ldlt.solve(rhs);

    Eigen::VectorXd k_e = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < m; ++a) {
        k_e += sol.eigenvectors.col(live[a]) * (d(a) * w(a));
    }
    for (int i = 0; i < n; ++i) {
        out[i] = region.mask[i] != 0.0 ? k_e(i) : 0.0;
    }
}

Eigen::MatrixXd feedback_gain(const RiccatiSolution& sol, const ControlRegion& region, double t) {
    const int n = sol.dim();
    Eigen::MatrixXd gain(n, n);
    std::vector<double> e(n, 0.0), col(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e.assign(n, 0.0);
        e[j] = 1.0;
        apply_feedback_gain(sol, region, e, t, col);
        for (int i = 0; i < n; ++i) gain(i, j) = col[i];
    }
    return gain;
}

FeedbackLaw::FeedbackLaw(const Grid& grid, std::vector<double> target_field,
                         ControlRegion region_)
    : target(std::move(target_field)), region(std::move(region_)) {
    if (target.size() != static_cast<std::size_t>(grid.n)) {
        throw DimensionError("FeedbackLaw: target length does not match grid");
    }
    target_laplacian = laplacian_apply(grid, target);
    const double scale = std::max(1.0, linf_norm(target_laplacian));
    for (int i = 0; i < grid.n; ++i) {
        if (region.mask[i] == 0.0 &&
            (std::fabs(target[i]) > 1e-12 * scale ||
             std::fabs(target_laplacian[i]) > 1e-12 * scale)) {
            throw GeometryError("FeedbackLaw: target not supported in the control region");
        }
    }
}

void control_value(const FeedbackLaw& law, const RiccatiSolution& sol,
                   std::span<const double> y, double t, std::span<double> u) {
    const std::size_t n = law.target.size();
    if (y.size() != n || u.size() != n) {
        throw DimensionError("control_value: field length mismatch");
    }
    static thread_local std::vector<double> err, gain_term;
    err.resize(n);
    gain_term.resize(n);
    for (std::size_t i = 0; i < n; ++i) err[i] = y[i] - law.target[i];
    apply_feedback_gain(sol, law.region, err, t, gain_term);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = -gain_term[i] - law.target_laplacian[i];
    }
}

namespace {

// Generic adaptive RK4 with step doubling for dX/dsigma = f(X), collecting
// the state at requested sigma values (sorted ascending).
template <typename Rhs>
std::vector<Eigen::MatrixXd> rk4_adaptive(const Eigen::MatrixXd& x0, Rhs rhs, double sigma_end,
                                          std::span<const double> sigma_out, double rel_tol) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(sigma_out.size());

    auto rk4_step = [&rhs](const Eigen::MatrixXd& x, double dt) {
        const Eigen::MatrixXd k1 = rhs(x);
        const Eigen::MatrixXd k2 = rhs(x + 0.5 * dt * k1);
        const Eigen::MatrixXd k3 = rhs(x + 0.5 * dt * k2);
        const Eigen::MatrixXd k4 = rhs(x + dt * k3);
        return (x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).eval();
    };

    Eigen::MatrixXd x = x0;
    double sigma = 0.0;
    double dt = sigma_end / 64.0;
    const double dt_min = sigma_end * 1e-14;
    std::size_t next_out = 0;

    while (next_out < sigma_out.size() || sigma < sigma_end) {
        double target = sigma_end;
        if (next_out < sigma_out.size()) target = std::min(target, sigma_out[next_out]);
        if (sigma >= target - 1e-15 * sigma_end) {
            if (next_out < sigma_out.size() && target == sigma_out[next_out]) {
                out.push_back(x);
                ++next_out;
                continue;
            }
            break;
        }
        double step = std::min(dt, target - sigma);
        for (;;) {
            const Eigen::MatrixXd full = rk4_step(x, step);
            const Eigen::MatrixXd half = rk4_step(rk4_step(x, 0.5 * step), 0.5 * step);
            const double scale = std::max(1.0, half.cwiseAbs().maxCoeff());
            const double err = (full - half).cwiseAbs().maxCoeff() / scale;
            if (!std::isfinite(err)) {
                step *= 0.5;
                if (step < dt_min) throw SolverError("rk4_adaptive: step control diverged");
                continue;
            }
            if (err <= rel_tol) {
                x = half + (half - full) / 15.0;  // local extrapolation
                // Keep the iterate symmetric; the flows below preserve symmetry.
                const double asym = (x - x.transpose()).cwiseAbs().maxCoeff() / scale;
                if (asym > 1e-8) {
                    throw NumericalError("rk4_adaptive: lost symmetry beyond 1e-8");
                }
                x = (0.5 * (x + x.transpose())).eval();
                sigma += step;
                if (err < rel_tol / 64.0) dt = std::min(step * 2.0, sigma_end / 8.0);
                else dt = step;
                break;
            }
            step *= 0.5;
            if (step < dt_min) {
                throw SolverError("rk4_adaptive: step control failed to converge");
            }
        }
    }
    return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> integrate_lyapunov_rk4(const Eigen::MatrixXd& a_op,
                                                    const Eigen::MatrixXd& m_op, double horizon,
                                                    std::span<const double> eval_times,
                                                    double rel_tol) {
    // sigma = horizon - t; dQ/dsigma = M - Q A - A Q, Q(0) = 0.
    std::vector<double> sigmas(eval_times.size());
    for (std::size_t i = 0; i < eval_times.size(); ++i) {
        sigmas[i] = horizon - eval_times[eval_times.size() - 1 - i];
        if (sigmas[i] < -1e-12 || eval_times[eval_times.size() - 1 - i] > horizon) {
            throw RangeError("integrate_lyapunov_rk4: eval time outside [0, horizon]");
        }
    }
    auto rhs = [&](const Eigen::MatrixXd& q) {
        return (m_op - q * a_op - a_op * q).eval();
    };
    const Eigen::MatrixXd q0 = Eigen::MatrixXd::Zero(a_op.rows(), a_op.cols());
    auto states = rk4_adaptive(q0, rhs, horizon, sigmas, rel_tol);
    std::reverse(states.begin(), states.end());  // back to ascending t order
    return states;
}

std::vector<Eigen::MatrixXd> integrate_riccati_p_rk4(const Eigen::MatrixXd& a_op,
                                                     const Eigen::MatrixXd& m_op, double horizon,
                                                     double gamma,
                                                     std::span<const double> eval_times,
                                                     double rel_tol) {
    // sigma = horizon - t; dP/dsigma = A P + P A - P M P, P(0) = gamma I.
    std::vector<double> sigmas(eval_times.size());
    for (std::size_t i = 0; i < eval_times.size(); ++i) {
        sigmas[i] = horizon - eval_times[eval_times.size() - 1 - i];
    }
    auto rhs = [&](const Eigen::MatrixXd& p) {
        return (a_op * p + p * a_op - p * m_op * p).eval();
    };
    const Eigen::MatrixXd p0 =
        gamma * Eigen::MatrixXd::Identity(a_op.rows(), a_op.cols());
    auto states = rk4_adaptive(p0, rhs, horizon, sigmas, rel_tol);
    std::reverse(states.begin(), states.end());
    return states;
}

std::uint64_t grid_region_hash(const Grid& grid, const ControlRegion& region) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    mix(&grid.n, sizeof(grid.n));
    mix(&grid.x_lo, sizeof(double));
    mix(&grid.x_hi, sizeof(double));
    mix(&region.omega_lo, sizeof(double));
    mix(&region.omega_hi, sizeof(double));
    return h;
}

void save_riccati_cache(const std::filesystem::path& path, const RiccatiSolution& sol,
                        const Grid& grid, const ControlRegion& region) {
    nlohmann::json header;
    header["format"] = "blowctl-riccati-cache";
    header["version"] = 1;
    header["grid_hash"] = grid_region_hash(grid, region);
    header["n"] = sol.dim();
    header["horizon"] = sol.horizon;
    header["n_knots"] = static_cast<int>(sol.knots.size());
    header["reg_eps"] = sol.reg_eps;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_riccati_cache: cannot open " + path.string());
    out << header.dump() << '\n';
    const int n = sol.dim();
    out.write(reinterpret_cast<const char*>(sol.eigenvalues.data()),
              static_cast<std::streamsize>(sizeof(double)) * n);
    out.write(reinterpret_cast<const char*>(sol.eigenvectors.data()),
              static_cast<std::streamsize>(sizeof(double)) * n * n);
    out.write(reinterpret_cast<const char*>(sol.control_gram.data()),
              static_cast<std::streamsize>(sizeof(double)) * n * n);
    if (!out) throw ConfigError("save_riccati_cache: write failed for " + path.string());
}

RiccatiSolution load_riccati_cache(const std::filesystem::path& path, const Grid& grid,
                                   const ControlRegion& region) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_riccati_cache: cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    const auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != std::string("blowctl-riccati-cache")) {
        throw ConfigError("load_riccati_cache: bad header in " + path.string());
    }
    if (header.at("grid_hash").get<std::uint64_t>() != grid_region_hash(grid, region)) {
        throw ConfigError("load_riccati_cache: cache was built for a different grid/region");
    }
    const int n = header.at("n").get<int>();
    if (n != grid.n) throw ConfigError("load_riccati_cache: dimension mismatch");

    RiccatiSolution sol;
    sol.horizon = header.at("horizon").get<double>();
    sol.reg_eps = header.at("reg_eps").get<double>();
    const int n_knots = header.at("n_knots").get<int>();

    sol.eigenvalues.resize(n);
    sol.eigenvectors.resize(n, n);
    sol.control_gram.resize(n, n);
    in.read(reinterpret_cast<char*>(sol.eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double)) * n);
    in.read(reinterpret_cast<char*>(sol.eigenvectors.data()),
            static_cast<std::streamsize>(sizeof(double)) * n * n);
    in.read(reinterpret_cast<char*>(sol.control_gram.data()),
            static_cast<std::streamsize>(sizeof(double)) * n * n);
    if (!in) throw ConfigError("load_riccati_cache: truncated cache " + path.string());

    sol.knots.resize(n_knots);
    sol.gram_at_knot.resize(n_knots);
    const double dt = sol.horizon / n_knots;
    for (int k = 0; k < n_knots; ++k) {
        sol.knots[k] = k * dt;
        sol.gram_at_knot[k] =
            gram_closed_form(sol.eigenvalues, sol.control_gram, sol.horizon - sol.knots[k]);
    }
    return sol;
}

}  // namespace blowctl
