#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "blowctl/grid.hpp"

namespace blowctl {

// The steering kernel solves the operator Riccati equation
//
//     P' + Delta P + P Delta - P B B^T P = 0,   <P(t) z, z> -> +inf as t -> T_h,
//
// in its inverse variable Q = P^{-1}, which satisfies the linear Lyapunov ODE
//
//     Q' = Q Delta + Delta Q - B B^T,   Q(T_h) = 0.
//
// (Derivation: Q' = -Q P' Q = Q(Delta P + P Delta - P B B^T P)Q
//            = Q Delta + Delta Q - B B^T, using Delta = Delta^T.)
//
// With Delta = V diag(lambda) V^T and constant B B^T this ODE has the exact
// variation-of-constants solution; entry-wise in the eigenbasis,
//
//     Q~_jk(t) = M~_jk (e^{|mu| sigma} - 1) / |mu|,  mu = lambda_j + lambda_k,
//
// with sigma = T_h - t and M~ = V^T B B^T V. Those entries overflow double
// precision once |mu| sigma exceeds ~700, which happens for any realistic
// grid and horizon (|lambda| grows like 4/h^2). The solution is therefore
// stored in the bounded Gramian factor
//
//     G~(t) = D Q~ D = M~_jk (1 - e^{-|mu| sigma}) / |mu|,  D = diag(e^{lambda_j sigma}),
//
// and the feedback gain is evaluated without ever forming Q:
//
//     (Q + eps I)^{-1} = V D (G~ + eps D^2)^{-1} D V^T.
//
// An adaptive RK4 integrator for the raw matrix ODEs is provided as an
// independent route for surrogate problems where Q is representable.

/// Time-indexed steering kernel in Lyapunov Q-form, stored spectrally.
struct RiccatiSolution {
    double horizon = 0.0;  // T_h
    double reg_eps = 0.0;  // Tikhonov guard for the gain
    std::vector<double> knots;  // uniform in [0, T_h)

    Eigen::VectorXd eigenvalues;           // of the discrete Dirichlet Laplacian, negative
    Eigen::MatrixXd eigenvectors;          // orthonormal columns V
    Eigen::MatrixXd control_gram;          // M~ = V^T diag(mask) V
    std::vector<Eigen::MatrixXd> gram_at_knot;  // G~(t_k), bounded, SPD for t_k < T_h

    int dim() const { return static_cast<int>(eigenvalues.size()); }

    /// Bounded factor G~(t), linearly interpolated between knots.
    Eigen::MatrixXd gram_at(double t) const;

    /// Reconstructs Q(t) = V D^{-1} G~ D^{-1} V^T. Throws NumericalError when
    /// the entries are not representable in double precision.
    Eigen::MatrixXd q_at(double t) const;
};

/// Closed-form eigensystem of the n x n discrete Dirichlet Laplacian.
void dirichlet_laplacian_eigensystem(const Grid& grid, Eigen::VectorXd& eigenvalues,
                                     Eigen::MatrixXd& eigenvectors);

/// Solves the Lyapunov Q-form on [0, horizon] and stores the kernel at
/// n_knots uniform knots. reg_eps < 0 selects the default 1e-10 * horizon.
RiccatiSolution solve_lyapunov_q(const Grid& grid, const ControlRegion& region, double horizon,
                                 int n_knots, double reg_eps = -1.0);

/// Dense feedback gain K(t) = B^T (Q(t) + reg_eps I)^{-1}. Intended for small
/// problems and tests; throws RangeError outside [0, last knot].
Eigen::MatrixXd feedback_gain(const RiccatiSolution& sol, const ControlRegion& region, double t);

/// Applies K(t) to an error field without forming the dense gain.
void apply_feedback_gain(const RiccatiSolution& sol, const ControlRegion& region,
                         std::span<const double> error, double t, std::span<double> out);

/// Steering target with its Laplacian; both must be supported in the control
/// region so the affine part of the control stays inside it.
struct FeedbackLaw {
    std::vector<double> target;
    std::vector<double> target_laplacian;
    ControlRegion region;

    FeedbackLaw(const Grid& grid, std::vector<double> target_field, ControlRegion region_);
};

/// Full phase-1 control u = -mask .* [K(t)(y - target)] - Laplacian(target).
void control_value(const FeedbackLaw& law, const RiccatiSolution& sol,
                   std::span<const double> y, double t, std::span<double> u);

/// Reference route: adaptive RK4 with step halving for Q' = Q A + A Q - M
/// backward from Q(horizon) = 0; returns Q at the requested times.
/// Only usable when Q stays representable (surrogates, coarse grids).
std::vector<Eigen::MatrixXd> integrate_lyapunov_rk4(const Eigen::MatrixXd& a_op,
                                                    const Eigen::MatrixXd& m_op, double horizon,
                                                    std::span<const double> eval_times,
                                                    double rel_tol = 1e-10);

/// Reference route for the P-form: P' = -A P - P A + P M P backward from
/// P(horizon) = gamma I; returns P at the requested times.
std::vector<Eigen::MatrixXd> integrate_riccati_p_rk4(const Eigen::MatrixXd& a_op,
                                                     const Eigen::MatrixXd& m_op, double horizon,
                                                     double gamma,
                                                     std::span<const double> eval_times,
                                                     double rel_tol = 1e-10);

/// Kernel cache: a one-line JSON header followed by little-endian doubles
/// (eigenvalues, eigenvectors, control Gramian). Knot matrices are
/// regenerated exactly from the stored factors on load.
void save_riccati_cache(const std::filesystem::path& path, const RiccatiSolution& sol,
                        const Grid& grid, const ControlRegion& region);
RiccatiSolution load_riccati_cache(const std::filesystem::path& path, const Grid& grid,
                                   const ControlRegion& region);

/// FNV-1a hash of the grid and control region layout, used to key caches.
std::uint64_t grid_region_hash(const Grid& grid, const ControlRegion& region);

}  // namespace blowctl
