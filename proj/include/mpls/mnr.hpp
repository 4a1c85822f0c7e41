#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mpls/model.hpp"

namespace mpls {

/// Modified Newton-Raphson solver for multiple penalized least squares.
///
/// Each iteration replaces every penalty by its local quadratic
/// approximation around the current iterate, which turns the update into a
/// generalized ridge solve
///
///     beta <- beta + step * ((X^T X + Omega)^{-1} X^T y - beta),
///     Omega = sum_r lambda_r L_r^T D_r L_r,
///     D_r   = diag(gamma_i g_r'(|theta_i|) / (epsilon + |theta_i|)).
///
/// The perturbation epsilon is chosen from the first iterate and then held
/// fixed. Convergence is declared when every coordinate with |beta_j| >= epsilon
/// has |d f_eps / d beta_j| < tau / 2. Coefficients that should be exactly zero
/// come out tiny but nonzero; Solution::sparse_beta zeroes those below epsilon.

struct MnrState {
    int k = 0;
    Vector beta;
    Matrix omega;
    double epsilon = 0.0;
    Vector delta;
};

struct MnrConfig {
    double tau = 1e-8;
    double epsilon0 = 1e-8;
    int max_iter = 100;
    double step = 1.0;
    // Called once per iteration after the gradient is evaluated.
    std::function<void(const MnrState&)> on_iterate;

    void validate() const
    {
        detail::require(tau > 0.0, "tau must be > 0");
        detail::require(epsilon0 > 0.0, "epsilon0 must be > 0");
        detail::require(max_iter >= 1, "max_iter must be >= 1");
        detail::require(step > 0.0 && step <= 1.0, "step must lie in (0, 1]");
    }
};

/// epsilon = tau / (2 R M) * min{|theta_i^(r)| : theta_i^(r) != 0}.
///
/// M = max_r g_r'(0+) over the L1 terms, which is 1; pure-L2 models fall back
/// to M = 1 as well. When every theta is zero the incoming epsilon is returned.
inline double update_epsilon(const std::vector<Vector>& thetas, double tau, int terms, double current)
{
    detail::require(tau > 0.0, "tau must be > 0");
    detail::require(terms >= 1, "term count must be >= 1");
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& theta : thetas) {
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double a = std::abs(theta[i]);
            if (a > 0.0 && a < smallest) smallest = a;
        }
    }
    if (!std::isfinite(smallest)) return current;
    constexpr double M = 1.0;
    return tau / (2.0 * terms * M) * smallest;
}

namespace detail {

// Cholesky solve of a symmetric positive definite system with one jittered retry.
inline Vector spd_solve(Matrix H, const Vector& rhs, const std::string& where)
{
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-10 * H.trace() / static_cast<double>(H.rows());
        H.diagonal().array() += jitter;
        llt.compute(H);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("system matrix is numerically singular (" + where + ")");
        }
    }
    Vector x = llt.solve(rhs);
    if (!x.allFinite()) throw NumericalError("non-finite solution (" + where + ")");
    return x;
}

}  // namespace detail

inline Solution mnr_solve(const Problem& problem, const ModelSpec& spec, const MnrConfig& config = {})
{
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    spec.validate(problem.p());
    detail::require(spec.sign_mode == SignMode::unconstrained,
                    "MNR cannot impose sign constraints; use the active-set solver");

    const Eigen::Index p = problem.p();
    const Matrix XtX = problem.X().transpose() * problem.X();
    const Vector Xty = problem.X().transpose() * problem.y();
    const int R = static_cast<int>(spec.terms.size());

    Vector beta = Vector::Zero(p);
    Matrix omega = Matrix::Identity(p, p);
    double eps = config.epsilon0;
    bool converged = false;
    int k = 0;

    while (k < config.max_iter) {
        ++k;
        const Vector target = detail::spd_solve(XtX + omega, Xty, "MNR iteration " + std::to_string(k));
        beta += config.step * (target - beta);
        if (!beta.allFinite()) throw NumericalError("non-finite MNR iterate at iteration " + std::to_string(k));

        if (k == 1) {
            std::vector<Vector> thetas;
            thetas.reserve(spec.terms.size());
            for (const auto& term : spec.terms) thetas.push_back(apply(term.op, beta));
            eps = update_epsilon(thetas, config.tau, R, eps);
        }

        omega = penalty_matrix(spec, beta, eps);
        const Vector delta = (XtX + omega) * beta - Xty;

        if (config.on_iterate) config.on_iterate(MnrState{k, beta, omega, eps, delta});

        converged = true;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (std::abs(beta[j]) >= eps && !(std::abs(delta[j]) < config.tau / 2.0)) {
                converged = false;
                break;
            }
        }
        if (converged) break;
    }

    Solution out;
    out.beta = beta;
    out.sparse_beta = sparse_view(beta, eps);
    out.lambda = spec.lambda;
    out.objective = objective(problem, spec, beta);
    out.iterations = k;
    out.converged = converged;
    out.epsilon = eps;
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Direct generalized ridge: argmin 1/2||y - X beta||^2 + lambda ||L beta||^2,
/// i.e. (X^T X + 2 lambda L^T L)^{-1} X^T y.
inline Solution ridge_solve(const Problem& problem, const LinearOperator& op, double lambda)
{
    const auto start = std::chrono::steady_clock::now();
    detail::require(op.cols() == problem.p(), "ridge operator column count must equal p");
    detail::require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    Matrix H = problem.X().transpose() * problem.X();
    add_weighted_gram(op, Vector::Ones(op.rows()), 2.0 * lambda, H);
    Solution out;
    out.beta = detail::spd_solve(std::move(H), problem.X().transpose() * problem.y(), "ridge solve");
    out.sparse_beta = out.beta;
    out.lambda = lambda;
    ModelSpec spec;
    spec.terms.push_back(PenaltyTerm{PenaltyKind::L2, op, 1.0, std::nullopt});
    spec.lambda = lambda;
    out.objective = objective(problem, spec, out.beta);
    out.iterations = 1;
    out.converged = true;
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace mpls
