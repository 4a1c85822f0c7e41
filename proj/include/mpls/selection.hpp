#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mpls/amnr.hpp"
#include "mpls/mnr.hpp"

namespace mpls {

enum class GridOrigin { singular_value_scaled, path_knots, explicit_values };

inline std::string_view to_string(GridOrigin o)
{
    switch (o) {
        case GridOrigin::singular_value_scaled: return "singular_value_scaled";
        case GridOrigin::path_knots: return "path_knots";
        case GridOrigin::explicit_values: return "explicit";
    }
    return "unknown";
}

struct LambdaGrid {
    std::vector<double> values;
    GridOrigin origin = GridOrigin::explicit_values;
};

enum class GridMode {
    // sigma_max(X)^2 down to floor * sigma_max(X)^2
    singular_value_scaled,
    // lambda_0 = max |X^T y| down to floor * lambda_0
    l1_path,
};

namespace detail {

inline std::vector<double> log_spaced(double top, double floor_factor, int count)
{
    std::vector<double> v(static_cast<std::size_t>(count));
    const double lo = std::log(top * floor_factor);
    const double hi = std::log(top);
    for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        v[static_cast<std::size_t>(i)] = std::exp(hi + t * (lo - hi));
    }
    v.front() = top;
    v.back() = top * floor_factor;
    return v;
}

}  // namespace detail

/// Largest squared singular value of X, from the smaller of the two Gram matrices.
inline double max_singular_value_squared(const Matrix& X)
{
    const Matrix G = X.rows() <= X.cols() ? Matrix(X * X.transpose()) : Matrix(X.transpose() * X);
    Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
    return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

inline LambdaGrid lambda_grid(const Problem& problem, int count, GridMode mode, double floor_factor = 1e-4)
{
    detail::require(count >= 2, "grid count must be >= 2");
    detail::require(floor_factor > 0.0 && floor_factor < 1.0, "grid floor factor must lie in (0, 1)");
    detail::require(problem.X().cwiseAbs().maxCoeff() > 0.0, "cannot build a lambda grid for a zero design matrix");
    double top = 0.0;
    if (mode == GridMode::singular_value_scaled) {
        top = max_singular_value_squared(problem.X());
    } else {
        top = (problem.X().transpose() * problem.y()).cwiseAbs().maxCoeff();
        detail::require(top > 0.0, "X^T y is zero; the L1 grid is empty");
    }
    return {detail::log_spaced(top, floor_factor, count), GridOrigin::singular_value_scaled};
}

/// Passes values through, sorted descending. Duplicates are removed.
inline LambdaGrid explicit_grid(std::vector<double> values)
{
    detail::require(!values.empty(), "explicit grid is empty");
    for (double v : values) detail::require(std::isfinite(v) && v >= 0.0, "grid values must be finite and >= 0");
    std::sort(values.begin(), values.end(), std::greater<>());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return {std::move(values), GridOrigin::explicit_values};
}

inline LambdaGrid knot_grid(const std::vector<PathKnot>& path)
{
    LambdaGrid g;
    g.origin = GridOrigin::path_knots;
    for (const auto& k : path) g.values.push_back(k.lambda);
    return g;
}

// ---------------------------------------------------------------------------
// Degrees of freedom

namespace detail {

// trace(X (X^T X + Omega)^{-1} X^T) = trace((X^T X + Omega)^{-1} X^T X).
inline double hat_trace(const Matrix& XtX, const Matrix& omega)
{
    Matrix H = XtX + omega;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
        H.diagonal().array() += 1e-10 * H.trace() / static_cast<double>(H.rows());
        llt.compute(H);
        if (llt.info() != Eigen::Success) throw NumericalError("degrees of freedom: singular system");
    }
    return llt.solve(XtX).trace();
}

}  // namespace detail

/// Effective degrees of freedom of a converged MNR fit, using the penalty
/// matrix evaluated at the solution (the local quadratic approximation).
inline double degrees_of_freedom(const Problem& problem, const ModelSpec& spec, const Solution& solution)
{
    spec.validate(problem.p());
    const Matrix XtX = problem.X().transpose() * problem.X();
    const double eps = solution.epsilon > 0.0 ? solution.epsilon : 1e-8;
    return detail::hat_trace(XtX, penalty_matrix(spec, solution.beta, eps));
}

/// Generalized ridge: trace(X (X^T X + 2 lambda L^T L)^{-1} X^T).
inline double ridge_degrees_of_freedom(const Problem& problem, const LinearOperator& op, double lambda)
{
    const Matrix XtX = problem.X().transpose() * problem.X();
    Matrix omega = Matrix::Zero(problem.p(), problem.p());
    add_weighted_gram(op, Vector::Ones(op.rows()), 2.0 * lambda, omega);
    return detail::hat_trace(XtX, omega);
}

/// Path knots: the size of the active set.
inline double degrees_of_freedom(const PathKnot& knot) { return static_cast<double>(knot.active.size()); }

/// Path knots of a working design whose first n rows are the data rows and
/// the rest a smoothness block: trace(X_A (Xw_A^T Xw_A)^{-1} X_A^T), where X_A
/// are the data rows of the active working columns. Reduces to |A| when there
/// is no smoothness block.
inline double degrees_of_freedom(const WorkingProblem& wp, Eigen::Index n, const PathKnot& knot)
{
    const Eigen::Index k = static_cast<Eigen::Index>(knot.active.size());
    if (k == 0 || wp.problem.n() == n) return static_cast<double>(k);
    Matrix XA(wp.problem.n(), k);
    for (Eigen::Index h = 0; h < k; ++h) XA.col(h) = wp.problem.X().col(knot.active[static_cast<std::size_t>(h)]);
    Eigen::LLT<Matrix> llt(XA.transpose() * XA);
    if (llt.info() != Eigen::Success) return static_cast<double>(k);
    Matrix top = XA.topRows(n).transpose();
    llt.matrixL().solveInPlace(top);
    return top.squaredNorm();
}

inline double gcv(double rss, double df, Eigen::Index n)
{
    detail::require(n >= 1, "gcv needs n >= 1");
    detail::require(std::isfinite(rss) && rss >= 0.0, "rss must be finite and >= 0");
    detail::require(std::isfinite(df) && df >= 0.0, "df must be finite and >= 0");
    detail::require(df < static_cast<double>(n), "gcv is undefined for df >= n");
    const double nn = static_cast<double>(n);
    const double shrink = 1.0 - df / nn;
    return (rss / nn) / (shrink * shrink);
}

// ---------------------------------------------------------------------------
// Lambda selection

struct GcvPoint {
    double lambda = 0.0;
    double rss = 0.0;
    double df = 0.0;
    // +inf when df >= n.
    double gcv = 0.0;
};

struct Selection {
    double lambda = 0.0;
    Solution solution;
    std::vector<GcvPoint> curve;
    std::size_t index = 0;
};

namespace detail {

inline double rss_of(const Problem& problem, const Vector& beta)
{
    return (problem.y() - problem.X() * beta).squaredNorm();
}

inline double gcv_or_inf(double rss, double df, Eigen::Index n)
{
    return df < static_cast<double>(n) ? gcv(rss, df, n) : std::numeric_limits<double>::infinity();
}

// Argmin over the curve; the curve is ordered by decreasing lambda so a strict
// comparison keeps the larger lambda on ties.
inline std::size_t argmin_gcv(const std::vector<GcvPoint>& curve)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].gcv < curve[best].gcv) best = i;
    }
    return best;
}

[[noreturn]] inline void rethrow_at(const Error& e, double lambda)
{
    std::ostringstream msg;
    msg.precision(17);
    msg << e.what() << " (at lambda=" << lambda << ")";
    if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(msg.str());
    throw NumericalError(msg.str());
}

template <typename Solve, typename Df>
Selection select_over_grid(const Problem& problem, const LambdaGrid& grid, Solve&& solve, Df&& df_of)
{
    require(!grid.values.empty(), "lambda grid is empty");
    std::vector<double> lambdas = grid.values;
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    Selection sel;
    std::vector<Solution> sols;
    sols.reserve(lambdas.size());
    for (double lam : lambdas) {
        try {
            Solution s = solve(lam);
            const double rss = rss_of(problem, s.beta);
            const double df = df_of(lam, s);
            sel.curve.push_back({lam, rss, df, gcv_or_inf(rss, df, problem.n())});
            sols.push_back(std::move(s));
        } catch (const Error& e) {
            rethrow_at(e, lam);
        }
    }
    sel.index = argmin_gcv(sel.curve);
    sel.lambda = sel.curve[sel.index].lambda;
    sel.solution = std::move(sols[sel.index]);
    return sel;
}

}  // namespace detail

/// MNR fit at every grid value; spec.lambda is overwritten per point.
inline Selection select_lambda(const Problem& problem, ModelSpec spec, const LambdaGrid& grid,
                               const MnrConfig& config = {})
{
    spec.validate(problem.p());
    const Matrix XtX = problem.X().transpose() * problem.X();
    return detail::select_over_grid(
        problem, grid,
        [&](double lam) {
            spec.lambda = lam;
            return mnr_solve(problem, spec, config);
        },
        [&](double lam, const Solution& s) {
            spec.lambda = lam;
            const double eps = s.epsilon > 0.0 ? s.epsilon : config.epsilon0;
            return detail::hat_trace(XtX, penalty_matrix(spec, s.beta, eps));
        });
}

/// Closed-form generalized ridge over a grid.
inline Selection select_ridge(const Problem& problem, const LinearOperator& op, const LambdaGrid& grid)
{
    return detail::select_over_grid(
        problem, grid, [&](double lam) { return ridge_solve(problem, op, lam); },
        [&](double lam, const Solution&) { return ridge_degrees_of_freedom(problem, op, lam); });
}

/// GCV over the knots of a computed path.
inline Selection select_knot(const Problem& problem, const WorkingProblem& wp, const std::vector<PathKnot>& path)
{
    detail::require(!path.empty(), "empty path");
    Selection sel;
    for (const auto& knot : path) {
        const double rss = detail::rss_of(problem, knot.beta);
        const double df = degrees_of_freedom(wp, problem.n(), knot);
        sel.curve.push_back({knot.lambda, rss, df, detail::gcv_or_inf(rss, df, problem.n())});
    }
    sel.index = detail::argmin_gcv(sel.curve);
    const auto& knot = path[sel.index];
    sel.lambda = knot.lambda;
    sel.solution.beta = knot.beta;
    sel.solution.sparse_beta = knot.beta;
    sel.solution.lambda = knot.lambda;
    sel.solution.objective = working_objective(wp, knot.working, knot.lambda);
    sel.solution.iterations = static_cast<int>(path.size());
    sel.solution.converged = true;
    return sel;
}

/// Runs the AMNR path for a variant and selects a knot by GCV. The solution's
/// wall time covers the whole path computation.
inline Selection select_lambda(const Problem& problem, const Variant& variant, const AmnrConfig& config = {})
{
    const auto start = std::chrono::steady_clock::now();
    const WorkingProblem wp = working_problem(problem, variant);
    const auto path = amnr_path(wp, config);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Selection sel = select_knot(problem, wp, path);
    sel.solution.wall_time = elapsed;
    return sel;
}

}  // namespace mpls
