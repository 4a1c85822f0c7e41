#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpls/error.hpp"
#include "mpls/operators.hpp"

namespace mpls {

/// Regression instance y = X beta + noise. Immutable after construction.
class Problem {
public:
    Problem() = default;

    Problem(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y))
    {
        detail::require(X_.rows() >= 1 && X_.cols() >= 1, "design matrix must be at least 1x1");
        detail::require(X_.rows() == y_.size(), "design has " + std::to_string(X_.rows()) +
                                                    " rows but response has " + std::to_string(y_.size()) +
                                                    " entries");
        detail::require(X_.allFinite(), "design matrix has non-finite entries");
        detail::require(y_.allFinite(), "response has non-finite entries");
    }

    const Matrix& X() const { return X_; }
    const Vector& y() const { return y_; }
    Eigen::Index n() const { return X_.rows(); }
    Eigen::Index p() const { return X_.cols(); }

private:
    Matrix X_;
    Vector y_;
};

/// Optional preprocessing: mean-centred response and unit-norm columns.
struct Standardized {
    Problem problem;
    double y_mean = 0.0;
    Vector column_norms;
};

inline Standardized standardize(const Problem& problem)
{
    Standardized out;
    out.y_mean = problem.y().mean();
    out.column_norms = problem.X().colwise().norm().transpose();
    Matrix X = problem.X();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (out.column_norms[j] > 0.0) X.col(j) /= out.column_norms[j];
    }
    Vector y = problem.y().array() - out.y_mean;
    out.problem = Problem(std::move(X), std::move(y));
    return out;
}

/// Maps coefficients fitted on the standardized design back to the original columns.
inline Vector unstandardize(const Standardized& s, const Vector& beta)
{
    Vector out = beta;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        if (s.column_norms[j] > 0.0) out[j] /= s.column_norms[j];
    }
    return out;
}

// L1 realizes g(t) = t with g'(t) = 1; L2 realizes g(t) = t^2 with g'(t) = 2t.
enum class PenaltyKind { L1, L2 };

inline std::string_view to_string(PenaltyKind kind) { return kind == PenaltyKind::L1 ? "L1" : "L2"; }

inline PenaltyKind penalty_kind_from_string(std::string_view name)
{
    if (name == "L1" || name == "l1") return PenaltyKind::L1;
    if (name == "L2" || name == "l2") return PenaltyKind::L2;
    throw ValidationError("unknown penalty kind '" + std::string(name) + "'");
}

struct PenaltyTerm {
    PenaltyKind kind = PenaltyKind::L1;
    LinearOperator op;
    double proportion = 1.0;
    // Adaptive weights, one per row of op. Absent means all ones.
    std::optional<Vector> weights;

    double weight(Eigen::Index i) const { return weights ? (*weights)[i] : 1.0; }
};

enum class SignMode { unconstrained, nonnegative_weights };

/// Penalty configuration: R terms sharing a global lambda through
/// lambda_r = lambda * proportion_r.
struct ModelSpec {
    std::vector<PenaltyTerm> terms;
    double lambda = 0.0;
    SignMode sign_mode = SignMode::unconstrained;
    std::optional<Vector> reference;

    /// Throws ValidationError unless the spec is usable with p coefficients.
    void validate(Eigen::Index p) const
    {
        detail::require(!terms.empty(), "model needs at least one penalty term");
        detail::require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
        double total = 0.0;
        for (std::size_t r = 0; r < terms.size(); ++r) {
            const auto& t = terms[r];
            const std::string tag = "penalty term " + std::to_string(r) + ": ";
            detail::require(t.op.cols() == p, tag + "operator has " + std::to_string(t.op.cols()) +
                                                  " columns, expected " + std::to_string(p));
            detail::require(std::isfinite(t.proportion) && t.proportion >= 0.0, tag + "proportion must be >= 0");
            if (t.weights) {
                detail::require(t.weights->size() == t.op.rows(), tag + "weights length must equal operator rows");
                detail::require(t.weights->allFinite() && (t.weights->array() >= 0.0).all(),
                                tag + "weights must be finite and >= 0");
            }
            total += t.proportion;
        }
        detail::require(std::abs(total - 1.0) <= 1e-12, "penalty proportions must sum to 1");
        if (sign_mode == SignMode::nonnegative_weights) {
            detail::require(reference.has_value(), "nonnegative_weights sign mode requires a reference vector");
        }
        if (reference) {
            detail::require(reference->size() == p, "reference vector length must equal p");
            detail::require(reference->allFinite(), "reference vector has non-finite entries");
        }
    }
};

struct Solution {
    Vector beta;
    // beta with entries below the solver's epsilon set to zero.
    Vector sparse_beta;
    double lambda = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    double wall_time = 0.0;
    double epsilon = 0.0;
};

/// lambda_r = lambda * mu_r.
inline std::vector<double> split_lambda(double lambda, const std::vector<double>& proportions)
{
    detail::require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    double total = 0.0;
    for (double mu : proportions) {
        detail::require(std::isfinite(mu) && mu >= 0.0, "proportions must be >= 0");
        total += mu;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "proportions must sum to 1 (got " + std::to_string(total) + ")");
    std::vector<double> out;
    out.reserve(proportions.size());
    for (double mu : proportions) out.push_back(lambda * mu);
    return out;
}

/// Diagonal of D for one term: d_i = gamma_i * g'(|theta_i|) / (epsilon + |theta_i|).
inline Vector perturbed_penalty_diag(const Vector& theta, PenaltyKind kind, const std::optional<Vector>& gamma,
                                     double epsilon)
{
    detail::require(epsilon > 0.0, "epsilon must be > 0");
    detail::require(theta.allFinite(), "theta has non-finite entries");
    if (gamma) detail::require(gamma->size() == theta.size(), "gamma length must match theta");
    Vector d(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double t = std::abs(theta[i]);
        const double slope = kind == PenaltyKind::L1 ? 1.0 : 2.0 * t;
        d[i] = (gamma ? (*gamma)[i] : 1.0) * slope / (epsilon + t);
    }
    return d;
}

namespace detail {

inline void check_beta(const Problem& problem, const Vector& beta)
{
    require(beta.size() == problem.p(), "coefficient vector has " + std::to_string(beta.size()) +
                                            " entries, expected " + std::to_string(problem.p()));
    require(beta.allFinite(), "coefficient vector has non-finite entries");
}

// g(|theta|) and its epsilon-perturbed counterpart
//   g_eps(t) = g(t) - eps * int_0^t g'(s) / (eps + s) ds.
inline double penalty_value(PenaltyKind kind, double t)
{
    return kind == PenaltyKind::L1 ? t : t * t;
}

inline double perturbed_penalty_value(PenaltyKind kind, double t, double eps)
{
    const double l1 = t - eps * std::log1p(t / eps);
    return kind == PenaltyKind::L1 ? l1 : t * t - 2.0 * eps * l1;
}

template <typename G>
double evaluate_objective(const Problem& problem, const ModelSpec& spec, const Vector& beta, G&& g)
{
    check_beta(problem, beta);
    spec.validate(problem.p());
    const double fit = 0.5 * (problem.y() - problem.X() * beta).squaredNorm();
    double penalty = 0.0;
    for (const auto& term : spec.terms) {
        const double lam = spec.lambda * term.proportion;
        if (lam == 0.0) continue;
        const Vector theta = apply(term.op, beta);
        double s = 0.0;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            s += term.weight(i) * g(term.kind, std::abs(theta[i]));
        }
        penalty += lam * s;
    }
    return fit + penalty;
}

}  // namespace detail

/// 1/2 ||y - X beta||^2 + sum_r lambda mu_r sum_i gamma_i g_r(|(L_r beta)_i|).
inline double objective(const Problem& problem, const ModelSpec& spec, const Vector& beta)
{
    return detail::evaluate_objective(problem, spec, beta,
                                      [](PenaltyKind k, double t) { return detail::penalty_value(k, t); });
}

/// The objective with every penalty replaced by its epsilon-perturbed version.
inline double perturbed_objective(const Problem& problem, const ModelSpec& spec, const Vector& beta, double epsilon)
{
    detail::require(epsilon > 0.0, "epsilon must be > 0");
    return detail::evaluate_objective(problem, spec, beta, [epsilon](PenaltyKind k, double t) {
        return detail::perturbed_penalty_value(k, t, epsilon);
    });
}

/// Accumulated penalty matrix sum_r lambda_r L_r^T D_r L_r evaluated at beta.
inline Matrix penalty_matrix(const ModelSpec& spec, const Vector& beta, double epsilon)
{
    const Eigen::Index p = beta.size();
    Matrix omega = Matrix::Zero(p, p);
    for (const auto& term : spec.terms) {
        const double lam = spec.lambda * term.proportion;
        if (lam == 0.0) continue;
        const Vector d = perturbed_penalty_diag(apply(term.op, beta), term.kind, term.weights, epsilon);
        add_weighted_gram(term.op, d, lam, omega);
    }
    return omega;
}

/// Gradient of the perturbed objective:
/// -X^T (y - X beta) + sum_r lambda_r L_r^T D_r L_r beta.
inline Vector smooth_gradient(const Problem& problem, const ModelSpec& spec, const Vector& beta, double epsilon)
{
    detail::check_beta(problem, beta);
    spec.validate(problem.p());
    detail::require(epsilon > 0.0, "epsilon must be > 0");
    Vector grad = -problem.X().transpose() * (problem.y() - problem.X() * beta);
    for (const auto& term : spec.terms) {
        const double lam = spec.lambda * term.proportion;
        if (lam == 0.0) continue;
        const Vector theta = apply(term.op, beta);
        const Vector d = perturbed_penalty_diag(theta, term.kind, term.weights, epsilon);
        grad += lam * (term.op.matrix().transpose() * (d.asDiagonal() * theta));
    }
    return grad;
}

/// Zeroes every coefficient whose magnitude is below threshold.
inline Vector sparse_view(const Vector& beta, double threshold)
{
    return (beta.array().abs() < threshold).select(0.0, beta);
}

}  // namespace mpls
