#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mpls/model.hpp"

namespace mpls {

// Active-set modified Newton-Raphson (AMNR) path solver.
//
// Every variant is reduced to a weighted, optionally sign-constrained L1 path
// on a working design:
//
//   LASSO, ALASSO      working design X, coefficients beta, weights gamma
//   NNG                X diag(ref), coefficients w >= 0, beta = w .* ref
//   SNNG, NN_SLASSO    [X diag(ref); sqrt(lambda_sm) L diag(ref)], w >= 0
//   SLASSO, ENET_L     [X; sqrt(lambda_sm) L], unconstrained
//
// The solver never divides by the reference; variables whose reference entry
// is zero have zero working columns and are excluded from the start.

enum class VariantTag { LASSO, ALASSO, NNG, SNNG, NN_SLASSO, SLASSO, ENET_L };

inline std::string_view to_string(VariantTag tag)
{
    switch (tag) {
        case VariantTag::LASSO: return "LASSO";
        case VariantTag::ALASSO: return "ALASSO";
        case VariantTag::NNG: return "NNG";
        case VariantTag::SNNG: return "SNNG";
        case VariantTag::NN_SLASSO: return "NN_SLASSO";
        case VariantTag::SLASSO: return "SLASSO";
        case VariantTag::ENET_L: return "ENET_L";
    }
    return "unknown";
}

inline VariantTag variant_tag_from_string(std::string_view name)
{
    for (auto tag : {VariantTag::LASSO, VariantTag::ALASSO, VariantTag::NNG, VariantTag::SNNG, VariantTag::NN_SLASSO,
                     VariantTag::SLASSO, VariantTag::ENET_L}) {
        if (name == to_string(tag)) return tag;
    }
    throw ValidationError("unknown AMNR variant '" + std::string(name) + "'");
}

inline bool is_sign_constrained(VariantTag tag)
{
    return tag == VariantTag::NNG || tag == VariantTag::SNNG || tag == VariantTag::NN_SLASSO;
}

inline bool uses_reference(VariantTag tag) { return tag == VariantTag::NNG || tag == VariantTag::SNNG; }

inline bool has_smooth_term(VariantTag tag)
{
    return tag == VariantTag::SNNG || tag == VariantTag::NN_SLASSO || tag == VariantTag::SLASSO ||
           tag == VariantTag::ENET_L;
}

/// Operator used for the smoothness block when none is given: second
/// differences for ENET_L, first differences otherwise.
inline OperatorKind default_smooth_operator(VariantTag tag)
{
    return tag == VariantTag::ENET_L ? OperatorKind::second_difference : OperatorKind::first_difference;
}

struct Variant {
    VariantTag tag = VariantTag::LASSO;
    // ALASSO weights; +inf removes a variable, zero is rejected.
    std::optional<Vector> gamma;
    // NNG / SNNG reference estimator.
    std::optional<Vector> reference;
    double lambda_sm = 0.0;
    std::optional<LinearOperator> smooth_op;

    static Variant lasso() { return {}; }

    static Variant alasso(Vector gamma)
    {
        Variant v;
        v.tag = VariantTag::ALASSO;
        v.gamma = std::move(gamma);
        return v;
    }

    static Variant nng(Vector reference)
    {
        Variant v;
        v.tag = VariantTag::NNG;
        v.reference = std::move(reference);
        return v;
    }

    static Variant snng(Vector reference, double lambda_sm, std::optional<LinearOperator> op = std::nullopt)
    {
        Variant v;
        v.tag = VariantTag::SNNG;
        v.reference = std::move(reference);
        v.lambda_sm = lambda_sm;
        v.smooth_op = std::move(op);
        return v;
    }

    static Variant smooth(VariantTag tag, double lambda_sm, std::optional<LinearOperator> op = std::nullopt)
    {
        Variant v;
        v.tag = tag;
        v.lambda_sm = lambda_sm;
        v.smooth_op = std::move(op);
        return v;
    }

    void validate(Eigen::Index p) const
    {
        if (tag == VariantTag::ALASSO) {
            detail::require(gamma.has_value(), "ALASSO needs adaptive weights");
        }
        if (gamma) {
            detail::require(gamma->size() == p, "adaptive weight vector length must equal p");
            for (Eigen::Index j = 0; j < p; ++j) {
                const double g = (*gamma)[j];
                detail::require(!std::isnan(g) && g > 0.0,
                                "adaptive weights must be > 0 (use +inf to exclude a variable)");
            }
        }
        if (uses_reference(tag)) {
            detail::require(reference.has_value(), std::string(to_string(tag)) + " needs a reference estimator");
        }
        if (reference) {
            detail::require(reference->size() == p, "reference length must equal p");
            detail::require(reference->allFinite(), "reference has non-finite entries");
        }
        if (has_smooth_term(tag)) {
            detail::require(std::isfinite(lambda_sm) && lambda_sm >= 0.0, "lambda_sm must be finite and >= 0");
            if (smooth_op) detail::require(smooth_op->cols() == p, "smooth operator column count must equal p");
        }
    }

    /// The effective reference: the supplied one, all-ones for NN_SLASSO, none otherwise.
    std::optional<Vector> effective_reference(Eigen::Index p) const
    {
        if (uses_reference(tag)) return reference;
        if (tag == VariantTag::NN_SLASSO) return Vector::Ones(p);
        return std::nullopt;
    }

    LinearOperator effective_smooth_op(Eigen::Index p) const
    {
        if (smooth_op) return *smooth_op;
        return make_operator(default_smooth_operator(tag), p);
    }
};

enum class SignRule : std::int8_t { free = 0, nonnegative = 1, nonpositive = -1 };

/// The weighted, sign-constrained L1 problem actually traversed by the path.
struct WorkingProblem {
    Problem problem;
    Vector gamma;
    std::vector<SignRule> rules;
    std::vector<bool> excluded;
    // Multiplier mapping working coefficients back: beta = working .* scale.
    std::optional<Vector> reference;

    Eigen::Index p() const { return problem.p(); }

    Vector to_beta(const Vector& working) const
    {
        return reference ? Vector(working.cwiseProduct(*reference)) : working;
    }
};

/// [X diag(ref); sqrt(lambda_sm) L diag(ref)] stacked over [y; 0]. The smooth
/// block is omitted entirely when lambda_sm is zero.
inline Problem augment_smooth(const Problem& problem, double lambda_sm, const LinearOperator& op,
                              const std::optional<Vector>& reference)
{
    detail::require(std::isfinite(lambda_sm) && lambda_sm >= 0.0, "lambda_sm must be finite and >= 0");
    detail::require(op.cols() == problem.p(), "smooth operator column count must equal p");
    if (reference) detail::require(reference->size() == problem.p(), "reference length must equal p");

    const Eigen::Index n = problem.n();
    const Eigen::Index extra = lambda_sm > 0.0 ? op.rows() : 0;
    Matrix X(n + extra, problem.p());
    X.topRows(n) = problem.X();
    if (extra > 0) X.bottomRows(extra) = std::sqrt(lambda_sm) * Matrix(op.matrix());
    if (reference) X = X * reference->asDiagonal();
    Vector y = Vector::Zero(n + extra);
    y.head(n) = problem.y();
    return Problem(std::move(X), std::move(y));
}

inline WorkingProblem working_problem(const Problem& problem, const Variant& variant)
{
    const Eigen::Index p = problem.p();
    variant.validate(p);
    WorkingProblem w;
    w.reference = variant.effective_reference(p);
    if (has_smooth_term(variant.tag)) {
        w.problem = augment_smooth(problem, variant.lambda_sm, variant.effective_smooth_op(p), w.reference);
    } else if (w.reference) {
        w.problem = Problem(problem.X() * w.reference->asDiagonal(), problem.y());
    } else {
        w.problem = problem;
    }
    w.gamma = variant.gamma ? *variant.gamma : Vector::Ones(p);
    const SignRule rule = is_sign_constrained(variant.tag) ? SignRule::nonnegative : SignRule::free;
    w.rules.assign(static_cast<std::size_t>(p), rule);
    w.excluded.assign(static_cast<std::size_t>(p), false);
    bool any = false;
    for (Eigen::Index j = 0; j < p; ++j) {
        const bool zero_ref = w.reference && (*w.reference)[j] == 0.0;
        const bool inf_weight = std::isinf(w.gamma[j]);
        w.excluded[static_cast<std::size_t>(j)] = zero_ref || inf_weight;
        any = any || !w.excluded[static_cast<std::size_t>(j)];
    }
    detail::require(any, "no admissible variables: reference is all zeros or every weight is infinite");
    return w;
}

enum class StepCause { entered_plus, entered_minus, zero_crossed, terminal };

inline std::string_view to_string(StepCause cause)
{
    switch (cause) {
        case StepCause::entered_plus: return "entered_plus";
        case StepCause::entered_minus: return "entered_minus";
        case StepCause::zero_crossed: return "zero_crossed";
        case StepCause::terminal: return "terminal";
    }
    return "unknown";
}

inline StepCause step_cause_from_string(std::string_view name)
{
    for (auto c : {StepCause::entered_plus, StepCause::entered_minus, StepCause::zero_crossed, StepCause::terminal}) {
        if (name == to_string(c)) return c;
    }
    throw ValidationError("unknown step cause '" + std::string(name) + "'");
}

struct PathKnot {
    int k = 0;
    double lambda = 0.0;
    // Original coordinates.
    Vector beta;
    // Working coordinates (w for reference variants, otherwise equal to beta).
    Vector working;
    std::vector<Eigen::Index> active;
    double alpha = 0.0;
    StepCause cause = StepCause::terminal;
    std::vector<std::string> warnings;
};

struct AmnrConfig {
    // The path ends once an entering variable's correlation per unit column
    // norm is at most tau.
    double tau = 1e-8;
    // 0 selects min(rows of the working design, p).
    Eigen::Index max_active = 0;
    bool allow_removal = true;
    // Guard against cycling; 0 selects 50 p + 1000.
    int max_steps = 0;
};

// ---------------------------------------------------------------------------
// Path building blocks

namespace detail {

inline double entering_score(double c, double gamma, SignRule rule)
{
    if (std::isinf(gamma)) return 0.0;
    switch (rule) {
        case SignRule::free: return std::abs(c) / gamma;
        case SignRule::nonnegative: return std::max(c, 0.0) / gamma;
        case SignRule::nonpositive: return std::max(-c, 0.0) / gamma;
    }
    return 0.0;
}

constexpr double tie_tol = 1e-12;

}  // namespace detail

struct EnterChoice {
    std::optional<Eigen::Index> index;
    double lambda = 0.0;
    int sign = 0;
};

/// Picks the inactive variable with the largest weighted (and, for constrained
/// variables, sign-projected) correlation. Ties go to the smallest index.
inline EnterChoice select_entering(const Vector& c, const Vector& gamma, std::span<const SignRule> rules,
                                   std::span<const Eigen::Index> inactive)
{
    EnterChoice best;
    double best_score = 0.0;
    for (Eigen::Index j : inactive) {
        const double s = detail::entering_score(c[j], gamma[j], rules[static_cast<std::size_t>(j)]);
        if (!(s > 0.0)) continue;
        const double tol = detail::tie_tol * std::max(1.0, best_score);
        const bool take = !best.index || s > best_score + tol || (std::abs(s - best_score) <= tol && j < *best.index);
        if (!take) continue;
        best.index = j;
        best_score = s;
        best.lambda = s;
        best.sign = c[j] >= 0.0 ? 1 : -1;
    }
    return best;
}

struct Direction {
    Vector delta;
    Vector u;
};

/// Newton direction on the active design: delta = (X_A^T X_A)^{-1} X_A^T r, u = X_A delta.
inline Direction descent_direction(const Matrix& XA, const Vector& r, std::span<const Eigen::Index> active = {})
{
    detail::require(XA.rows() == r.size(), "active design and residual row counts differ");
    const Matrix G = XA.transpose() * XA;
    Eigen::LDLT<Matrix> ldlt(G);
    const double scale = G.diagonal().maxCoeff();
    const bool singular = ldlt.info() != Eigen::Success || !(scale > 0.0) ||
                          (ldlt.vectorD().array().abs() <= 1e-12 * scale).any();
    if (singular) {
        std::ostringstream msg;
        msg << "active design is rank deficient";
        if (!active.empty()) {
            msg << " for active set [";
            for (std::size_t i = 0; i < active.size(); ++i) msg << (i ? "," : "") << active[i];
            msg << "]";
        }
        throw NumericalError(msg.str());
    }
    Direction d;
    d.delta = ldlt.solve(XA.transpose() * r);
    d.u = XA * d.delta;
    return d;
}

struct StepInput {
    const Vector& c;
    const Vector& a;
    double lambda;
    const Vector& gamma;
    std::span<const SignRule> rules;
    std::span<const Eigen::Index> inactive;
    std::span<const Eigen::Index> active;
    // Full-length working coefficients.
    const Vector& beta;
    // One entry per active position.
    const Vector& delta;
    bool allow_removal = true;
    // Variable that left the active set on the previous step. Its branch that is
    // still on the boundary is ignored; the opposite-sign branch stays live.
    std::optional<Eigen::Index> just_dropped;
};

struct StepEvent {
    double alpha = 1.0;
    StepCause cause = StepCause::terminal;
    std::optional<Eigen::Index> index;
    // Every active variable crossing zero at alpha (ties included).
    std::vector<Eigen::Index> crossings;
};

/// Smallest positive step among entering events, zero crossings and the
/// terminal step alpha = 1.
///
/// Entering (weighted by gamma):  alpha+ = (lambda g - c) / (lambda g - a), a < lambda g
///                                alpha- = (lambda g + c) / (lambda g + a), a > -lambda g
/// Zero crossing:                 alpha0 = -beta / delta, beta (beta + delta) < 0
///
/// A candidate sitting on the boundary already (numerator within round-off of
/// zero) is reported with alpha = 0 so the caller can apply it without moving.
inline StepEvent step_length(const StepInput& in)
{
    StepEvent ev;
    auto consider = [&](double alpha, StepCause cause, Eigen::Index index) {
        if (alpha >= 1.0 - detail::tie_tol) return;
        if (!ev.index || alpha < ev.alpha - detail::tie_tol ||
            (std::abs(alpha - ev.alpha) <= detail::tie_tol && index < *ev.index)) {
            ev.alpha = alpha;
            ev.cause = cause;
            ev.index = index;
        }
    };

    for (Eigen::Index j : in.inactive) {
        const double g = in.gamma[j];
        if (std::isinf(g)) continue;
        const double lg = in.lambda * g;
        const SignRule rule = in.rules[static_cast<std::size_t>(j)];
        const bool dropped = in.just_dropped && *in.just_dropped == j;
        if (rule != SignRule::nonpositive && in.a[j] < lg && !(dropped && lg - in.c[j] <= 1e-9 * lg)) {
            const double num = lg - in.c[j];
            const double alpha = num <= detail::tie_tol * lg ? 0.0 : num / (lg - in.a[j]);
            consider(alpha, StepCause::entered_plus, j);
        }
        if (rule != SignRule::nonnegative && in.a[j] > -lg && !(dropped && lg + in.c[j] <= 1e-9 * lg)) {
            const double num = lg + in.c[j];
            const double alpha = num <= detail::tie_tol * lg ? 0.0 : num / (lg + in.a[j]);
            consider(alpha, StepCause::entered_minus, j);
        }
    }

    std::vector<std::pair<double, Eigen::Index>> crossing;
    if (in.allow_removal) {
        for (std::size_t h = 0; h < in.active.size(); ++h) {
            const Eigen::Index j = in.active[h];
            const double b = in.beta[j];
            const double d = in.delta[static_cast<Eigen::Index>(h)];
            if (b * (b + d) < 0.0) {
                const double alpha = -b / d;
                crossing.emplace_back(alpha, j);
                consider(alpha, StepCause::zero_crossed, j);
            }
        }
    }

    if (!ev.index) {
        ev.alpha = 1.0;
        ev.cause = StepCause::terminal;
        return ev;
    }
    if (ev.cause == StepCause::zero_crossed) {
        for (const auto& [alpha, j] : crossing) {
            if (std::abs(alpha - ev.alpha) <= detail::tie_tol) ev.crossings.push_back(j);
        }
        std::sort(ev.crossings.begin(), ev.crossings.end());
    }
    return ev;
}

/// Moves every active index whose coefficient is exactly zero back to the
/// inactive set. The remaining active indices keep their order.
inline std::vector<Eigen::Index> drop_zeroed(std::vector<Eigen::Index>& active, std::vector<Eigen::Index>& inactive,
                                             const Vector& beta)
{
    std::vector<Eigen::Index> dropped;
    std::vector<Eigen::Index> kept;
    kept.reserve(active.size());
    for (Eigen::Index j : active) {
        if (beta[j] == 0.0) {
            dropped.push_back(j);
        } else {
            kept.push_back(j);
        }
    }
    active = std::move(kept);
    for (Eigen::Index j : dropped) {
        inactive.insert(std::lower_bound(inactive.begin(), inactive.end(), j), j);
    }
    return dropped;
}

namespace detail {

// Upper Cholesky factor R of X_A^T X_A, updated as columns enter and leave.
class ActiveGram {
public:
    explicit ActiveGram(const Matrix& X) : X_(X) {}

    Eigen::Index size() const { return k_; }

    // Returns false (and leaves the factor untouched) when the column is
    // numerically in the span of the current active columns.
    bool add(Eigen::Index j)
    {
        const auto xj = X_.col(j);
        const double xx = xj.squaredNorm();
        if (!(xx > 0.0)) return false;
        Vector b(k_);
        for (Eigen::Index i = 0; i < k_; ++i) b[i] = X_.col(cols_[static_cast<std::size_t>(i)]).dot(xj);
        Vector w = b;
        if (k_ > 0) R_.topLeftCorner(k_, k_).triangularView<Eigen::Upper>().transpose().solveInPlace(w);
        const double d2 = xx - w.squaredNorm();
        if (!(d2 > 1e-12 * xx)) return false;
        reserve(k_ + 1);
        R_.col(k_).head(k_) = w;
        R_(k_, k_) = std::sqrt(d2);
        cols_.push_back(j);
        ++k_;
        return true;
    }

    void remove(Eigen::Index position)
    {
        for (Eigen::Index c = position; c + 1 < k_; ++c) R_.col(c).head(k_) = R_.col(c + 1).head(k_);
        // Restore upper-triangular form with Givens rotations on rows (i, i+1).
        for (Eigen::Index i = position; i + 1 < k_; ++i) {
            const double p = R_(i, i);
            const double q = R_(i + 1, i);
            const double r = std::hypot(p, q);
            const double cs = p / r;
            const double sn = q / r;
            for (Eigen::Index c = i; c + 1 < k_; ++c) {
                const double top = R_(i, c);
                const double bottom = R_(i + 1, c);
                R_(i, c) = cs * top + sn * bottom;
                R_(i + 1, c) = -sn * top + cs * bottom;
            }
            R_(i + 1, i) = 0.0;
        }
        cols_.erase(cols_.begin() + position);
        --k_;
    }

    Vector solve(const Vector& rhs) const
    {
        Vector x = rhs;
        const auto R = R_.topLeftCorner(k_, k_).triangularView<Eigen::Upper>();
        R.transpose().solveInPlace(x);
        R.solveInPlace(x);
        return x;
    }

private:
    void reserve(Eigen::Index k)
    {
        if (R_.rows() >= k) return;
        const Eigen::Index cap = std::max<Eigen::Index>(k, 2 * R_.rows() + 8);
        R_.conservativeResize(cap, cap);
    }

    const Matrix& X_;
    Matrix R_;
    std::vector<Eigen::Index> cols_;
    Eigen::Index k_ = 0;
};

inline std::string format_indices(std::span<const Eigen::Index> idx)
{
    std::ostringstream s;
    s << "[";
    for (std::size_t i = 0; i < idx.size(); ++i) s << (i ? "," : "") << idx[i];
    s << "]";
    return s.str();
}

}  // namespace detail

/// Runs the active-set path on an already-built working problem.
inline std::vector<PathKnot> amnr_path(const WorkingProblem& wp, const AmnrConfig& config = {})
{
    detail::require(config.tau > 0.0, "tau must be > 0");
    const Matrix& X = wp.problem.X();
    const Vector& y = wp.problem.y();
    const Eigen::Index p = X.cols();
    const Eigen::Index max_active =
        config.max_active > 0 ? config.max_active : std::min<Eigen::Index>(X.rows(), p);
    detail::require(max_active >= 1 && max_active <= p, "max_active must lie in [1, p]");
    const int max_steps = config.max_steps > 0 ? config.max_steps : static_cast<int>(50 * p + 1000);

    std::vector<bool> excluded = wp.excluded;
    std::vector<Eigen::Index> active;
    std::vector<Eigen::Index> inactive;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!excluded[static_cast<std::size_t>(j)]) inactive.push_back(j);
    }

    Vector w = Vector::Zero(p);
    Vector mu = Vector::Zero(X.rows());
    std::vector<PathKnot> knots;

    auto record = [&](double lambda, double alpha, StepCause cause) {
        PathKnot knot;
        knot.k = static_cast<int>(knots.size());
        knot.lambda = lambda;
        knot.working = w;
        knot.beta = wp.to_beta(w);
        knot.active = active;
        knot.alpha = alpha;
        knot.cause = cause;
        knots.push_back(std::move(knot));
    };
    auto refresh_last = [&] {
        auto& knot = knots.back();
        knot.working = w;
        knot.beta = wp.to_beta(w);
        knot.active = active;
    };

    // Entering correlations are compared with tau per unit column norm, so that
    // scaling a working column (NNG references) does not end the path early.
    const Vector col_norm = X.colwise().norm().transpose();
    auto negligible = [&](Eigen::Index j, double lam) { return lam * wp.gamma[j] <= config.tau * col_norm[j]; };

    Vector c = X.transpose() * y;
    const EnterChoice first = select_entering(c, wp.gamma, wp.rules, inactive);
    if (!first.index || negligible(*first.index, first.lambda)) {
        record(first.index ? first.lambda : 0.0, 0.0, StepCause::terminal);
        return knots;
    }

    detail::ActiveGram gram(X);
    double lambda = first.lambda;
    std::vector<std::string> pending_warnings;

    auto try_enter = [&](Eigen::Index j) -> bool {
        if (gram.add(j)) {
            active.push_back(j);
            inactive.erase(std::find(inactive.begin(), inactive.end(), j));
            return true;
        }
        excluded[static_cast<std::size_t>(j)] = true;
        inactive.erase(std::find(inactive.begin(), inactive.end(), j));
        pending_warnings.push_back("variable " + std::to_string(j) +
                                   " skipped: collinear with active set " + detail::format_indices(active));
        return false;
    };

    try_enter(*first.index);
    record(lambda, 0.0, first.sign > 0 ? StepCause::entered_plus : StepCause::entered_minus);
    knots.back().warnings = std::move(pending_warnings);
    pending_warnings.clear();

    std::optional<Eigen::Index> just_dropped;
    bool below_tau = false;
    for (int step = 0;; ++step) {
        if (step >= max_steps) {
            throw NumericalError("AMNR path did not terminate within " + std::to_string(max_steps) + " steps");
        }
        if (active.empty()) {
            // Everything dropped out: restart from the largest admissible correlation.
            c = X.transpose() * (y - mu);
            const EnterChoice again = select_entering(c, wp.gamma, wp.rules, inactive);
            if (!again.index || negligible(*again.index, again.lambda)) break;
            try_enter(*again.index);
            continue;
        }

        const Vector r = y - mu;
        c = X.transpose() * r;
        Vector cA(static_cast<Eigen::Index>(active.size()));
        for (std::size_t h = 0; h < active.size(); ++h) cA[static_cast<Eigen::Index>(h)] = c[active[h]];
        const Vector delta = gram.solve(cA);
        Vector u = Vector::Zero(X.rows());
        for (std::size_t h = 0; h < active.size(); ++h) u += delta[static_cast<Eigen::Index>(h)] * X.col(active[h]);
        if (!delta.allFinite()) {
            throw NumericalError("non-finite Newton direction for active set " + detail::format_indices(active));
        }
        const Vector a = X.transpose() * u;

        const StepEvent ev = step_length(StepInput{c, a, lambda, wp.gamma, wp.rules, inactive, active, w, delta,
                                                   config.allow_removal, just_dropped});
        just_dropped.reset();

        // Events sitting on the current knot are applied without moving.
        const bool zero_length = ev.cause != StepCause::terminal && ev.alpha <= 1e-14;
        const double alpha = zero_length ? 0.0 : ev.alpha;
        if (alpha > 0.0) {
            for (std::size_t h = 0; h < active.size(); ++h) w[active[h]] += alpha * delta[static_cast<Eigen::Index>(h)];
            mu += alpha * u;
        }
        const double next_lambda = ev.cause == StepCause::terminal ? 0.0 : lambda * (1.0 - alpha);

        bool stop = false;
        switch (ev.cause) {
            case StepCause::terminal:
                record(0.0, alpha, StepCause::terminal);
                return knots;
            case StepCause::zero_crossed: {
                for (Eigen::Index j : ev.crossings) w[j] = 0.0;
                for (Eigen::Index j : active) {
                    if (std::abs(w[j]) <= 1e-14) w[j] = 0.0;
                }
                std::vector<Eigen::Index> before = active;
                const auto dropped = drop_zeroed(active, inactive, w);
                for (Eigen::Index j : dropped) {
                    const auto pos = std::find(before.begin(), before.end(), j) - before.begin();
                    gram.remove(pos);
                    before.erase(before.begin() + pos);
                }
                if (!dropped.empty()) just_dropped = dropped.front();
                // Recompute the fit from the snapped coefficients.
                mu = X * w;
                break;
            }
            case StepCause::entered_plus:
            case StepCause::entered_minus:
                below_tau = negligible(*ev.index, next_lambda);
                if (below_tau || static_cast<Eigen::Index>(active.size()) >= max_active) {
                    stop = true;
                } else {
                    try_enter(*ev.index);
                }
                break;
        }

        if (zero_length) {
            refresh_last();
            auto& warn = knots.back().warnings;
            warn.insert(warn.end(), pending_warnings.begin(), pending_warnings.end());
        } else {
            lambda = next_lambda;
            record(lambda, alpha, ev.cause);
            knots.back().warnings = pending_warnings;
        }
        pending_warnings.clear();
        if (stop || below_tau) break;
    }
    return knots;
}

/// Full solution path for a variant on the original problem.
inline std::vector<PathKnot> amnr_path(const Problem& problem, const Variant& variant, const AmnrConfig& config = {})
{
    return amnr_path(working_problem(problem, variant), config);
}

// ---------------------------------------------------------------------------
// Optimality verification

struct KktReport {
    double max_active_gap = 0.0;
    // Largest (weighted, sign-projected) inactive correlation minus lambda; <= 0 when feasible.
    double max_inactive_excess = -std::numeric_limits<double>::infinity();
    int sign_violations = 0;

    bool passed(double tol) const
    {
        return max_active_gap <= tol && max_inactive_excess <= tol && sign_violations == 0;
    }
};

/// Checks the necessary optimality conditions of a working-space point:
///  - nonzero coefficients carry correlation lambda * gamma_j * sign(w_j);
///  - zero coefficients have weighted correlation at most lambda (one-sided for
///    sign-constrained variables);
///  - sign-constrained coefficients are nonnegative.
inline KktReport kkt_check(const WorkingProblem& wp, const Vector& working, double lambda)
{
    detail::require(working.size() == wp.p(), "coefficient length must equal p");
    const Vector c = wp.problem.X().transpose() * (wp.problem.y() - wp.problem.X() * working);
    KktReport rep;
    for (Eigen::Index j = 0; j < wp.p(); ++j) {
        const double g = wp.gamma[j];
        const SignRule rule = wp.rules[static_cast<std::size_t>(j)];
        const double wj = working[j];
        if (rule == SignRule::nonnegative && wj < -1e-12) ++rep.sign_violations;
        if (rule == SignRule::nonpositive && wj > 1e-12) ++rep.sign_violations;
        if (wj != 0.0) {
            const double s = wj > 0.0 ? 1.0 : -1.0;
            rep.max_active_gap = std::max(rep.max_active_gap, std::abs(c[j] - lambda * g * s));
            if (lambda > 0.0 && c[j] != 0.0 && (c[j] > 0.0) != (wj > 0.0) &&
                std::abs(c[j]) > 1e-12 * std::max(1.0, lambda * g)) {
                ++rep.sign_violations;
            }
        } else if (!std::isinf(g)) {
            const double score = detail::entering_score(c[j], g, rule);
            rep.max_inactive_excess = std::max(rep.max_inactive_excess, score - lambda);
        }
    }
    return rep;
}

inline KktReport kkt_check(const Problem& problem, const Variant& variant, const PathKnot& knot)
{
    return kkt_check(working_problem(problem, variant), knot.working, knot.lambda);
}

// ---------------------------------------------------------------------------
// Fixed-lambda solutions

inline double working_objective(const WorkingProblem& wp, const Vector& working, double lambda)
{
    double pen = 0.0;
    for (Eigen::Index j = 0; j < working.size(); ++j) {
        if (working[j] != 0.0) pen += wp.gamma[j] * std::abs(working[j]);
    }
    return 0.5 * (wp.problem.y() - wp.problem.X() * working).squaredNorm() + lambda * pen;
}

/// Position of lambda on a path: the bracketing knots and the linear weight t
/// such that the solution is (1 - t) knots[lo] + t knots[lo + 1].
struct PathPosition {
    std::size_t lo = 0;
    double t = 0.0;
};

inline PathPosition locate(const std::vector<PathKnot>& path, double lambda)
{
    detail::require(!path.empty(), "empty path");
    detail::require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    if (lambda >= path.front().lambda) return {0, 0.0};
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double hi = path[k].lambda;
        const double lo = path[k + 1].lambda;
        if (lambda <= hi && lambda >= lo) {
            if (lambda == lo) return {k + 1, 0.0};
            return {k, (hi - lambda) / (hi - lo)};
        }
    }
    return {path.size() - 1, 0.0};
}

/// Working-space coefficients at lambda by linear interpolation between knots.
inline Vector interpolate_working(const std::vector<PathKnot>& path, double lambda)
{
    const auto pos = locate(path, lambda);
    if (lambda >= path.front().lambda) return Vector::Zero(path.front().working.size());
    const auto& a = path[pos.lo];
    if (pos.t == 0.0 || pos.lo + 1 >= path.size()) return a.working;
    return (1.0 - pos.t) * a.working + pos.t * path[pos.lo + 1].working;
}

/// Solution at a fixed lambda taken from an existing path.
inline Solution solution_from_path(const WorkingProblem& wp, const std::vector<PathKnot>& path, double lambda)
{
    Solution out;
    const Vector w = interpolate_working(path, lambda);
    out.beta = wp.to_beta(w);
    out.sparse_beta = out.beta;
    out.lambda = lambda;
    out.objective = working_objective(wp, w, lambda);
    out.iterations = static_cast<int>(path.size());
    out.converged = true;
    return out;
}

inline Solution solve_at_lambda(const Problem& problem, const Variant& variant, double lambda,
                                const AmnrConfig& config = {})
{
    const auto start = std::chrono::steady_clock::now();
    detail::require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    const WorkingProblem wp = working_problem(problem, variant);
    const auto path = amnr_path(wp, config);
    Solution out = solution_from_path(wp, path, lambda);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace mpls
