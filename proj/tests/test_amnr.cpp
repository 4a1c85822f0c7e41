#include <gtest/gtest.h>

#include <random>
#include <set>

#include "mpls/amnr.hpp"
#include "oracles.hpp"

using namespace mpls;

namespace {

std::vector<Eigen::Index> all_indices(Eigen::Index p)
{
    std::vector<Eigen::Index> z(static_cast<std::size_t>(p));
    std::iota(z.begin(), z.end(), 0);
    return z;
}

std::vector<SignRule> rules(Eigen::Index p, SignRule r) { return std::vector<SignRule>(static_cast<std::size_t>(p), r); }

// Random instance with heterogeneous column scales.
Problem random_problem(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, bool scaled = false)
{
    Matrix X = oracle::gaussian(n, p, rng);
    if (scaled) {
        std::uniform_real_distribution<double> s(0.2, 5.0);
        for (Eigen::Index j = 0; j < p; ++j) X.col(j) *= s(rng);
    }
    Vector beta = Vector::Zero(p);
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(3, p); ++j) beta[j] = 1.5 - j;
    const Vector y = X * beta + 0.5 * oracle::gaussian(n, rng);
    return Problem(X, y);
}

void expect_path_invariants(const Problem& problem, const Variant& v, const std::vector<PathKnot>& path,
                            const AmnrConfig& cfg = {})
{
    ASSERT_FALSE(path.empty());
    const WorkingProblem wp = working_problem(problem, v);
    const Eigen::Index max_active =
        cfg.max_active > 0 ? cfg.max_active : std::min<Eigen::Index>(wp.problem.n(), wp.p());
    double prev_rss = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto& knot = path[k];
        EXPECT_EQ(knot.k, static_cast<int>(k));
        if (k > 0) {
            EXPECT_LT(knot.lambda, path[k - 1].lambda);
            EXPECT_GT(knot.alpha, 0.0);
            EXPECT_LE(knot.alpha, 1.0);
        }
        const std::set<Eigen::Index> act(knot.active.begin(), knot.active.end());
        EXPECT_EQ(act.size(), knot.active.size()) << "duplicate active index";
        EXPECT_LE(static_cast<Eigen::Index>(act.size()), max_active);
        for (Eigen::Index j = 0; j < wp.p(); ++j) {
            if (!act.count(j)) {
                EXPECT_EQ(knot.working[j], 0.0);
            }
            if (wp.rules[static_cast<std::size_t>(j)] == SignRule::nonnegative) {
                EXPECT_GE(knot.working[j], -1e-12);
            }
        }
        EXPECT_LT((wp.to_beta(knot.working) - knot.beta).cwiseAbs().maxCoeff(), 1e-15);
        const auto rep = kkt_check(wp, knot.working, knot.lambda);
        EXPECT_TRUE(rep.passed(1e-8)) << to_string(v.tag) << " knot " << k << " gap " << rep.max_active_gap
                                      << " excess " << rep.max_inactive_excess << " signs " << rep.sign_violations;
        const double rss = (wp.problem.y() - wp.problem.X() * knot.working).squaredNorm();
        EXPECT_LE(rss, prev_rss * (1 + 1e-12) + 1e-12);
        prev_rss = rss;
    }
}

}  // namespace

TEST(SelectEntering, Examples)
{
    const Vector c = Eigen::Vector2d(3.0, -1.0);
    const auto z = all_indices(2);
    auto e = select_entering(c, Vector::Ones(2), rules(2, SignRule::free), z);
    ASSERT_TRUE(e.index);
    EXPECT_EQ(*e.index, 0);
    EXPECT_DOUBLE_EQ(e.lambda, 3.0);
    EXPECT_EQ(e.sign, 1);

    e = select_entering(c, Eigen::Vector2d(10.0, 0.5), rules(2, SignRule::free), z);
    EXPECT_EQ(*e.index, 1);
    EXPECT_DOUBLE_EQ(e.lambda, 2.0);
    EXPECT_EQ(e.sign, -1);

    e = select_entering(Eigen::Vector2d(-5.0, 2.0), Vector::Ones(2), rules(2, SignRule::nonnegative), z);
    EXPECT_EQ(*e.index, 1);
    EXPECT_DOUBLE_EQ(e.lambda, 2.0);

    e = select_entering(Eigen::Vector2d(-5.0, -2.0), Vector::Ones(2), rules(2, SignRule::nonnegative), z);
    EXPECT_FALSE(e.index);
}

TEST(SelectEntering, TiesGoToSmallestIndex)
{
    const Vector c = Eigen::Vector3d(1.0, -2.0, 2.0);
    const std::vector<Eigen::Index> z{2, 1, 0};
    const auto e = select_entering(c, Vector::Ones(3), rules(3, SignRule::free), z);
    EXPECT_EQ(*e.index, 1);
}

TEST(DescentDirection, Examples)
{
    Matrix x(3, 1);
    x << 1, 2, 2;
    const Vector r = Eigen::Vector3d(1, 0, 1);
    auto d = descent_direction(x, r);
    EXPECT_NEAR(d.delta[0], 3.0 / 9.0, 1e-15);
    EXPECT_LT((d.u - x * d.delta).norm(), 1e-15);

    std::mt19937_64 rng(1);
    const Matrix Q = oracle::orthonormal(6, 3, rng);
    const Vector r6 = oracle::gaussian(6, rng);
    d = descent_direction(Q, r6);
    EXPECT_LT((d.delta - Q.transpose() * r6).cwiseAbs().maxCoeff(), 1e-12);

    // X^T X = [[2,1],[1,2]], X^T r = [1, 2] -> delta = [0, 1].
    Matrix X(3, 2);
    X << 1, 0, 1, 1, 0, 1;
    const Vector r3 = Eigen::Vector3d(0, 1, 1);
    d = descent_direction(X, r3);
    EXPECT_NEAR(d.delta[0], 0.0, 1e-14);
    EXPECT_NEAR(d.delta[1], 1.0, 1e-14);
}

TEST(DescentDirection, RankDeficiencyNamesActiveSet)
{
    Matrix X(3, 2);
    X << 1, 2, 1, 2, 1, 2;
    const std::vector<Eigen::Index> act{4, 9};
    try {
        descent_direction(X, Vector::Ones(3), act);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("[4,9]"), std::string::npos) << e.what();
    }
}

TEST(StepLength, Examples)
{
    const Vector gamma = Vector::Ones(2);
    const auto free = rules(2, SignRule::free);
    {
        const Vector c = Vector::Zero(2), a = Vector::Zero(2), beta = Vector::Zero(2), delta(0);
        const auto ev = step_length({c, a, 1.0, gamma, free, {}, {}, beta, delta, true, std::nullopt});
        EXPECT_EQ(ev.alpha, 1.0);
        EXPECT_EQ(ev.cause, StepCause::terminal);
        EXPECT_FALSE(ev.index);
    }
    {
        // Orthonormal columns, c = [3, 1], variable 0 active with delta = 3, so a = [3, 0].
        const Vector c = Eigen::Vector2d(3, 1), a = Eigen::Vector2d(3, 0), beta = Vector::Zero(2);
        const Vector delta = Vector::Constant(1, 3.0);
        const std::vector<Eigen::Index> inactive{1}, active{0};
        const auto ev = step_length({c, a, 3.0, gamma, free, inactive, active, beta, delta, true, std::nullopt});
        EXPECT_NEAR(ev.alpha, 2.0 / 3.0, 1e-15);
        EXPECT_EQ(ev.cause, StepCause::entered_plus);
        EXPECT_EQ(*ev.index, 1);
    }
    {
        const Vector c = Vector::Zero(1), a = Vector::Zero(1);
        const Vector beta = Vector::Constant(1, 0.5), delta = Vector::Constant(1, -1.0);
        const std::vector<Eigen::Index> active{0};
        const auto ev = step_length({c, a, 1.0, Vector::Ones(1), rules(1, SignRule::free), {}, active, beta, delta, true, std::nullopt});
        EXPECT_DOUBLE_EQ(ev.alpha, 0.5);
        EXPECT_EQ(ev.cause, StepCause::zero_crossed);
        EXPECT_EQ(ev.crossings, std::vector<Eigen::Index>{0});
    }
}

TEST(StepLength, SignConstraintDropsBranch)
{
    // Only the minus branch would fire; a nonnegative variable never takes it.
    const Vector c = Eigen::Vector2d(2, -1.5), a = Eigen::Vector2d(2, 0), beta = Vector::Zero(2);
    const Vector delta = Vector::Constant(1, 1.0);
    const std::vector<Eigen::Index> inactive{1}, active{0};
    const auto nn = rules(2, SignRule::nonnegative);
    auto ev = step_length({c, a, 2.0, Vector::Ones(2), nn, inactive, active, beta, delta, true, std::nullopt});
    EXPECT_NEAR(ev.alpha, (2.0 - 1.5) / 2.0 + 1.0, 1.0);  // plus branch: (2 + 1.5) / (2 - 0) > 1
    EXPECT_EQ(ev.cause, StepCause::terminal);
    const auto fr = rules(2, SignRule::free);
    ev = step_length({c, a, 2.0, Vector::Ones(2), fr, inactive, active, beta, delta, true, std::nullopt});
    EXPECT_EQ(ev.cause, StepCause::entered_minus);
    EXPECT_NEAR(ev.alpha, 0.25, 1e-15);
}

TEST(StepLength, SimultaneousCrossingsAreAllReported)
{
    const Vector c = Vector::Zero(3), a = Vector::Zero(3);
    const Vector beta = Eigen::Vector3d(0.5, 0.0, -0.5);
    const Vector delta = Eigen::Vector2d(1.0, -1.0);
    const std::vector<Eigen::Index> active{2, 0};
    const auto ev = step_length({c, a, 1.0, Vector::Ones(3), rules(3, SignRule::free), {}, active, beta, delta, true, std::nullopt});
    EXPECT_EQ(ev.cause, StepCause::zero_crossed);
    EXPECT_EQ(*ev.index, 0);
    EXPECT_EQ(ev.crossings, (std::vector<Eigen::Index>{0, 2}));
}

TEST(DropZeroed, Examples)
{
    std::vector<Eigen::Index> A{3, 1, 7}, Z{0, 2, 4, 5, 6};
    Vector beta = Vector::Zero(8);
    beta[3] = 1.0;
    beta[7] = -2.0;
    auto dropped = drop_zeroed(A, Z, beta);
    EXPECT_EQ(A, (std::vector<Eigen::Index>{3, 7}));
    EXPECT_EQ(Z, (std::vector<Eigen::Index>{0, 1, 2, 4, 5, 6}));
    EXPECT_EQ(dropped, std::vector<Eigen::Index>{1});

    dropped = drop_zeroed(A, Z, beta);
    EXPECT_TRUE(dropped.empty());
    EXPECT_EQ(A, (std::vector<Eigen::Index>{3, 7}));

    beta[3] = 0.0;
    beta[7] = 0.0;
    dropped = drop_zeroed(A, Z, beta);
    EXPECT_TRUE(A.empty());
    EXPECT_EQ(dropped.size(), 2u);
}

TEST(AugmentSmooth, Examples)
{
    const Problem pr(Matrix::Ones(2, 3), Vector::Ones(2));
    const auto aug = augment_smooth(pr, 4.0, LinearOperator::first_difference(3), Vector::Ones(3));
    ASSERT_EQ(aug.n(), 4);
    Matrix bottom(2, 3);
    bottom << -2, 2, 0, 0, -2, 2;
    EXPECT_EQ(Matrix(aug.X().bottomRows(2)), bottom);
    EXPECT_EQ(aug.y().tail(2), Vector::Zero(2));

    const auto none = augment_smooth(pr, 0.0, LinearOperator::first_difference(3), Vector::Ones(3));
    EXPECT_EQ(none.n(), 2);

    const auto zref = augment_smooth(pr, 4.0, LinearOperator::first_difference(3), Eigen::Vector3d(1, 0, 2));
    EXPECT_EQ(zref.X().col(1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(augment_smooth(pr, -1.0, LinearOperator::first_difference(3), std::nullopt), ValidationError);
}

TEST(Variant, Validation)
{
    const Problem pr(Matrix::Identity(3, 3), Vector::Ones(3));
    Variant v;
    v.tag = VariantTag::ALASSO;
    EXPECT_THROW(amnr_path(pr, v), ValidationError);
    EXPECT_THROW(amnr_path(pr, Variant::alasso(Eigen::Vector3d(1, 0, 1))), ValidationError);
    EXPECT_THROW(amnr_path(pr, Variant::alasso(Eigen::Vector3d(1, -1, 1))), ValidationError);
    v = {};
    v.tag = VariantTag::NNG;
    EXPECT_THROW(amnr_path(pr, v), ValidationError);
    EXPECT_THROW(amnr_path(pr, Variant::nng(Vector::Zero(3))), ValidationError);
    EXPECT_THROW(amnr_path(pr, Variant::nng(Vector::Ones(2))), ValidationError);
    EXPECT_THROW(amnr_path(pr, Variant::smooth(VariantTag::SLASSO, -1.0)), ValidationError);
    AmnrConfig cfg;
    cfg.max_active = 4;
    EXPECT_THROW(amnr_path(pr, Variant::lasso(), cfg), ValidationError);
    for (auto t : {VariantTag::LASSO, VariantTag::ALASSO, VariantTag::NNG, VariantTag::SNNG, VariantTag::NN_SLASSO,
                   VariantTag::SLASSO, VariantTag::ENET_L}) {
        EXPECT_EQ(variant_tag_from_string(to_string(t)), t);
    }
}

TEST(AmnrPath, KnotZeroIsEmptyModel)
{
    std::mt19937_64 rng(2);
    const Problem pr = random_problem(rng, 15, 6);
    const auto path = amnr_path(pr, Variant::lasso());
    EXPECT_DOUBLE_EQ(path[0].lambda, (pr.X().transpose() * pr.y()).cwiseAbs().maxCoeff());
    EXPECT_EQ(path[0].beta, Vector::Zero(6));
    EXPECT_TRUE(path[0].cause == StepCause::entered_plus || path[0].cause == StepCause::entered_minus);
    EXPECT_EQ(path.back().cause, StepCause::terminal);
    EXPECT_EQ(path.back().lambda, 0.0);
}

TEST(AmnrPath, ZeroResponseGivesSingleKnot)
{
    std::mt19937_64 rng(3);
    const Problem pr(oracle::gaussian(5, 4, rng), Vector::Zero(5));
    const auto path = amnr_path(pr, Variant::lasso());
    ASSERT_EQ(path.size(), 1u);
    EXPECT_EQ(path[0].lambda, 0.0);
    EXPECT_EQ(path[0].beta, Vector::Zero(4));
}

TEST(AmnrPath, OrthonormalMatchesSoftThreshold)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix X = oracle::orthonormal(12, 5, rng);
        const Problem pr(X, 3.0 * oracle::gaussian(12, rng));
        const Vector c = X.transpose() * pr.y();
        const auto path = amnr_path(pr, Variant::lasso());
        EXPECT_LT((path.back().beta - c).cwiseAbs().maxCoeff(), 1e-8);
        const WorkingProblem wp = working_problem(pr, Variant::lasso());
        for (double f : {0.05, 0.3, 0.6, 0.9, 1.2}) {
            const double lam = f * c.cwiseAbs().maxCoeff();
            const Solution s = solution_from_path(wp, path, lam);
            for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(s.beta[j], oracle::soft_threshold(c[j], lam), 1e-8);
        }
    }
}

TEST(AmnrPath, MatchesCoordinateDescentOracle)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Problem pr = random_problem(rng, 20, 8);
        const double lam0 = (pr.X().transpose() * pr.y()).cwiseAbs().maxCoeff();
        for (int i = 0; i < 5; ++i) {
            const double lam = u(rng) * lam0;
            const Vector ref = oracle::cd_lasso(pr.X(), pr.y(), lam);
            const Solution s = solve_at_lambda(pr, Variant::lasso(), lam);
            EXPECT_LT((s.beta - ref).cwiseAbs().maxCoeff(), 1e-6);
            EXPECT_TRUE(s.converged);
        }
    }
}

TEST(AmnrPath, AllVariantsSatisfyKkt)
{
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 8; ++trial) {
        const bool scaled = trial % 2 == 1;
        const Eigen::Index n = trial < 4 ? 25 : 10;
        const Eigen::Index p = 12;
        const Problem pr = random_problem(rng, n, p, scaled);
        std::uniform_real_distribution<double> g(0.3, 3.0);
        Vector gamma(p), ref(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            gamma[j] = g(rng);
            ref[j] = (j % 4 == 3) ? 0.0 : (j % 2 ? -g(rng) : g(rng));
        }
        const std::vector<Variant> variants{Variant::lasso(),
                                            Variant::alasso(gamma),
                                            Variant::nng(ref),
                                            Variant::snng(ref, 2.0),
                                            Variant::smooth(VariantTag::NN_SLASSO, 3.0),
                                            Variant::smooth(VariantTag::SLASSO, 1.5),
                                            Variant::smooth(VariantTag::ENET_L, 0.5)};
        for (const auto& v : variants) {
            const auto path = amnr_path(pr, v);
            expect_path_invariants(pr, v, path);
            if (v.reference) {
                for (const auto& knot : path) {
                    for (Eigen::Index j = 0; j < p; ++j) {
                        if ((*v.reference)[j] == 0.0) {
                            EXPECT_EQ(knot.beta[j], 0.0);
                        }
                        if (knot.beta[j] != 0.0) {
                            EXPECT_GT(knot.beta[j] * (*v.reference)[j], 0.0);
                        }
                    }
                }
            }
        }
    }
}

TEST(AmnrPath, InterpolatedSignConstrainedStaysFeasible)
{
    std::mt19937_64 rng(7);
    const Problem pr = random_problem(rng, 15, 10);
    const Variant v = Variant::smooth(VariantTag::NN_SLASSO, 1.0);
    const WorkingProblem wp = working_problem(pr, v);
    const auto path = amnr_path(wp);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        for (double t : {0.25, 0.5, 0.75}) {
            const double lam = (1 - t) * path[k].lambda + t * path[k + 1].lambda;
            EXPECT_GE(interpolate_working(path, lam).minCoeff(), -1e-12);
        }
    }
}

TEST(AmnrPath, MaxActiveStopsPath)
{
    std::mt19937_64 rng(8);
    const Problem pr = random_problem(rng, 20, 10);
    AmnrConfig cfg;
    cfg.max_active = 3;
    const auto path = amnr_path(pr, Variant::lasso(), cfg);
    expect_path_invariants(pr, Variant::lasso(), path, cfg);
    EXPECT_NE(path.back().cause, StepCause::terminal);
    EXPECT_EQ(path.back().active.size(), 3u);
}

TEST(AmnrPath, CollinearColumnIsSkippedWithWarning)
{
    std::mt19937_64 rng(9);
    Matrix X = oracle::gaussian(10, 4, rng);
    X.col(3) = X.col(1);
    const Problem pr(X, X.col(1) + 0.3 * oracle::gaussian(10, rng));
    const auto path = amnr_path(pr, Variant::lasso());
    bool warned = false;
    for (const auto& k : path) {
        for (const auto& w : k.warnings) warned = warned || w.find("collinear") != std::string::npos;
        const auto rep = kkt_check(working_problem(pr, Variant::lasso()), k.working, k.lambda);
        EXPECT_LE(rep.max_active_gap, 1e-8);
    }
    EXPECT_TRUE(warned);
}

TEST(AmnrPath, LassoWithRemovalEvents)
{
    // Correlated design where the lasso path drops a variable.
    std::mt19937_64 rng(10);
    int drops = 0;
    for (int trial = 0; trial < 30; ++trial) {
        Matrix X = oracle::gaussian(30, 8, rng);
        X.col(1) = 0.9 * X.col(0) + 0.3 * X.col(1);
        X.col(2) = -0.8 * X.col(0) + 0.4 * X.col(2);
        const Vector y = X.col(0) * 1.0 - X.col(1) * 2.0 + X.col(2) + 0.3 * oracle::gaussian(30, rng);
        const Problem pr(X, y);
        const auto path = amnr_path(pr, Variant::lasso());
        expect_path_invariants(pr, Variant::lasso(), path);
        for (const auto& k : path) drops += k.cause == StepCause::zero_crossed;
    }
    EXPECT_GT(drops, 0);
}

TEST(AmnrPath, NoRemovalStillTerminates)
{
    std::mt19937_64 rng(11);
    const Problem pr = random_problem(rng, 20, 6);
    AmnrConfig cfg;
    cfg.allow_removal = false;
    const auto path = amnr_path(pr, Variant::lasso(), cfg);
    for (const auto& k : path) EXPECT_NE(k.cause, StepCause::zero_crossed);
}

TEST(Reductions, AlassoUnitWeightsIsLasso)
{
    std::mt19937_64 rng(12);
    const Problem pr = random_problem(rng, 20, 8);
    const auto a = amnr_path(pr, Variant::lasso());
    const auto b = amnr_path(pr, Variant::alasso(Vector::Ones(8)));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_NEAR(a[k].lambda, b[k].lambda, 1e-10);
        EXPECT_LT((a[k].beta - b[k].beta).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Reductions, InfiniteWeightExcludesVariable)
{
    std::mt19937_64 rng(13);
    const Problem pr = random_problem(rng, 20, 5);
    Vector g = Vector::Ones(5);
    g[0] = std::numeric_limits<double>::infinity();
    for (const auto& k : amnr_path(pr, Variant::alasso(g))) EXPECT_EQ(k.beta[0], 0.0);
}

TEST(NngPath, FinalKnotIsNonnegativeLeastSquares)
{
    std::mt19937_64 rng(14);
    Eigen::Index bound = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Problem pr = random_problem(rng, 50, 5);
        // A perturbed reference so that some nonnegativity constraints bind.
        const Vector ref = pr.X().colPivHouseholderQr().solve(pr.y()) + oracle::gaussian(5, rng);
        const auto path = amnr_path(pr, Variant::nng(ref));
        EXPECT_EQ(path.back().cause, StepCause::terminal);
        const Vector w = oracle::nnls_enumerate(pr.X() * ref.asDiagonal(), pr.y());
        EXPECT_LT((path.back().working - w).cwiseAbs().maxCoeff(), 1e-9);
        bound += (w.array() == 0.0).count();
    }
    EXPECT_GT(bound, 0);
}

TEST(NngPath, TinyReferenceEntriesStillEnter)
{
    // OLS reference with near-zero entries: the final knot must still reach the OLS fit.
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 50; ++trial) {
        const Problem pr = random_problem(rng, 50, 5);
        const Vector ols = pr.X().colPivHouseholderQr().solve(pr.y());
        const auto path = amnr_path(pr, Variant::nng(ols));
        const Vector w = oracle::nnls_enumerate(pr.X() * ols.asDiagonal(), pr.y());
        EXPECT_LT((path.back().beta - w.cwiseProduct(ols)).cwiseAbs().maxCoeff(), 1e-6) << trial;
    }
}

TEST(Kkt, DetectsPerturbation)
{
    std::mt19937_64 rng(15);
    const Problem pr = random_problem(rng, 20, 8);
    const WorkingProblem wp = working_problem(pr, Variant::lasso());
    const auto path = amnr_path(wp);
    const auto& knot = path[path.size() / 2];
    ASSERT_FALSE(knot.active.empty());
    Vector w = knot.working;
    w[knot.active.front()] += 1e-3;
    EXPECT_GT(kkt_check(wp, w, knot.lambda).max_active_gap, 1e-4);
    EXPECT_LE(kkt_check(wp, path[0].working, path[0].lambda).max_inactive_excess, 0.0);
}

TEST(SolveAtLambda, KnotsAndBounds)
{
    std::mt19937_64 rng(16);
    const Problem pr = random_problem(rng, 20, 8);
    const WorkingProblem wp = working_problem(pr, Variant::lasso());
    const auto path = amnr_path(wp);
    for (const auto& knot : path) {
        EXPECT_LT((solution_from_path(wp, path, knot.lambda).beta - knot.beta).cwiseAbs().maxCoeff(), 1e-14);
    }
    EXPECT_EQ(solve_at_lambda(pr, Variant::lasso(), path[0].lambda).beta, Vector::Zero(8));
    EXPECT_EQ(solve_at_lambda(pr, Variant::lasso(), 10 * path[0].lambda).beta, Vector::Zero(8));
    EXPECT_THROW(solve_at_lambda(pr, Variant::lasso(), -1.0), ValidationError);
    const Solution s = solve_at_lambda(pr, Variant::lasso(), 0.3 * path[0].lambda);
    ModelSpec spec;
    spec.terms.push_back({PenaltyKind::L1, LinearOperator::identity(8), 1.0, std::nullopt});
    spec.lambda = s.lambda;
    EXPECT_NEAR(s.objective, objective(pr, spec, s.beta), 1e-10 * s.objective);
}

TEST(ActiveGram, AddRemoveMatchesDirectSolve)
{
    std::mt19937_64 rng(17);
    const Matrix X = oracle::gaussian(20, 8, rng);
    detail::ActiveGram g(X);
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j : {3, 0, 6, 1, 5}) {
        ASSERT_TRUE(g.add(j));
        cols.push_back(j);
    }
    auto check = [&] {
        Matrix XA(20, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t h = 0; h < cols.size(); ++h) XA.col(static_cast<Eigen::Index>(h)) = X.col(cols[h]);
        const Vector rhs = Vector::LinSpaced(XA.cols(), 1.0, 2.0);
        const Vector direct = (XA.transpose() * XA).ldlt().solve(rhs);
        EXPECT_LT((g.solve(rhs) - direct).cwiseAbs().maxCoeff(), 1e-10);
    };
    check();
    g.remove(1);
    cols.erase(cols.begin() + 1);
    check();
    g.remove(3);
    cols.erase(cols.begin() + 3);
    check();
    ASSERT_TRUE(g.add(2));
    cols.push_back(2);
    check();
}
