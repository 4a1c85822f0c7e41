// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. An optional argument overrides the number of
// benchmark repetitions in criterion 7 (default 100).

#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>

#include "mpls/mpls.hpp"
#include "oracles.hpp"

using namespace mpls;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail)
{
    std::printf("criterion %d: %s  %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Problem random_problem(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, bool scaled = false)
{
    Matrix X = oracle::gaussian(n, p, rng);
    if (scaled) {
        std::uniform_real_distribution<double> s(0.2, 5.0);
        for (Eigen::Index j = 0; j < p; ++j) X.col(j) *= s(rng);
    }
    Vector beta = Vector::Zero(p);
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(3, p); ++j) beta[j] = 1.5 - static_cast<double>(j);
    return Problem(X, X * beta + 0.5 * oracle::gaussian(n, rng));
}

ModelSpec one_term(PenaltyKind kind, const LinearOperator& op, double lambda)
{
    ModelSpec s;
    s.terms.push_back({kind, op, 1.0, std::nullopt});
    s.lambda = lambda;
    return s;
}

// Knot-by-knot comparison of two paths.
double path_distance(const std::vector<PathKnot>& a, const std::vector<PathKnot>& b)
{
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        d = std::max(d, std::abs(a[k].lambda - b[k].lambda));
        d = std::max(d, max_abs(a[k].beta - b[k].beta));
    }
    return d;
}

void criterion1()
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int fits = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const Problem pr(oracle::gaussian(20, 8, rng), oracle::gaussian(20, rng));
        const double lam0 = max_abs(pr.X().transpose() * pr.y());
        for (int i = 0; i < 5; ++i) {
            double t = 0.0;
            while (t == 0.0) t = u(rng);
            const double lam = t * lam0;
            const Vector b = solve_at_lambda(pr, Variant::lasso(), lam).beta;
            const Vector ref = oracle::cd_lasso(pr.X(), pr.y(), lam, Vector::Ones(8), false, 1e-12);
            worst = std::max(worst, max_abs(b - ref));
            ++fits;
        }
    }
    report(1, worst <= 1e-6, fmt("lasso vs coordinate descent, %d fits, max deviation %.3g (tol 1e-6)", fits, worst));
}

void criterion2()
{
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> g(0.3, 3.0);
    double gap = 0.0, excess = -std::numeric_limits<double>::infinity();
    long knots = 0, failed = 0, signs = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const Eigen::Index n = inst % 3 == 0 ? 10 : 25;
        const Eigen::Index p = 12;
        const Problem pr = random_problem(rng, n, p, inst % 2 == 1);
        Vector gamma(p), ref(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            gamma[j] = g(rng);
            ref[j] = (j % 4 == 3) ? 0.0 : (j % 2 ? -g(rng) : g(rng));
        }
        const std::vector<Variant> variants{Variant::lasso(),
                                            Variant::alasso(gamma),
                                            Variant::nng(ref),
                                            Variant::snng(ref, g(rng)),
                                            Variant::smooth(VariantTag::NN_SLASSO, g(rng)),
                                            Variant::smooth(VariantTag::SLASSO, g(rng)),
                                            Variant::smooth(VariantTag::ENET_L, g(rng))};
        for (const auto& v : variants) {
            const WorkingProblem wp = working_problem(pr, v);
            for (const auto& knot : amnr_path(wp)) {
                const auto rep = kkt_check(wp, knot.working, knot.lambda);
                gap = std::max(gap, rep.max_active_gap);
                excess = std::max(excess, rep.max_inactive_excess);
                signs += rep.sign_violations;
                failed += rep.passed(1e-8) ? 0 : 1;
                ++knots;
            }
        }
    }
    report(2, failed == 0,
           fmt("7 variants x 50 instances, %ld knots, %ld failing; max active gap %.3g, max inactive excess %.3g, "
               "sign violations %ld (tol 1e-8)",
               knots, failed, gap, excess, signs));
}

void criterion3()
{
    std::mt19937_64 rng(303);
    double ridge = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        for (auto kind : {OperatorKind::identity, OperatorKind::first_difference, OperatorKind::second_difference}) {
            const Problem pr(oracle::gaussian(12, 9, rng), oracle::gaussian(12, rng));
            const auto op = make_operator(kind, 9);
            const double lam = std::uniform_real_distribution<double>(0.05, 5.0)(rng);
            const Vector b = mnr_solve(pr, one_term(PenaltyKind::L2, op, lam)).beta;
            ridge = std::max(ridge, max_abs(b - oracle::ridge(pr.X(), pr.y(), Matrix(op.matrix()), lam)));
        }
    }
    double amnr = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const Matrix X = oracle::orthonormal(20, 6, rng);
        const Problem pr(X, oracle::gaussian(20, rng));
        const Vector c = X.transpose() * pr.y();
        const double lam = std::uniform_real_distribution<double>(0.05, 1.0)(rng) * max_abs(c);
        const Vector b = solve_at_lambda(pr, Variant::lasso(), lam).beta;
        for (Eigen::Index j = 0; j < 6; ++j) amnr = std::max(amnr, std::abs(b[j] - oracle::soft_threshold(c[j], lam)));
    }
    double mnr = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const double lam = 1.5;
        const auto o = oracle::separated_orthonormal(20, 6, lam, rng);
        const Vector b = mnr_solve(Problem(o.X, o.y), one_term(PenaltyKind::L1, LinearOperator::identity(6), lam)).beta;
        for (Eigen::Index j = 0; j < 6; ++j) mnr = std::max(mnr, std::abs(b[j] - oracle::soft_threshold(o.c[j], lam)));
    }
    report(3, ridge <= 1e-8 && amnr <= 1e-8 && mnr <= 1e-4,
           fmt("MNR pure L2 vs closed form %.3g (tol 1e-8); AMNR orthonormal vs soft threshold %.3g (tol 1e-8); "
               "MNR orthonormal vs soft threshold %.3g (tol 1e-4, |c| at least 30%% away from lambda)",
               ridge, amnr, mnr));
}

void criterion4()
{
    std::mt19937_64 rng(404);
    double alasso = 0.0, snng = 0.0, nn = 0.0, nn_oracle = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const Eigen::Index p = 8;
        const Problem pr = random_problem(rng, inst % 2 ? 12 : 25, p, inst % 3 == 0);
        alasso = std::max(alasso, path_distance(amnr_path(pr, Variant::lasso()),
                                                amnr_path(pr, Variant::alasso(Vector::Ones(p)))));
        const Vector ref = oracle::gaussian(p, rng);
        snng = std::max(snng, path_distance(amnr_path(pr, Variant::nng(ref)), amnr_path(pr, Variant::snng(ref, 0.0))));
        const auto nn_path = amnr_path(pr, Variant::smooth(VariantTag::NN_SLASSO, 0.0));
        nn = std::max(nn, path_distance(nn_path, amnr_path(pr, Variant::nng(Vector::Ones(p)))));
        for (const auto& knot : nn_path) {
            const Vector cd = oracle::cd_lasso(pr.X(), pr.y(), knot.lambda, Vector::Ones(p), true, 1e-15);
            nn_oracle = std::max(nn_oracle, max_abs(knot.beta - cd));
        }
    }
    report(4, alasso <= 1e-10 && snng <= 1e-10 && nn <= 1e-10 && nn_oracle <= 1e-10,
           fmt("ALASSO(gamma=1) vs LASSO path %.3g; SNNG(lambda_sm=0) vs NNG path %.3g; NN_SLASSO(lambda_sm=0) vs "
               "nonnegative lasso path %.3g, vs nonnegative coordinate descent at every knot %.3g (tol 1e-10)",
               alasso, snng, nn, nn_oracle));
}

void criterion5()
{
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int seed = 0; seed < 50; ++seed) {
        const Problem pr = random_problem(rng, 50, 5);
        const Vector ols = pr.X().colPivHouseholderQr().solve(pr.y());
        const auto path = amnr_path(pr, Variant::nng(ols));
        const Vector w = oracle::nnls_enumerate(pr.X() * ols.asDiagonal(), pr.y());
        worst = std::max(worst, max_abs(path.back().beta - w.cwiseProduct(ols)));
    }
    report(5, worst <= 1e-6,
           fmt("NNG with OLS reference, n=50 p=5, 50 seeds: final knot vs enumeration %.3g (tol 1e-6)", worst));
}

void criterion6()
{
    const SimTruth t = make_truth(200);
    const long nnz = (t.beta_true.array() != 0.0).count();
    const double snr = theoretical_snr(t, 1.0);
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SimConfig cfg;
        cfg.seed = seed;
        const double e = empirical_snr(generate(cfg, t));
        sum += e;
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    const double mean = sum / 20.0;
    const bool ok = nnz == 49 && t.beta_true[49] == 1.0 && t.beta_true[149] == 1.0 && std::abs(snr - 13.06) <= 0.1 &&
                    std::abs(mean - snr) <= 1.0;
    report(6, ok,
           fmt("%ld nonzeros, beta_50=%g beta_150=%g, theoretical SNR %.4f dB, empirical SNR over 20 seeds at n=100 "
               "mean %.3f dB (range %.3f..%.3f)",
               nnz, t.beta_true[49], t.beta_true[149], snr, mean, lo, hi));
}

void criterion7(int reps)
{
    ExperimentPlan plan;
    plan.n_values = {100};
    plan.repetitions = reps;
    const auto A = Algorithm::AMNR;
    plan.combos = {{ModelKind::Ridge_I, Algorithm::closed_form, "", ""},
                   {ModelKind::FnLASSO, Algorithm::MNR, "", ""},
                   {ModelKind::SLASSO, A, "", ""},
                   {ModelKind::ENET_L, A, "", ""},
                   {ModelKind::NN_SLASSO, A, "", ""},
                   {ModelKind::SNNG, A, "FnLASSO-MNR", ""}};
    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    const auto result = run_experiment(plan, workers);
    std::map<std::string, GroupSummary> g;
    std::size_t errors = 0;
    for (const auto& s : summarize(std::span<const MetricRow>(result.rows))) {
        g[s.model] = s;
        errors += s.errors;
    }
    const double slasso = g["SLASSO-AMNR"].auc.median;
    const double enet = g["ENET_L-AMNR"].auc.median;
    const double nn = g["NN_SLASSO-AMNR"].re.median;
    const double snng = g["SNNG-AMNR(FnLASSO-MNR)"].re.median;
    const double ridge = g["Ridge_I"].auc.mean;
    const bool ok =
        errors == 0 && slasso >= 0.85 && enet >= 0.85 && nn <= 0.45 && snng <= 0.45 && std::abs(ridge - 0.6982) <= 0.1;
    report(7, ok,
           fmt("p=200 n=100, %d repetitions: median AUC SLASSO %.4f, ENET_L %.4f (>= 0.85); median RE NN_SLASSO %.4f, "
               "SNNG(FnLASSO) %.4f (<= 0.45); mean AUC Ridge_I %.4f (0.6982 +- 0.1); %zu failed fits",
               reps, slasso, enet, nn, snng, ridge, errors));
}

void criterion8()
{
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u(0.05, 3.0), share(0.0, 1.0);
    double fd_worst = 0.0;
    bool fd_ok = true;
    double ascent = -std::numeric_limits<double>::infinity();
    for (int cfg = 0; cfg < 20; ++cfg) {
        const Eigen::Index p = 8;
        const Problem pr(oracle::gaussian(12, p, rng), oracle::gaussian(12, rng));
        ModelSpec spec;
        const double a = share(rng);
        spec.terms.push_back({PenaltyKind::L1, LinearOperator::identity(p), a, std::nullopt});
        Vector w(p - 1);
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = u(rng);
        spec.terms.push_back({PenaltyKind::L2, cfg % 2 ? LinearOperator::first_difference(p)
                                                       : LinearOperator::second_difference(p),
                              1.0 - a, cfg % 2 ? std::optional<Vector>(w) : std::nullopt});
        spec.lambda = u(rng);

        const Vector b = oracle::gaussian(p, rng);
        for (double eps : {1e-2, 1e-4}) {
            const Vector grad = smooth_gradient(pr, spec, b, eps);
            const Vector fd =
                oracle::finite_difference([&](const Vector& x) { return perturbed_objective(pr, spec, x, eps); }, b);
            const double err = max_abs(grad - fd);
            fd_worst = std::max(fd_worst, err);
            fd_ok = fd_ok && err <= std::max(1e-5, 1e-4 * grad.norm());
        }

        std::vector<Vector> iterates;
        double eps = 0.0;
        MnrConfig mc;
        mc.on_iterate = [&](const MnrState& s) {
            iterates.push_back(s.beta);
            eps = s.epsilon;
        };
        mnr_solve(pr, spec, mc);
        for (std::size_t k = 1; k < iterates.size(); ++k) {
            ascent = std::max(ascent, perturbed_objective(pr, spec, iterates[k], eps) -
                                          perturbed_objective(pr, spec, iterates[k - 1], eps));
        }
    }
    std::printf("note: the EEG study (accuracy, localization and blurring table, brain maps) is not "
                "reproducible here: the lead field it depends on is not available. Substitute checks follow.\n");
    report(8, fd_ok && ascent <= 1e-10 && failures == 0,
           fmt("20 random convex configurations: gradient vs central differences max error %.3g "
               "(tol max(1e-5, 1e-4 |g|)); largest objective increase between MNR iterates %.3g (tol 1e-10); "
               "criteria 1-7 %s",
               fd_worst, ascent, failures == 0 ? "all pass" : "have failures"));
}

}  // namespace

int main(int argc, char** argv)
{
    const int reps = argc > 1 ? std::atoi(argv[1]) : 100;
    if (reps < 1) {
        std::fprintf(stderr, "usage: %s [repetitions]\n", argv[0]);
        return 2;
    }
    try {
        criterion1();
        criterion2();
        criterion3();
        criterion4();
        criterion5();
        criterion6();
        criterion7(reps);
        criterion8();
    } catch (const std::exception& e) {
        std::printf("aborted: %s\n", e.what());
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
