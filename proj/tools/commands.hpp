#pragma once

#include <chrono>
#include <map>

#include "config.hpp"
#include "io.hpp"
#include "log.hpp"
#include "mpls/mpls.hpp"

namespace mpls::cli {

inline constexpr const char* version = "1.0.0";

inline json metadata(const RunConfig& cfg, std::string_view command)
{
    return {{"tool", "mpls"}, {"version", version}, {"command", command}, {"config", to_json(cfg)}};
}

struct LoadedProblem {
    Problem problem;
    std::optional<Vector> truth;
    std::string source;
};

inline LoadedProblem load_problem(const RunConfig& cfg)
{
    if (cfg.X_file) {
        Matrix X = read_matrix_csv(*cfg.X_file);
        Vector y = read_vector_csv(*cfg.y_file);
        log::info("read problem " + std::to_string(X.rows()) + "x" + std::to_string(X.cols()) + " from " +
                  *cfg.X_file);
        return {Problem(std::move(X), std::move(y)), std::nullopt, "files"};
    }
    SimSample s = generate(cfg.simulation, make_truth(cfg.simulation.p));
    log::info("simulated problem n=" + std::to_string(cfg.simulation.n) + " p=" + std::to_string(cfg.simulation.p) +
              " seed=" + std::to_string(cfg.simulation.seed));
    return {std::move(s.problem), std::move(s.truth.beta_true), "simulation"};
}

inline std::optional<LinearOperator> custom_operator(const RunConfig& cfg, Eigen::Index p)
{
    if (!cfg.model.operator_file) return std::nullopt;
    const Matrix L = read_matrix_csv(*cfg.model.operator_file);
    if (L.cols() != p) {
        throw ValidationError("operator " + *cfg.model.operator_file + " has " + std::to_string(L.cols()) +
                              " columns, expected " + std::to_string(p));
    }
    return LinearOperator::custom(L);
}

inline std::optional<Vector> load_reference(const RunConfig& cfg, const Problem& problem)
{
    if (!needs_reference(cfg.model.model)) {
        if (cfg.model.reference) throw ValidationError("model " + std::string(to_string(cfg.model.model)) +
                                                       " does not take a reference");
        return std::nullopt;
    }
    if (!cfg.model.reference) {
        throw ValidationError("model " + std::string(to_string(cfg.model.model)) +
                              " needs model.reference (a vector file or \"OLS\")");
    }
    if (*cfg.model.reference == ols_reference) return ols_solve(problem);
    Vector ref = read_vector_csv(*cfg.model.reference);
    if (ref.size() != problem.p()) {
        throw ValidationError("reference has " + std::to_string(ref.size()) + " entries, expected " +
                              std::to_string(problem.p()));
    }
    return ref;
}

inline Variant build_variant(const RunConfig& cfg, const Problem& problem)
{
    Variant v = amnr_variant(cfg.model.model, cfg.model.lambda_sm, load_reference(cfg, problem));
    if (auto op = custom_operator(cfg, problem.p())) v.smooth_op = std::move(op);
    return v;
}

inline ModelSpec build_spec(const RunConfig& cfg, Eigen::Index p)
{
    ModelSpec spec = mnr_model_spec(cfg.model.model, p, cfg.model.l1_share);
    if (auto op = custom_operator(cfg, p)) {
        for (auto& t : spec.terms) {
            if (t.op.kind() != OperatorKind::identity) t.op = *op;
        }
    }
    return spec;
}

inline LinearOperator ridge_operator(const RunConfig& cfg, Eigen::Index p)
{
    if (cfg.model.model == ModelKind::Ridge_I) return LinearOperator::identity(p);
    if (auto op = custom_operator(cfg, p)) return *op;
    return LinearOperator::second_difference(p);
}

inline json kkt_json(const KktReport& r, double tol)
{
    return {{"max_active_gap", r.max_active_gap},
            {"max_inactive_excess", number_or_null(r.max_inactive_excess)},
            {"sign_violations", r.sign_violations},
            {"tol", tol},
            {"passed", r.passed(tol)}};
}

inline json curve_json(const std::vector<GcvPoint>& curve)
{
    json a = json::array();
    for (const auto& pt : curve) {
        a.push_back({{"lambda", pt.lambda}, {"rss", pt.rss}, {"df", pt.df}, {"gcv", number_or_null(pt.gcv)}});
    }
    return a;
}

inline PathKnot knot_from_working(const WorkingProblem& wp, const Vector& working, double lambda)
{
    PathKnot k;
    k.lambda = lambda;
    k.working = working;
    k.beta = wp.to_beta(working);
    for (Eigen::Index j = 0; j < working.size(); ++j) {
        if (working[j] != 0.0) k.active.push_back(j);
    }
    return k;
}

// ---------------------------------------------------------------------------

inline int cmd_simulate(const RunConfig& cfg)
{
    const SimTruth truth = make_truth(cfg.simulation.p);
    const SimSample s = generate(cfg.simulation, truth);
    ensure_directory(cfg.out);
    write_matrix_csv(cfg.out / "X.csv", s.problem.X());
    write_vector_csv(cfg.out / "y.csv", s.problem.y());
    write_vector_csv(cfg.out / "beta_true.csv", truth.beta_true);
    json meta = metadata(cfg, "simulate");
    meta["seed"] = cfg.simulation.seed;
    meta["n"] = cfg.simulation.n;
    meta["p"] = cfg.simulation.p;
    meta["noise_sigma"] = cfg.simulation.noise_sigma;
    meta["support_size"] = std::count(truth.support.begin(), truth.support.end(), true);
    meta["snr_db"] = cfg.simulation.noise_sigma > 0.0 ? json(theoretical_snr(truth, cfg.simulation.noise_sigma))
                                                      : json(nullptr);
    meta["empirical_snr_db"] = cfg.simulation.noise_sigma > 0.0 ? json(empirical_snr(s)) : json(nullptr);
    meta["index_base"] = 1;
    meta["rng"] = "std::mt19937_64 seeded by std::seed_seq{seed low 32 bits, seed high 32 bits, n}; "
                  "std::normal_distribution (libstdc++); X row-major, then noise";
    write_json(cfg.out / "meta.json", meta);
    log::info("wrote simulation to " + cfg.out.string());
    return 0;
}

inline int cmd_solve(const RunConfig& cfg)
{
    const LoadedProblem lp = load_problem(cfg);
    const Problem& pr = lp.problem;
    const bool fixed = cfg.lambda.policy == "fixed";
    json out = metadata(cfg, "solve");
    out["model"] = to_string(cfg.model.model);
    out["algorithm"] = to_string(cfg.model.algorithm);
    out["lambda_policy"] = cfg.lambda.policy;
    out["n"] = pr.n();
    out["p"] = pr.p();

    Solution sol;
    double df = 0.0;
    std::vector<GcvPoint> curve;
    std::optional<Vector> working;
    std::optional<KktReport> kkt;

    switch (cfg.model.algorithm) {
        case Algorithm::closed_form: {
            const LinearOperator op = ridge_operator(cfg, pr.p());
            if (fixed) {
                sol = ridge_solve(pr, op, *cfg.lambda.value);
                df = ridge_degrees_of_freedom(pr, op, sol.lambda);
            } else {
                const auto grid = lambda_grid(pr, cfg.lambda.grid_count, GridMode::singular_value_scaled,
                                              cfg.lambda.grid_floor);
                Selection sel = select_ridge(pr, op, grid);
                df = sel.curve[sel.index].df;
                curve = std::move(sel.curve);
                sol = std::move(sel.solution);
            }
            break;
        }
        case Algorithm::MNR: {
            ModelSpec spec = build_spec(cfg, pr.p());
            if (fixed) {
                spec.lambda = *cfg.lambda.value;
                sol = mnr_solve(pr, spec, cfg.mnr);
                df = degrees_of_freedom(pr, spec, sol);
            } else {
                const auto grid = lambda_grid(pr, cfg.lambda.grid_count, GridMode::singular_value_scaled,
                                              cfg.lambda.grid_floor);
                Selection sel = select_lambda(pr, spec, grid, cfg.mnr);
                df = sel.curve[sel.index].df;
                curve = std::move(sel.curve);
                sol = std::move(sel.solution);
            }
            break;
        }
        case Algorithm::AMNR: {
            const auto start = std::chrono::steady_clock::now();
            const WorkingProblem wp = working_problem(pr, build_variant(cfg, pr));
            const auto path = amnr_path(wp, cfg.amnr);
            PathKnot knot;
            if (fixed) {
                const double lam = *cfg.lambda.value;
                sol = solution_from_path(wp, path, lam);
                knot = knot_from_working(wp, interpolate_working(path, lam), lam);
            } else {
                Selection sel = select_knot(pr, wp, path);
                knot = path[sel.index];
                curve = std::move(sel.curve);
                sol = std::move(sel.solution);
            }
            sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            df = degrees_of_freedom(wp, pr.n(), knot);
            working = knot.working;
            kkt = kkt_check(wp, knot.working, knot.lambda);
            out["path_knots"] = path.size();
            break;
        }
    }

    const double rss = (pr.y() - pr.X() * sol.beta).squaredNorm();
    out["lambda"] = sol.lambda;
    out["beta"] = to_json(sol.beta);
    out["sparse_beta"] = to_json(sol.sparse_beta);
    if (working) out["working_beta"] = to_json(*working);
    out["objective"] = sol.objective;
    out["rss"] = rss;
    out["df"] = df;
    out["gcv"] = df < static_cast<double>(pr.n()) ? json(gcv(rss, df, pr.n())) : json(nullptr);
    out["converged"] = sol.converged;
    out["iterations"] = sol.iterations;
    out["epsilon"] = sol.epsilon;
    out["wall_time"] = sol.wall_time;
    if (kkt) out["kkt"] = kkt_json(*kkt, cfg.kkt_tol);
    if (!curve.empty()) out["gcv_curve"] = curve_json(curve);
    if (lp.truth) {
        out["auc"] = support_auc(*lp.truth, sol.beta);
        out["re"] = relative_error(*lp.truth, sol.beta);
    }
    ensure_directory(cfg.out);
    write_json(cfg.out / "solution.json", out);
    log::info("lambda=" + format_double(sol.lambda) + " df=" + format_double(df));
    return 0;
}

inline int cmd_path(const RunConfig& cfg)
{
    if (cfg.model.algorithm != Algorithm::AMNR) {
        throw ValidationError("path needs an AMNR model (got " + std::string(to_string(cfg.model.algorithm)) + ")");
    }
    const LoadedProblem lp = load_problem(cfg);
    const WorkingProblem wp = working_problem(lp.problem, build_variant(cfg, lp.problem));
    const auto path = amnr_path(wp, cfg.amnr);
    json out = metadata(cfg, "path");
    out["model"] = to_string(cfg.model.model);
    out["n"] = lp.problem.n();
    out["p"] = lp.problem.p();
    json knots = json::array();
    double worst = 0.0;
    bool all_passed = true;
    for (const auto& k : path) {
        const KktReport r = kkt_check(wp, k.working, k.lambda);
        worst = std::max(worst, r.max_active_gap);
        all_passed = all_passed && r.passed(cfg.kkt_tol);
        knots.push_back({{"k", k.k},
                         {"lambda", k.lambda},
                         {"alpha", k.alpha},
                         {"cause", to_string(k.cause)},
                         {"active", k.active},
                         {"beta", to_json(k.beta)},
                         {"working_beta", to_json(k.working)},
                         {"df", degrees_of_freedom(wp, lp.problem.n(), k)},
                         {"warnings", k.warnings},
                         {"kkt", kkt_json(r, cfg.kkt_tol)}});
    }
    out["knots"] = std::move(knots);
    out["kkt_max_active_gap"] = worst;
    out["kkt_passed"] = all_passed;
    ensure_directory(cfg.out);
    write_json(cfg.out / "path.json", out);
    log::info(std::to_string(path.size()) + " knots");
    return 0;
}

inline json summary_stats(const Summary& s)
{
    return {{"count", s.count},
            {"q1", number_or_null(s.q1)},
            {"median", number_or_null(s.median)},
            {"q3", number_or_null(s.q3)},
            {"mean", number_or_null(s.mean)},
            {"sd", number_or_null(s.sd)}};
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + "\"";
}

inline std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

inline int cmd_bench(const RunConfig& cfg)
{
    cfg.bench.validate();
    ensure_directory(cfg.out);
    log::info("bench: " + std::to_string(cfg.bench.combos.size()) + " combos, " +
              std::to_string(cfg.bench.repetitions) + " repetitions, " + std::to_string(cfg.workers) + " workers");
    const ExperimentResult res = run_experiment(cfg.bench, cfg.workers);

    std::string rows = "model,algorithm,n,repetition,auc,re,time,lambda_selected,error\n";
    for (const auto& r : res.rows) {
        rows += csv_field(r.model) + "," + std::string(to_string(r.algorithm)) + "," + std::to_string(r.n) + "," +
                std::to_string(r.repetition) + "," + csv_number(r.auc) + "," + csv_number(r.re) + "," +
                csv_number(r.time) + "," + csv_number(r.lambda_selected) + "," + csv_field(r.error) + "\n";
    }
    write_text(cfg.out / "results.csv", rows);

    // Per (combo, n) means, then the equal-weight average over ratios when at least three are present.
    std::string summary = "model,algorithm,n,RE,AUC,TIME,errors\n";
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < cfg.bench.combos.size(); ++i) position[cfg.bench.combos[i].name()] = i;
    auto groups = summarize(std::span<const MetricRow>(res.rows));
    std::stable_sort(groups.begin(), groups.end(), [&](const GroupSummary& a, const GroupSummary& b) {
        return std::make_pair(position[a.model], a.n) < std::make_pair(position[b.model], b.n);
    });
    for (const auto& g : groups) {
        summary += csv_field(g.model) + "," + std::string(to_string(g.algorithm)) + "," + std::to_string(g.n) + "," +
                   csv_number(g.re.mean) + "," + csv_number(g.auc.mean) + "," + csv_number(g.time.mean) + "," +
                   std::to_string(g.errors) + "\n";
    }
    if (cfg.bench.n_values.size() >= 3) {
        for (const auto& t : ratio_mean_summary(res.rows)) {
            summary += csv_field(t.model) + "," + std::string(to_string(t.algorithm)) + ",mean," +
                       csv_number(t.re) + "," + csv_number(t.auc) + "," + csv_number(t.time) + "," +
                       std::to_string(t.errors) + "\n";
        }
    }
    write_text(cfg.out / "summary.csv", summary);

    json box = metadata(cfg, "bench");
    box["quartile_convention"] = "linear interpolation between order statistics at position (m - 1) q";
    json gj = json::array();
    for (const auto& g : groups) {
        gj.push_back({{"model", g.model},
                      {"algorithm", to_string(g.algorithm)},
                      {"n", g.n},
                      {"rows", g.rows},
                      {"errors", g.errors},
                      {"auc", summary_stats(g.auc)},
                      {"re", summary_stats(g.re)},
                      {"time", summary_stats(g.time)}});
    }
    box["groups"] = std::move(gj);
    write_json(cfg.out / "boxplot.json", box);

    if (cfg.bench.keep_solutions) {
        json ex = metadata(cfg, "bench");
        json items = json::array();
        for (const auto& e : median_auc_exemplar(res.rows, res.solutions)) {
            items.push_back({{"model", e.model}, {"n", e.n}, {"repetition", e.repetition}, {"auc", e.auc},
                             {"beta", to_json(e.beta)}});
        }
        ex["exemplars"] = std::move(items);
        write_json(cfg.out / "exemplars.json", ex);
    }
    std::size_t errors = 0;
    for (const auto& r : res.rows) errors += !r.ok();
    log::info(std::to_string(res.rows.size()) + " rows, " + std::to_string(errors) + " errors");
    return 0;
}

/// Verifies a solution.json (one point) or path.json (every knot) against the
/// optimality conditions of the model recorded in the file. Returns 0 when all
/// pass, 2 otherwise.
inline int cmd_kkt_verify(const RunConfig& cfg)
{
    if (!cfg.kkt_solution) throw ValidationError("kkt-verify needs a solution file (argument or kkt.solution)");
    const json sol = read_json(*cfg.kkt_solution);
    // The model is taken from the file's own metadata; the problem from the current configuration.
    // Without problem files in the current configuration, the recorded problem source is reused.
    RunConfig model_cfg = cfg;
    if (sol.contains("config")) {
        const RunConfig recorded = parse_config(sol.at("config"), fs::path(*cfg.kkt_solution).parent_path());
        model_cfg.model = recorded.model;
        if (!cfg.X_file) {
            model_cfg.X_file = recorded.X_file;
            model_cfg.y_file = recorded.y_file;
            model_cfg.simulation = recorded.simulation;
        }
    }
    if (model_cfg.model.algorithm == Algorithm::closed_form || model_cfg.model.model == ModelKind::FnLASSO) {
        throw ValidationError("kkt-verify covers the active-set model family; " +
                              std::string(to_string(model_cfg.model.model)) + " has no such form");
    }
    const LoadedProblem lp = load_problem(model_cfg);
    const WorkingProblem wp = working_problem(lp.problem, build_variant(model_cfg, lp.problem));

    auto working_of = [&](const json& item, const std::string& where) {
        Vector w;
        if (item.contains("working_beta")) {
            w = vector_from_json(item.at("working_beta"), where + ".working_beta");
        } else if (item.contains("beta")) {
            const Vector b = vector_from_json(item.at("beta"), where + ".beta");
            w = b;
            if (wp.reference) {
                for (Eigen::Index j = 0; j < b.size() && j < wp.reference->size(); ++j) {
                    w[j] = (*wp.reference)[j] != 0.0 ? b[j] / (*wp.reference)[j] : 0.0;
                }
            }
        } else {
            throw ValidationError(where + " has neither working_beta nor beta");
        }
        if (w.size() != wp.p()) {
            throw ValidationError(where + " has " + std::to_string(w.size()) + " coefficients, problem has p=" +
                                  std::to_string(wp.p()));
        }
        return w;
    };
    auto lambda_of = [](const json& item, const std::string& where) {
        if (!item.contains("lambda") || !item.at("lambda").is_number()) {
            throw ValidationError(where + " has no numeric lambda");
        }
        return item.at("lambda").get<double>();
    };

    json report = metadata(cfg, "kkt-verify");
    report["solution_file"] = *cfg.kkt_solution;
    report["model"] = to_string(model_cfg.model.model);
    bool passed = true;
    if (sol.contains("knots")) {
        json items = json::array();
        for (std::size_t i = 0; i < sol.at("knots").size(); ++i) {
            const json& k = sol.at("knots")[i];
            const std::string where = "knots[" + std::to_string(i) + "]";
            const KktReport r = kkt_check(wp, working_of(k, where), lambda_of(k, where));
            passed = passed && r.passed(cfg.kkt_tol);
            json e = kkt_json(r, cfg.kkt_tol);
            e["k"] = i;
            items.push_back(std::move(e));
        }
        report["knots"] = std::move(items);
    } else {
        const KktReport r = kkt_check(wp, working_of(sol, "solution"), lambda_of(sol, "solution"));
        passed = r.passed(cfg.kkt_tol);
        report["kkt"] = kkt_json(r, cfg.kkt_tol);
    }
    report["passed"] = passed;
    std::cout << report.dump(2) << "\n";
    ensure_directory(cfg.out);
    write_json(cfg.out / "kkt_report.json", report);
    return passed ? 0 : 2;
}

}  // namespace mpls::cli
