#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mpls/amnr.hpp"
#include "mpls/metrics.hpp"
#include "mpls/mnr.hpp"
#include "mpls/selection.hpp"
#include "mpls/simulation.hpp"

namespace mpls {

enum class ModelKind { Ridge_I, Ridge_L, LASSO, FnLASSO, SLASSO, ENET_L, ALASSO, NNG, SNNG, NN_SLASSO };

inline std::string_view to_string(ModelKind m)
{
    switch (m) {
        case ModelKind::Ridge_I: return "Ridge_I";
        case ModelKind::Ridge_L: return "Ridge_L";
        case ModelKind::LASSO: return "LASSO";
        case ModelKind::FnLASSO: return "FnLASSO";
        case ModelKind::SLASSO: return "SLASSO";
        case ModelKind::ENET_L: return "ENET_L";
        case ModelKind::ALASSO: return "ALASSO";
        case ModelKind::NNG: return "NNG";
        case ModelKind::SNNG: return "SNNG";
        case ModelKind::NN_SLASSO: return "NN_SLASSO";
    }
    return "unknown";
}

inline ModelKind model_kind_from_string(std::string_view name)
{
    for (auto m : {ModelKind::Ridge_I, ModelKind::Ridge_L, ModelKind::LASSO, ModelKind::FnLASSO, ModelKind::SLASSO,
                   ModelKind::ENET_L, ModelKind::ALASSO, ModelKind::NNG, ModelKind::SNNG, ModelKind::NN_SLASSO}) {
        if (name == to_string(m)) return m;
    }
    throw ValidationError("unknown model '" + std::string(name) + "'");
}

inline bool needs_reference(ModelKind m)
{
    return m == ModelKind::ALASSO || m == ModelKind::NNG || m == ModelKind::SNNG;
}

inline bool supports(ModelKind m, Algorithm a)
{
    switch (a) {
        case Algorithm::closed_form: return m == ModelKind::Ridge_I || m == ModelKind::Ridge_L;
        case Algorithm::MNR:
            return m == ModelKind::LASSO || m == ModelKind::FnLASSO || m == ModelKind::SLASSO || m == ModelKind::ENET_L;
        case Algorithm::AMNR:
            return m == ModelKind::LASSO || m == ModelKind::SLASSO || m == ModelKind::ENET_L ||
                   m == ModelKind::ALASSO || m == ModelKind::NNG || m == ModelKind::SNNG || m == ModelKind::NN_SLASSO;
    }
    return false;
}

inline constexpr std::string_view ols_reference = "OLS";

/// One (model, algorithm) entry of a plan. reference is empty, "OLS", or the
/// label of an earlier combo whose selected solution is reused.
struct Combo {
    ModelKind model = ModelKind::LASSO;
    Algorithm algorithm = Algorithm::AMNR;
    std::string reference;
    std::string label;

    std::string name() const
    {
        if (!label.empty()) return label;
        std::string s(to_string(model));
        if (algorithm != Algorithm::closed_form) s += "-" + std::string(to_string(algorithm));
        if (!reference.empty()) s += "(" + reference + ")";
        return s;
    }
};

struct ExperimentPlan {
    Eigen::Index p = 200;
    std::vector<Eigen::Index> n_values{10, 50, 100};
    int repetitions = 100;
    std::vector<Combo> combos;
    std::uint64_t seed_base = 1;
    double noise_sigma = 1.0;
    // Grid used for ridge and MNR fits.
    int grid_count = 50;
    double grid_floor = 1e-4;
    // Weight of the L2 smoothness block for SNNG, NN_SLASSO, SLASSO and ENET_L under AMNR.
    double lambda_sm = 3000.0;
    // Share of lambda given to the L1 term of SLASSO and ENET_L under MNR.
    double mnr_l1_share = 0.5;
    MnrConfig mnr{};
    AmnrConfig amnr{};
    bool keep_solutions = false;

    void validate() const
    {
        detail::require(repetitions >= 1, "repetitions must be >= 1");
        detail::require(!n_values.empty(), "n_values is empty");
        for (auto n : n_values) detail::require(n >= 1, "every n must be >= 1");
        detail::require(p >= 151, "the simulation truth needs p >= 151");
        detail::require(!combos.empty(), "plan has no combos");
        detail::require(grid_count >= 2, "grid_count must be >= 2");
        detail::require(grid_floor > 0.0 && grid_floor < 1.0, "grid_floor must lie in (0, 1)");
        detail::require(std::isfinite(lambda_sm) && lambda_sm >= 0.0, "lambda_sm must be finite and >= 0");
        detail::require(mnr_l1_share >= 0.0 && mnr_l1_share <= 1.0, "mnr_l1_share must lie in [0, 1]");
        detail::require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise_sigma must be finite and >= 0");
        mnr.validate();
        std::set<std::string> seen;
        for (const auto& c : combos) {
            const std::string name = c.name();
            detail::require(supports(c.model, c.algorithm), "combo " + name + ": model " +
                                                                std::string(to_string(c.model)) +
                                                                " is not available with " +
                                                                std::string(to_string(c.algorithm)));
            if (needs_reference(c.model)) {
                detail::require(!c.reference.empty(), "combo " + name + " needs a reference");
            } else {
                detail::require(c.reference.empty(), "combo " + name + " does not take a reference");
            }
            if (!c.reference.empty() && c.reference != ols_reference) {
                detail::require(seen.count(c.reference) == 1,
                                "combo " + name + " references '" + c.reference + "', which is not an earlier combo");
            }
            detail::require(seen.insert(name).second, "duplicate combo label " + name);
        }
    }
};

/// The full comparison: every implemented (model, algorithm, reference)
/// combination over n/p in {0.05, 0.25, 0.5}. FnLASSO has no active-set form.
inline ExperimentPlan standard_plan()
{
    ExperimentPlan plan;
    const auto A = Algorithm::AMNR;
    const auto M = Algorithm::MNR;
    const auto C = Algorithm::closed_form;
    plan.combos = {
        {ModelKind::Ridge_I, C, "", ""},
        {ModelKind::Ridge_L, C, "", ""},
        {ModelKind::LASSO, M, "", ""},
        {ModelKind::FnLASSO, M, "", ""},
        {ModelKind::SLASSO, M, "", ""},
        {ModelKind::ENET_L, M, "", ""},
        {ModelKind::LASSO, A, "", ""},
        {ModelKind::SLASSO, A, "", ""},
        {ModelKind::ENET_L, A, "", ""},
        {ModelKind::NNG, A, std::string(ols_reference), ""},
        {ModelKind::NNG, A, "Ridge_L", ""},
        {ModelKind::NNG, A, "FnLASSO-MNR", ""},
        {ModelKind::SNNG, A, std::string(ols_reference), ""},
        {ModelKind::SNNG, A, "Ridge_L", ""},
        {ModelKind::SNNG, A, "FnLASSO-MNR", ""},
        {ModelKind::ALASSO, A, "Ridge_L", ""},
        {ModelKind::NN_SLASSO, A, "", ""},
    };
    return plan;
}

// ---------------------------------------------------------------------------
// Single fits

struct ComboFit {
    double lambda = 0.0;
    // Coefficients scored against the truth.
    Vector beta;
    // Coefficients handed to dependent combos (MNR sparse view).
    Vector reference_beta;
    double time = 0.0;
};

/// Ordinary least squares; only defined for n > p with full column rank.
inline Vector ols_solve(const Problem& problem)
{
    if (problem.n() <= problem.p()) {
        throw ValidationError("OLS reference needs n > p (n=" + std::to_string(problem.n()) +
                              ", p=" + std::to_string(problem.p()) + ")");
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(problem.X());
    if (qr.rank() < problem.p()) throw NumericalError("OLS reference: design is rank deficient");
    return qr.solve(problem.y());
}

/// Penalty specification of an MNR model.
inline ModelSpec mnr_model_spec(ModelKind model, Eigen::Index p, double l1_share)
{
    ModelSpec spec;
    const auto I = LinearOperator::identity(p);
    switch (model) {
        case ModelKind::LASSO: spec.terms.push_back({PenaltyKind::L1, I, 1.0, std::nullopt}); break;
        case ModelKind::FnLASSO:
            spec.terms.push_back({PenaltyKind::L1, LinearOperator::first_difference(p), 1.0, std::nullopt});
            break;
        case ModelKind::SLASSO:
            spec.terms.push_back({PenaltyKind::L1, I, l1_share, std::nullopt});
            spec.terms.push_back({PenaltyKind::L2, LinearOperator::first_difference(p), 1.0 - l1_share, std::nullopt});
            break;
        case ModelKind::ENET_L: {
            const auto L = LinearOperator::second_difference(p);
            spec.terms.push_back({PenaltyKind::L1, L, l1_share, std::nullopt});
            spec.terms.push_back({PenaltyKind::L2, L, 1.0 - l1_share, std::nullopt});
            break;
        }
        default: throw ValidationError("model " + std::string(to_string(model)) + " has no MNR form");
    }
    return spec;
}

/// Active-set variant of a model, given its (optional) reference coefficients.
inline Variant amnr_variant(ModelKind model, double lambda_sm, const std::optional<Vector>& reference)
{
    switch (model) {
        case ModelKind::LASSO: return Variant::lasso();
        case ModelKind::ALASSO: {
            detail::require(reference.has_value(), "ALASSO needs reference coefficients");
            Vector gamma(reference->size());
            for (Eigen::Index j = 0; j < gamma.size(); ++j) {
                const double a = std::abs((*reference)[j]);
                gamma[j] = a > 0.0 ? 1.0 / a : std::numeric_limits<double>::infinity();
            }
            return Variant::alasso(std::move(gamma));
        }
        case ModelKind::NNG:
            detail::require(reference.has_value(), "NNG needs reference coefficients");
            return Variant::nng(*reference);
        case ModelKind::SNNG:
            detail::require(reference.has_value(), "SNNG needs reference coefficients");
            return Variant::snng(*reference, lambda_sm);
        case ModelKind::NN_SLASSO: return Variant::smooth(VariantTag::NN_SLASSO, lambda_sm);
        case ModelKind::SLASSO: return Variant::smooth(VariantTag::SLASSO, lambda_sm);
        case ModelKind::ENET_L: return Variant::smooth(VariantTag::ENET_L, lambda_sm);
        default: throw ValidationError("model " + std::string(to_string(model)) + " has no AMNR form");
    }
}

/// Fits one combo with GCV-selected lambda.
inline ComboFit fit_combo(const Problem& problem, const ExperimentPlan& plan, const Combo& combo,
                          const std::optional<Vector>& reference)
{
    const Eigen::Index p = problem.p();
    ComboFit fit;
    switch (combo.algorithm) {
        case Algorithm::closed_form: {
            const auto op = combo.model == ModelKind::Ridge_I ? LinearOperator::identity(p)
                                                              : LinearOperator::second_difference(p);
            const auto grid = lambda_grid(problem, plan.grid_count, GridMode::singular_value_scaled, plan.grid_floor);
            const Selection sel = select_ridge(problem, op, grid);
            fit.lambda = sel.lambda;
            fit.beta = sel.solution.beta;
            fit.reference_beta = fit.beta;
            fit.time = sel.solution.wall_time;
            break;
        }
        case Algorithm::MNR: {
            const ModelSpec spec = mnr_model_spec(combo.model, p, plan.mnr_l1_share);
            const auto grid = lambda_grid(problem, plan.grid_count, GridMode::singular_value_scaled, plan.grid_floor);
            const Selection sel = select_lambda(problem, spec, grid, plan.mnr);
            fit.lambda = sel.lambda;
            fit.beta = sel.solution.beta;
            fit.reference_beta = sel.solution.sparse_beta;
            fit.time = sel.solution.wall_time;
            break;
        }
        case Algorithm::AMNR: {
            const Variant v = amnr_variant(combo.model, plan.lambda_sm, reference);
            const Selection sel = select_lambda(problem, v, plan.amnr);
            fit.lambda = sel.lambda;
            fit.beta = sel.solution.beta;
            fit.reference_beta = fit.beta;
            fit.time = sel.solution.wall_time;
            break;
        }
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Experiment

struct StoredSolution {
    std::string label;
    int repetition = 0;
    Eigen::Index n = 0;
    Vector beta;
};

struct ExperimentResult {
    // Ordered by n (plan order), repetition, combo (plan order).
    std::vector<MetricRow> rows;
    std::vector<StoredSolution> solutions;
};

namespace detail {

struct TaskOutput {
    std::vector<MetricRow> rows;
    std::vector<StoredSolution> solutions;
};

inline TaskOutput run_repetition(const ExperimentPlan& plan, const SimTruth& truth, Eigen::Index n, int rep)
{
    SimConfig cfg;
    cfg.p = plan.p;
    cfg.n = n;
    cfg.seed = plan.seed_base + static_cast<std::uint64_t>(rep);
    cfg.noise_sigma = plan.noise_sigma;
    const SimSample sample = generate(cfg, truth);

    TaskOutput out;
    std::map<std::string, Vector> refs;
    std::map<std::string, std::string> failures;
    std::optional<Vector> ols;
    std::string ols_error;
    bool ols_done = false;

    for (const auto& combo : plan.combos) {
        MetricRow row;
        row.model = combo.name();
        row.algorithm = combo.algorithm;
        row.repetition = rep;
        row.n = n;
        try {
            std::optional<Vector> reference;
            if (combo.reference == ols_reference) {
                if (!ols_done) {
                    ols_done = true;
                    try {
                        ols = ols_solve(sample.problem);
                    } catch (const Error& e) {
                        ols_error = e.what();
                    }
                }
                if (!ols) throw ValidationError(ols_error);
                reference = ols;
            } else if (!combo.reference.empty()) {
                const auto it = refs.find(combo.reference);
                if (it == refs.end()) {
                    throw ValidationError("reference " + combo.reference + " failed: " + failures[combo.reference]);
                }
                reference = it->second;
            }
            const ComboFit fit = fit_combo(sample.problem, plan, combo, reference);
            row.auc = support_auc(truth.beta_true, fit.beta);
            row.re = relative_error(truth.beta_true, fit.beta);
            row.time = fit.time;
            row.lambda_selected = fit.lambda;
            refs[row.model] = fit.reference_beta;
            if (plan.keep_solutions) out.solutions.push_back({row.model, rep, n, fit.beta});
        } catch (const std::exception& e) {
            row.error = e.what();
            failures[row.model] = row.error;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace detail

/// Runs every (n, repetition) task, fanning tasks out over `workers` threads.
/// Rows come back in a fixed order regardless of scheduling.
inline ExperimentResult run_experiment(const ExperimentPlan& plan, unsigned workers = 1)
{
    plan.validate();
    const SimTruth truth = make_truth(plan.p);
    const std::size_t tasks = plan.n_values.size() * static_cast<std::size_t>(plan.repetitions);
    std::vector<detail::TaskOutput> outputs(tasks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks) return;
            const Eigen::Index n = plan.n_values[t / static_cast<std::size_t>(plan.repetitions)];
            const int rep = static_cast<int>(t % static_cast<std::size_t>(plan.repetitions));
            try {
                outputs[t] = detail::run_repetition(plan, truth, n, rep);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(tasks)));
    if (count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(count);
        for (unsigned i = 0; i < count; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResult result;
    for (auto& o : outputs) {
        result.rows.insert(result.rows.end(), std::make_move_iterator(o.rows.begin()),
                           std::make_move_iterator(o.rows.end()));
        result.solutions.insert(result.solutions.end(), std::make_move_iterator(o.solutions.begin()),
                                std::make_move_iterator(o.solutions.end()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Aggregation

struct RatioMeanRow {
    std::string model;
    Algorithm algorithm = Algorithm::closed_form;
    // Mean over ratios of the per-ratio mean over successful repetitions.
    double re = 0.0;
    double auc = 0.0;
    double time = 0.0;
    std::size_t errors = 0;
};

/// One row per combo, in order of first appearance. Every combo must have
/// rows for every n present, and at least three distinct n must be present.
inline std::vector<RatioMeanRow> ratio_mean_summary(const std::vector<MetricRow>& rows)
{
    detail::require(!rows.empty(), "no rows to summarize");
    std::vector<std::string> order;
    std::map<std::string, Algorithm> algo;
    std::set<Eigen::Index> ns;
    std::map<std::pair<std::string, Eigen::Index>, std::vector<const MetricRow*>> cells;
    for (const auto& r : rows) {
        if (!algo.count(r.model)) {
            order.push_back(r.model);
            algo[r.model] = r.algorithm;
        }
        ns.insert(r.n);
        cells[{r.model, r.n}].push_back(&r);
    }
    std::string gaps;
    if (ns.size() < 3) gaps += " fewer than 3 n/p ratios present (" + std::to_string(ns.size()) + ");";
    for (const auto& m : order) {
        for (auto n : ns) {
            if (!cells.count({m, n})) gaps += " " + m + " missing n=" + std::to_string(n) + ";";
        }
    }
    detail::require(gaps.empty(), "incomplete ratio coverage:" + gaps);

    std::vector<RatioMeanRow> out;
    for (const auto& m : order) {
        RatioMeanRow t;
        t.model = m;
        t.algorithm = algo[m];
        for (auto n : ns) {
            double re = 0.0, auc = 0.0, time = 0.0;
            std::size_t ok = 0;
            for (const auto* r : cells[{m, n}]) {
                if (!r->ok()) {
                    ++t.errors;
                    continue;
                }
                re += r->re;
                auc += r->auc;
                time += r->time;
                ++ok;
            }
            const double k = static_cast<double>(ok);
            t.re += ok ? re / k : std::numeric_limits<double>::quiet_NaN();
            t.auc += ok ? auc / k : std::numeric_limits<double>::quiet_NaN();
            t.time += ok ? time / k : std::numeric_limits<double>::quiet_NaN();
        }
        const double r = static_cast<double>(ns.size());
        t.re /= r;
        t.auc /= r;
        t.time /= r;
        out.push_back(std::move(t));
    }
    return out;
}

struct Exemplar {
    std::string model;
    Eigen::Index n = 0;
    int repetition = 0;
    double auc = 0.0;
    Vector beta;
};

/// For each (combo, n) group, the repetition whose AUC is closest to the group
/// median; equal distances go to the lower repetition index.
inline std::vector<Exemplar> median_auc_exemplar(const std::vector<MetricRow>& rows,
                                                 const std::vector<StoredSolution>& solutions)
{
    std::vector<std::pair<std::string, Eigen::Index>> order;
    std::map<std::pair<std::string, Eigen::Index>, std::vector<const MetricRow*>> groups;
    for (const auto& r : rows) {
        if (!r.ok()) continue;
        const auto key = std::make_pair(r.model, r.n);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<Exemplar> out;
    for (const auto& key : order) {
        const auto& g = groups[key];
        std::vector<double> aucs;
        for (const auto* r : g) aucs.push_back(r->auc);
        const double med = summarize(std::span<const double>(aucs)).median;
        const MetricRow* best = nullptr;
        for (const auto* r : g) {
            if (!best) {
                best = r;
                continue;
            }
            const double d = std::abs(r->auc - med);
            const double bd = std::abs(best->auc - med);
            if (d < bd || (d == bd && r->repetition < best->repetition)) best = r;
        }
        const auto it = std::find_if(solutions.begin(), solutions.end(), [&](const StoredSolution& s) {
            return s.label == key.first && s.n == key.second && s.repetition == best->repetition;
        });
        detail::require(it != solutions.end(), "no stored solution for " + key.first + " n=" +
                                                   std::to_string(key.second) +
                                                   " repetition " + std::to_string(best->repetition));
        out.push_back({key.first, key.second, best->repetition, best->auc, it->beta});
    }
    return out;
}

}  // namespace mpls
