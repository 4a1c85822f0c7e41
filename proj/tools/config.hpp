#pragma once

#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "io.hpp"
#include "mpls/bench.hpp"

namespace mpls::cli {

// Strict view of one JSON object: every key must be consumed, and types are
// checked with the full key path in the message.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j_.is_object()) throw ValidationError(label() + " must be a JSON object");
    }

    template <typename T>
    std::optional<T> get(const std::string& key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return std::nullopt;
        const json& v = *it;
        const std::string at = where_.empty() ? key : where_ + "." + key;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ValidationError(at + " must be a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ValidationError(at + " must be an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.get<long long>() < 0) throw ValidationError(at + " must be >= 0");
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ValidationError(at + " must be a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ValidationError(at + " must be a string");
        }
        return v.get<T>();
    }

    std::optional<Section> section(const std::string& key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return std::nullopt;
        return Section(*it, where_.empty() ? key : where_ + "." + key);
    }

    const json* raw(const std::string& key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string at(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const
    {
        std::string unknown;
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) unknown += (unknown.empty() ? "" : ", ") + at(item.key());
        }
        if (!unknown.empty()) throw ValidationError("unknown configuration key(s): " + unknown);
    }

private:
    std::string label() const { return where_.empty() ? "configuration" : where_; }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

struct ModelConfig {
    ModelKind model = ModelKind::LASSO;
    Algorithm algorithm = Algorithm::AMNR;
    // Path to a vector file, or "OLS".
    std::optional<std::string> reference;
    // Path to a matrix file replacing the structured operator.
    std::optional<std::string> operator_file;
    double lambda_sm = 3000.0;
    double l1_share = 0.5;
};

struct LambdaConfig {
    // "fixed" or "gcv".
    std::string policy = "gcv";
    std::optional<double> value;
    int grid_count = 50;
    double grid_floor = 1e-4;
};

struct RunConfig {
    fs::path out = ".";
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    SimConfig simulation;
    std::optional<std::string> X_file;
    std::optional<std::string> y_file;
    ModelConfig model;
    LambdaConfig lambda;
    MnrConfig mnr;
    AmnrConfig amnr;
    ExperimentPlan bench = standard_plan();
    std::optional<std::string> kkt_solution;
    double kkt_tol = 1e-8;
};

inline std::string resolve(const fs::path& base, const std::string& p)
{
    if (p == ols_reference) return p;
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

namespace detail {

inline Combo parse_combo(const json& j, std::size_t i)
{
    Section s(j, "bench.combos[" + std::to_string(i) + "]");
    Combo c;
    const auto model = s.get<std::string>("model");
    if (!model) throw ValidationError(s.at("model") + " is required");
    c.model = model_kind_from_string(*model);
    const auto algo = s.get<std::string>("algorithm");
    if (algo) {
        c.algorithm = algorithm_from_string(*algo);
    } else {
        c.algorithm = c.model == ModelKind::Ridge_I || c.model == ModelKind::Ridge_L ? Algorithm::closed_form
                                                                                     : Algorithm::AMNR;
    }
    c.reference = s.get<std::string>("reference").value_or("");
    c.label = s.get<std::string>("label").value_or("");
    s.finish();
    return c;
}

}  // namespace detail

/// Parses a configuration document. Relative file paths are taken relative to `base`.
inline RunConfig parse_config(const json& doc, const fs::path& base)
{
    RunConfig cfg;
    Section top(doc, "");
    if (auto v = top.get<std::string>("out")) cfg.out = resolve(base, *v);
    if (auto v = top.get<unsigned>("workers")) cfg.workers = *v;
    if (auto v = top.get<std::uint64_t>("seed")) {
        cfg.simulation.seed = *v;
        cfg.bench.seed_base = *v;
    }

    if (auto s = top.section("simulation")) {
        if (auto v = s->get<Eigen::Index>("p")) cfg.simulation.p = *v;
        if (auto v = s->get<Eigen::Index>("n")) cfg.simulation.n = *v;
        if (auto v = s->get<std::uint64_t>("seed")) cfg.simulation.seed = *v;
        if (auto v = s->get<double>("noise_sigma")) cfg.simulation.noise_sigma = *v;
        s->finish();
    }
    if (auto s = top.section("problem")) {
        if (auto v = s->get<std::string>("X")) cfg.X_file = resolve(base, *v);
        if (auto v = s->get<std::string>("y")) cfg.y_file = resolve(base, *v);
        s->finish();
        if (cfg.X_file.has_value() != cfg.y_file.has_value()) {
            throw ValidationError("problem.X and problem.y must be given together");
        }
    }
    if (auto s = top.section("model")) {
        if (auto v = s->get<std::string>("name")) cfg.model.model = model_kind_from_string(*v);
        if (auto v = s->get<std::string>("algorithm")) {
            cfg.model.algorithm = algorithm_from_string(*v);
        } else if (cfg.model.model == ModelKind::Ridge_I || cfg.model.model == ModelKind::Ridge_L) {
            cfg.model.algorithm = Algorithm::closed_form;
        } else if (cfg.model.model == ModelKind::FnLASSO) {
            cfg.model.algorithm = Algorithm::MNR;
        }
        if (auto v = s->get<std::string>("reference")) cfg.model.reference = resolve(base, *v);
        if (auto v = s->get<std::string>("operator")) cfg.model.operator_file = resolve(base, *v);
        if (auto v = s->get<double>("lambda_sm")) cfg.model.lambda_sm = *v;
        if (auto v = s->get<double>("l1_share")) cfg.model.l1_share = *v;
        s->finish();
    }
    if (auto s = top.section("lambda")) {
        if (auto v = s->get<std::string>("policy")) cfg.lambda.policy = *v;
        if (auto v = s->get<double>("value")) cfg.lambda.value = *v;
        if (auto v = s->get<int>("grid_count")) cfg.lambda.grid_count = *v;
        if (auto v = s->get<double>("grid_floor")) cfg.lambda.grid_floor = *v;
        s->finish();
    }
    if (auto s = top.section("mnr")) {
        if (auto v = s->get<double>("tau")) cfg.mnr.tau = *v;
        if (auto v = s->get<double>("epsilon0")) cfg.mnr.epsilon0 = *v;
        if (auto v = s->get<int>("max_iter")) cfg.mnr.max_iter = *v;
        if (auto v = s->get<double>("step")) cfg.mnr.step = *v;
        s->finish();
    }
    if (auto s = top.section("amnr")) {
        if (auto v = s->get<double>("tau")) cfg.amnr.tau = *v;
        if (auto v = s->get<Eigen::Index>("max_active")) cfg.amnr.max_active = *v;
        if (auto v = s->get<bool>("allow_removal")) cfg.amnr.allow_removal = *v;
        if (auto v = s->get<int>("max_steps")) cfg.amnr.max_steps = *v;
        s->finish();
    }
    if (auto s = top.section("bench")) {
        auto& b = cfg.bench;
        if (auto v = s->get<std::string>("base")) {
            if (*v == "standard") {
                b = standard_plan();
            } else if (*v == "empty") {
                b = ExperimentPlan{};
            } else {
                throw ValidationError("bench.base must be \"standard\" or \"empty\"");
            }
            if (auto seed = top.get<std::uint64_t>("seed")) b.seed_base = *seed;
        }
        if (auto v = s->get<Eigen::Index>("p")) b.p = *v;
        if (auto v = s->get<std::vector<Eigen::Index>>("n_values")) b.n_values = *v;
        if (auto v = s->get<int>("repetitions")) b.repetitions = *v;
        if (auto v = s->get<std::uint64_t>("seed_base")) b.seed_base = *v;
        if (auto v = s->get<double>("noise_sigma")) b.noise_sigma = *v;
        if (auto v = s->get<int>("grid_count")) b.grid_count = *v;
        if (auto v = s->get<double>("grid_floor")) b.grid_floor = *v;
        if (auto v = s->get<double>("lambda_sm")) b.lambda_sm = *v;
        if (auto v = s->get<double>("mnr_l1_share")) b.mnr_l1_share = *v;
        if (auto v = s->get<bool>("keep_solutions")) b.keep_solutions = *v;
        if (const json* combos = s->raw("combos")) {
            if (!combos->is_array()) throw ValidationError("bench.combos must be an array");
            b.combos.clear();
            for (std::size_t i = 0; i < combos->size(); ++i) b.combos.push_back(detail::parse_combo((*combos)[i], i));
        }
        s->finish();
    }
    if (auto s = top.section("kkt")) {
        if (auto v = s->get<std::string>("solution")) cfg.kkt_solution = resolve(base, *v);
        if (auto v = s->get<double>("tol")) cfg.kkt_tol = *v;
        s->finish();
    }
    top.finish();
    cfg.bench.mnr = cfg.mnr;
    cfg.bench.amnr = cfg.amnr;
    return cfg;
}

inline void validate(const RunConfig& cfg)
{
    if (cfg.lambda.policy != "fixed" && cfg.lambda.policy != "gcv") {
        throw ValidationError("lambda.policy must be \"fixed\" or \"gcv\"");
    }
    if (cfg.lambda.policy == "fixed") {
        if (!cfg.lambda.value) throw ValidationError("lambda.policy \"fixed\" needs lambda.value (or --lambda)");
        if (!(std::isfinite(*cfg.lambda.value) && *cfg.lambda.value >= 0.0)) {
            throw ValidationError("lambda.value must be finite and >= 0");
        }
    }
    if (cfg.lambda.grid_count < 2) throw ValidationError("lambda.grid_count must be >= 2");
    if (!(cfg.lambda.grid_floor > 0.0 && cfg.lambda.grid_floor < 1.0)) {
        throw ValidationError("lambda.grid_floor must lie in (0, 1)");
    }
    if (!(cfg.kkt_tol > 0.0)) throw ValidationError("kkt tolerance must be > 0");
    if (!(cfg.model.l1_share >= 0.0 && cfg.model.l1_share <= 1.0)) {
        throw ValidationError("model.l1_share must lie in [0, 1]");
    }
    if (!(std::isfinite(cfg.model.lambda_sm) && cfg.model.lambda_sm >= 0.0)) {
        throw ValidationError("model.lambda_sm must be finite and >= 0");
    }
    if (!supports(cfg.model.model, cfg.model.algorithm)) {
        throw ValidationError("model " + std::string(to_string(cfg.model.model)) + " is not available with " +
                              std::string(to_string(cfg.model.algorithm)));
    }
    if (cfg.workers < 1) throw ValidationError("workers must be >= 1");
    cfg.mnr.validate();
    if (!(cfg.amnr.tau > 0.0)) throw ValidationError("amnr.tau must be > 0");
    cfg.simulation.validate();
}

inline json combo_json(const Combo& c)
{
    json j{{"model", to_string(c.model)}, {"algorithm", to_string(c.algorithm)}};
    if (!c.reference.empty()) j["reference"] = c.reference;
    if (!c.label.empty()) j["label"] = c.label;
    return j;
}

/// The effective configuration, in the same schema that parse_config reads.
inline json to_json(const RunConfig& cfg)
{
    json j;
    j["out"] = fs::absolute(cfg.out).lexically_normal().string();
    j["workers"] = cfg.workers;
    j["simulation"] = {{"p", cfg.simulation.p},
                       {"n", cfg.simulation.n},
                       {"seed", cfg.simulation.seed},
                       {"noise_sigma", cfg.simulation.noise_sigma}};
    if (cfg.X_file) j["problem"] = {{"X", *cfg.X_file}, {"y", *cfg.y_file}};
    json m{{"name", to_string(cfg.model.model)},
           {"algorithm", to_string(cfg.model.algorithm)},
           {"lambda_sm", cfg.model.lambda_sm},
           {"l1_share", cfg.model.l1_share}};
    if (cfg.model.reference) m["reference"] = *cfg.model.reference;
    if (cfg.model.operator_file) m["operator"] = *cfg.model.operator_file;
    j["model"] = m;
    json l{{"policy", cfg.lambda.policy}, {"grid_count", cfg.lambda.grid_count}, {"grid_floor", cfg.lambda.grid_floor}};
    if (cfg.lambda.value) l["value"] = *cfg.lambda.value;
    j["lambda"] = l;
    j["mnr"] = {{"tau", cfg.mnr.tau}, {"epsilon0", cfg.mnr.epsilon0}, {"max_iter", cfg.mnr.max_iter}, {"step", cfg.mnr.step}};
    j["amnr"] = {{"tau", cfg.amnr.tau},
                 {"max_active", cfg.amnr.max_active},
                 {"allow_removal", cfg.amnr.allow_removal},
                 {"max_steps", cfg.amnr.max_steps}};
    const auto& b = cfg.bench;
    json combos = json::array();
    for (const auto& c : b.combos) combos.push_back(combo_json(c));
    j["bench"] = {{"base", "empty"},
                  {"p", b.p},
                  {"n_values", b.n_values},
                  {"repetitions", b.repetitions},
                  {"seed_base", b.seed_base},
                  {"noise_sigma", b.noise_sigma},
                  {"grid_count", b.grid_count},
                  {"grid_floor", b.grid_floor},
                  {"lambda_sm", b.lambda_sm},
                  {"mnr_l1_share", b.mnr_l1_share},
                  {"keep_solutions", b.keep_solutions},
                  {"combos", combos}};
    json k{{"tol", cfg.kkt_tol}};
    if (cfg.kkt_solution) k["solution"] = *cfg.kkt_solution;
    j["kkt"] = k;
    return j;
}

}  // namespace mpls::cli
