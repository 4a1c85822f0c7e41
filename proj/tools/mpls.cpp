#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace mpls;
using namespace mpls::cli;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::optional<double> tol;
    std::string solution;
};

void add_flags(CLI::App* cmd, Flags& f)
{
    cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Simulation seed (bench: seed base)");
    cmd->add_option("--lambda", f.lambda, "Fixed lambda (sets lambda.policy to fixed)");
    cmd->add_option("--workers", f.workers, "Worker threads for bench");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--tol", f.tol, "KKT tolerance");
}

RunConfig effective_config(const Flags& f)
{
    RunConfig cfg;
    if (!f.config.empty()) {
        const fs::path path = fs::absolute(f.config);
        cfg = parse_config(read_json(path), path.parent_path());
    } else {
        cfg = parse_config(json::object(), fs::current_path());
    }
    if (f.seed) {
        cfg.simulation.seed = *f.seed;
        cfg.bench.seed_base = *f.seed;
    }
    if (f.lambda) {
        cfg.lambda.policy = "fixed";
        cfg.lambda.value = *f.lambda;
    }
    if (f.workers) cfg.workers = *f.workers;
    if (f.out) cfg.out = fs::absolute(*f.out).lexically_normal();
    if (f.tol) cfg.kkt_tol = *f.tol;
    if (!f.solution.empty()) cfg.kkt_solution = fs::absolute(f.solution).lexically_normal().string();
    validate(cfg);
    return cfg;
}

int report(std::string_view kind, const std::string& message, int code)
{
    const json j{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    std::cerr << j.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multiple penalized least squares solvers"};
    app.require_subcommand(1);
    Flags flags;
    auto* simulate = app.add_subcommand("simulate", "Write a simulated problem (X.csv, y.csv, beta_true.csv, meta.json)");
    auto* solve = app.add_subcommand("solve", "Fit one model and write solution.json");
    auto* path = app.add_subcommand("path", "Write the full active-set path with per-knot KKT reports (path.json)");
    auto* bench = app.add_subcommand("bench", "Run the simulation benchmark (results.csv, summary.csv, boxplot.json)");
    auto* kkt = app.add_subcommand("kkt-verify", "Check a solution.json or path.json against the optimality conditions");
    for (auto* c : {simulate, solve, path, bench, kkt}) add_flags(c, flags);
    kkt->add_option("solution", flags.solution, "solution.json or path.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        log::init();
        const RunConfig cfg = effective_config(flags);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (solve->parsed()) return cmd_solve(cfg);
        if (path->parsed()) return cmd_path(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        return cmd_kkt_verify(cfg);
    } catch (const ValidationError& e) {
        return report("validation", e.what(), 1);
    } catch (const NumericalError& e) {
        return report("numerical", e.what(), 2);
    } catch (const IoError& e) {
        return report("io", e.what(), 3);
    } catch (const json::exception& e) {
        return report("validation", e.what(), 1);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 2);
    }
}
