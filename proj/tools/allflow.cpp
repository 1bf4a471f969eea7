// allflow: all-solution equilibrium analysis of wind-integrated power systems.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "allflow/error.hpp"
#include "allflow/netmodel.hpp"
#include "allflow/param_sweep.hpp"
#include "allflow/report.hpp"
#include "allflow/steady_poly.hpp"

using namespace allflow;

namespace {

void note(const std::string& line) { std::cerr << line << '\n'; }

void print_error(const Error& e)
{
    // what() already carries the module and code prefix
    std::cerr << "error: " << e.what() << '\n';
}

struct TrackerFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> overrides;

    homotopy::TrackerConfig resolve() const
    {
        homotopy::TrackerConfig cfg;
        if (overrides) cfg = report::load_tracker_overrides(*overrides, cfg);
        if (seed) cfg.rng_seed = *seed;
        return cfg;
    }
};

void add_tracker_flags(CLI::App* app, TrackerFlags& flags)
{
    app->add_option("--seed", flags.seed, "Seed for the start system and generic point draws");
    app->add_option("--tracker", flags.overrides, "JSON file of path tracker overrides")->check(CLI::ExistingFile);
}

int cmd_validate(const std::string& case_path)
{
    const auto net = net::load_case_file(case_path);
    int warnings = 0;
    for (const auto& d : net::validate(net)) {
        std::cerr << "warning: netmodel: " << d.code << ": " << d.subject << ": " << d.message << '\n';
        ++warnings;
    }
    const auto problem = steady::build_equilibrium_family(net);
    std::cout << case_path << ": " << net.buses.size() << " buses, " << net.lines.size() << " lines, "
              << net.generators.size() << " generators" << (net.wind_plant ? ", wind plant" : "") << '\n';
    std::cout << "equilibrium system: " << problem.system.equation_count() << " equations, "
              << problem.variables.size() << " unknowns, total degree " << poly::total_degree(problem.system)
              << '\n';
    if (warnings) std::cout << warnings << " warning(s)\n";
    return 0;
}

int cmd_solve_generic(const std::string& case_path, const std::string& cache_path, const TrackerFlags& flags)
{
    const auto net = net::load_case_file(case_path);
    const auto cfg = flags.resolve();
    const auto problem = steady::build_equilibrium_family(net, steady::Formulation::eliminated);
    bool hit = false;
    const auto cache = sweep::obtain_cache(problem.system, cfg, cache_path, &hit, note);
    const auto& stats = cache.start_solutions.path_stats;
    std::cout << (hit ? "cache up to date: " : "solved: ") << cache.start_solutions.solutions.size()
              << " generic solutions from " << stats.total() << " paths (" << stats.converged << " converged, "
              << stats.diverged << " diverged, " << stats.stalled << " stalled)\n";
    std::cout << "fingerprint " << cache.fingerprint << '\n';
    return 0;
}

int cmd_run(report::RunConfig cfg, const TrackerFlags& flags, const std::optional<std::string>& limits)
{
    cfg.tracker = flags.resolve();
    if (limits) cfg.limits = report::load_limits(*limits);
    const auto rep = report::run(cfg, note);
    std::cout << report::emit_stability_grid(rep);
    if (!cfg.output_dir.empty()) note("wrote report to " + cfg.output_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"All-solution steady-state and small-signal analysis of wind-integrated power systems"};
    app.require_subcommand(1);

    std::string case_path;
    std::string cache_path;
    TrackerFlags tracker_flags;

    auto* validate = app.add_subcommand("validate", "Check a case file and report its polynomial system size");
    validate->add_option("--case", case_path, "Case file")->required();

    auto* generic = app.add_subcommand("solve-generic", "Solve the parametric family at a generic point and cache it");
    generic->add_option("--case", case_path, "Case file")->required();
    generic->add_option("--cache", cache_path, "Cache file to create or refresh")->required();
    add_tracker_flags(generic, tracker_flags);

    report::RunConfig run_cfg;
    run_cfg.grid.gamma = {0.5, 1.0, 1.5, 2.0};
    run_cfg.grid.vwind = {0.96, 0.98, 1.00};
    run_cfg.output_dir = "allflow-report";
    std::optional<std::string> run_cache;
    std::optional<std::string> limits_path;
    auto* run = app.add_subcommand("run", "Sweep wind penetration and wind bus voltage, then classify equilibria");
    run->add_option("--case", run_cfg.case_path, "Case file")->required();
    run->add_option("--gamma", run_cfg.grid.gamma, "Wind penetration values")->delimiter(',')->capture_default_str();
    run->add_option("--vwind", run_cfg.grid.vwind, "Wind bus voltage magnitudes")->delimiter(',')->capture_default_str();
    run->add_option("--cache", run_cache, "Generic solve cache file");
    run->add_option("--out", run_cfg.output_dir, "Output directory")->capture_default_str();
    run->add_option("--limits", limits_path, "JSON file of feasibility limits")->check(CLI::ExistingFile);
    run->add_option("--format", run_cfg.formats, "Output formats (csv, json)")->delimiter(',')->capture_default_str();
    add_tracker_flags(run, tracker_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*validate) return cmd_validate(case_path);
        if (*generic) return cmd_solve_generic(case_path, cache_path, tracker_flags);
        run_cfg.cache_path = run_cache;
        return cmd_run(run_cfg, tracker_flags, limits_path);
    } catch (const Error& e) {
        print_error(e);
    } catch (const std::exception& e) {
        std::cerr << "error: cli: internal: " << e.what() << '\n';
    }
    return 1;
}
