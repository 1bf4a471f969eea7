#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "allflow/dynamics.hpp"
#include "allflow/homotopy.hpp"
#include "allflow/param_sweep.hpp"

namespace allflow::report {

struct RunConfig {
    std::string case_path;
    sweep::SweepGrid grid;
    homotopy::TrackerConfig tracker;
    dyn::FeasibilityLimits limits;
    std::optional<std::string> cache_path;
    /// Empty means nothing is written.
    std::string output_dir;
    /// Any of "csv", "json".
    std::vector<std::string> formats{"csv", "json"};
    double stability_tol = 1e-6;
};

void check_config(const RunConfig& cfg);

/// `{"rotor_voltage_max": .., "q_wind_max_abs": .., "voltage_band": [lo, hi]}`;
/// absent keys keep their defaults.
dyn::FeasibilityLimits load_limits(const std::string& path);

/// Tracker overrides keyed by TrackerConfig field name.
homotopy::TrackerConfig load_tracker_overrides(const std::string& path, homotopy::TrackerConfig base);

struct ScatterRow {
    double i_qr;
    double q_wind;
    bool is_real;
    bool is_feasible;
};

struct Cell {
    double gamma = 0.0;
    double vwind = 0.0;
    std::size_t total = 0;
    std::size_t real = 0;
    std::size_t feasible = 0;
    homotopy::PathStats path_stats;
    std::uint64_t paths_tracked = 0;
    /// One record per real solution, in solution order.
    std::vector<dyn::EquilibriumRecord> records;
    /// One row per solution, in solution order.
    std::vector<ScatterRow> scatter;
    std::string verdict;
};

struct SweepReport {
    std::string case_name;
    std::uint64_t total_degree = 0;
    std::size_t generic_solutions = 0;
    homotopy::PathStats generic_path_stats;
    bool cache_hit = false;
    std::uint64_t seed = 0;
    std::vector<Cell> cells;
};

/// Table I wording: "2 stable equilibria", "1 stable, 1 unstable", "0 feasible".
std::string verdict_text(const std::vector<dyn::EquilibriumRecord>& records);

/// Case load, sweep, feasibility and stability for every grid point. Writes
/// the report files when cfg.output_dir is set.
SweepReport run(const RunConfig& cfg, const std::function<void(const std::string&)>& log = {});

/// `i_qr,Q_w,is_real,is_feasible`. Throws unknown-point.
std::string emit_scatter(const SweepReport& report, double gamma, double vwind);
/// Rows are gamma values, columns wind bus voltages.
std::string emit_stability_grid(const SweepReport& report);
std::string emit_dominant_modes(const SweepReport& report);
std::string emit_equilibria(const SweepReport& report);
std::string emit_json(const SweepReport& report);

void write_report(const SweepReport& report, const RunConfig& cfg);

/// `%.17g`, with negative zero printed as 0.
std::string format_number(double v);

}  // namespace allflow::report
