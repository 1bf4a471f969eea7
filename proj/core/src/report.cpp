#include "allflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "allflow/error.hpp"
#include "json.hpp"

namespace allflow::report {

namespace {

using nlohmann::ordered_json;
using Complex = std::complex<double>;

[[noreturn]] void fail(const std::string& code, const std::string& what) { throw Error(Module::cli, code, what); }

// Short form for file names and grid headers.
std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v == 0.0 ? 0.0 : v);
    return buf;
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); }

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail("unreadable-file", "cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail("malformed-json", path + ": " + e.what());
    }
}

double dfig_i_qr(const steady::SteadyState& s) { return s.dfig ? s.dfig->i_qr.real() : 0.0; }

ordered_json complex_json(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

std::size_t count_verdict(const std::vector<dyn::EquilibriumRecord>& records, dyn::Verdict v)
{
    return std::count_if(records.begin(), records.end(), [&](const auto& r) {
        return r.feasibility.feasible && r.stability && r.stability->verdict == v;
    });
}

std::string plural(std::size_t n, const char* word)
{
    return std::to_string(n) + " " + word + (n == 1 ? " equilibrium" : " equilibria");
}

}  // namespace

std::string format_number(double v)
{
    if (v == 0.0) v = 0.0;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_config(const RunConfig& cfg)
{
    if (cfg.case_path.empty()) fail("invalid-config", "no case file given");
    if (cfg.grid.gamma.empty() || cfg.grid.vwind.empty()) fail("invalid-grid", "empty gamma or vwind grid");
    for (const auto& f : cfg.formats) {
        if (f != "csv" && f != "json") fail("invalid-config", "unknown output format '" + f + "'");
    }
    if (!(cfg.stability_tol >= 0.0)) fail("invalid-config", "stability tolerance must be non-negative");
    homotopy::check_config(cfg.tracker);
    dyn::check_limits(cfg.limits);
}

dyn::FeasibilityLimits load_limits(const std::string& path)
{
    const auto j = read_json(path);
    if (!j.is_object()) fail("malformed-json", path + ": limits must be an object");
    dyn::FeasibilityLimits out;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "rotor_voltage_max") {
                out.rotor_voltage_max = value.get<double>();
            } else if (key == "q_wind_max_abs") {
                out.q_wind_max_abs = value.get<double>();
            } else if (key == "voltage_band") {
                if (!value.is_array() || value.size() != 2) fail("malformed-json", "voltage_band needs [lo, hi]");
                out.voltage_min = value[0].get<double>();
                out.voltage_max = value[1].get<double>();
            } else {
                fail("malformed-json", "unknown limits key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail("malformed-json", path + ": " + e.what());
    }
    dyn::check_limits(out);
    return out;
}

homotopy::TrackerConfig load_tracker_overrides(const std::string& path, homotopy::TrackerConfig base)
{
    const auto j = read_json(path);
    if (!j.is_object()) fail("malformed-json", path + ": tracker overrides must be an object");
    std::map<std::string, double*> reals{
        {"newton_tol", &base.newton_tol},
        {"initial_step", &base.initial_step},
        {"min_step", &base.min_step},
        {"max_step", &base.max_step},
        {"divergence_norm", &base.divergence_norm},
        {"endgame_start", &base.endgame_start},
        {"dedup_tol", &base.dedup_tol},
        {"real_tol", &base.real_tol},
        {"singular_cond_threshold", &base.singular_cond_threshold},
        {"corrector_tol", &base.corrector_tol},
        {"contraction", &base.contraction},
        {"endgame_tail", &base.endgame_tail},
    };
    try {
        for (const auto& [key, value] : j.items()) {
            if (auto it = reals.find(key); it != reals.end()) {
                *it->second = value.get<double>();
            } else if (key == "max_newton_iters") {
                base.max_newton_iters = value.get<int>();
            } else if (key == "max_corrector_iters") {
                base.max_corrector_iters = value.get<int>();
            } else if (key == "rng_seed") {
                base.rng_seed = value.get<std::uint64_t>();
            } else if (key == "path_budget") {
                base.path_budget = value.get<std::uint64_t>();
            } else if (key == "threads") {
                base.threads = value.get<unsigned>();
            } else {
                fail("malformed-json", "unknown tracker key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail("malformed-json", path + ": " + e.what());
    }
    homotopy::check_config(base);
    return base;
}

std::string verdict_text(const std::vector<dyn::EquilibriumRecord>& records)
{
    const std::size_t feasible = std::count_if(records.begin(), records.end(),
                                               [](const auto& r) { return r.feasibility.feasible; });
    if (feasible == 0) return "0 feasible";
    const std::size_t stable = count_verdict(records, dyn::Verdict::stable);
    const std::size_t unstable = count_verdict(records, dyn::Verdict::unstable);
    const std::size_t marginal = count_verdict(records, dyn::Verdict::marginal);
    const std::size_t other = feasible - stable - unstable - marginal;
    if (stable == feasible) return plural(stable, "stable");
    if (unstable == feasible) return plural(unstable, "unstable");
    std::vector<std::string> parts;
    if (stable) parts.push_back(std::to_string(stable) + " stable");
    if (unstable) parts.push_back(std::to_string(unstable) + " unstable");
    if (marginal) parts.push_back(std::to_string(marginal) + " marginal");
    if (other) parts.push_back(std::to_string(other) + " unclassifiable");
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
    return out;
}

SweepReport run(const RunConfig& cfg, const std::function<void(const std::string&)>& log)
{
    check_config(cfg);
    const auto net = net::load_case_file(cfg.case_path);

    sweep::SweepOptions options;
    options.cache_path = cfg.cache_path;
    options.log = log;
    const auto result = sweep::sweep(net, cfg.grid, cfg.tracker, options);

    SweepReport out;
    out.case_name = std::filesystem::path(cfg.case_path).stem().string();
    out.total_degree = poly::total_degree(result.problem.system);
    out.generic_solutions = result.cache.start_solutions.solutions.size();
    out.generic_path_stats = result.cache.start_solutions.path_stats;
    out.cache_hit = result.cache_hit;
    out.seed = cfg.tracker.rng_seed;

    for (const auto& pt : result.points) {
        Cell cell;
        cell.gamma = pt.gamma;
        cell.vwind = pt.vwind;
        cell.total = pt.solutions.solutions.size();
        cell.path_stats = pt.solutions.path_stats;
        cell.paths_tracked = pt.solutions.provenance.paths_tracked;

        const auto params = steady::parameter_values(pt.gamma, pt.vwind);
        const poly::CompiledSystem target(result.problem.system.bind(params));
        const auto classified = homotopy::classify_solutions(pt.solutions, target, cfg.tracker);
        std::size_t next_regular = 0, next_singular = 0;

        for (const auto& s : pt.solutions.solutions) {
            if (!s.is_real) {
                const auto state = steady::interpret(net, result.problem, s.x, params);
                cell.scatter.push_back({dfig_i_qr(state), state.wind_reactive.real(), false, false});
                continue;
            }
            const auto& polished = s.is_singular ? classified.real_singular[next_singular++]
                                                 : classified.real_regular[next_regular++];
            auto rec = dyn::analyze_equilibrium(net, result.problem, polished.x.real(), s.is_singular, pt.gamma,
                                                pt.vwind, cfg.limits, cfg.stability_tol);
            cell.scatter.push_back(
                {dfig_i_qr(rec.state), rec.state.wind_reactive.real(), true, rec.feasibility.feasible});
            ++cell.real;
            if (rec.feasibility.feasible) ++cell.feasible;
            cell.records.push_back(std::move(rec));
        }
        cell.verdict = verdict_text(cell.records);
        if (log) {
            log("gamma " + short_number(pt.gamma) + " vwind " + short_number(pt.vwind) + ": " +
                std::to_string(cell.total) + " solutions, " + std::to_string(cell.real) + " real, " +
                std::to_string(cell.feasible) + " feasible, " + cell.verdict);
        }
        out.cells.push_back(std::move(cell));
    }

    if (!cfg.output_dir.empty()) write_report(out, cfg);
    return out;
}

std::string emit_scatter(const SweepReport& report, double gamma, double vwind)
{
    for (const auto& cell : report.cells) {
        if (!same(cell.gamma, gamma) || !same(cell.vwind, vwind)) continue;
        std::ostringstream out;
        out << "i_qr,Q_w,is_real,is_feasible\n";
        for (const auto& r : cell.scatter) {
            out << format_number(r.i_qr) << ',' << format_number(r.q_wind) << ',' << (r.is_real ? 1 : 0) << ','
                << (r.is_feasible ? 1 : 0) << '\n';
        }
        return out.str();
    }
    fail("unknown-point", "no sweep point gamma=" + short_number(gamma) + " vwind=" + short_number(vwind));
}

std::string emit_stability_grid(const SweepReport& report)
{
    std::vector<double> gammas, vwinds;
    auto add_unique = [](std::vector<double>& v, double x) {
        if (std::none_of(v.begin(), v.end(), [&](double y) { return same(x, y); })) v.push_back(x);
    };
    for (const auto& c : report.cells) {
        add_unique(gammas, c.gamma);
        add_unique(vwinds, c.vwind);
    }
    std::ostringstream out;
    out << "gamma";
    for (double v : vwinds) out << ",vwind=" << short_number(v);
    out << '\n';
    for (double g : gammas) {
        out << short_number(g);
        for (double v : vwinds) {
            out << ',';
            for (const auto& c : report.cells) {
                if (same(c.gamma, g) && same(c.vwind, v)) out << csv_field(c.verdict);
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string emit_dominant_modes(const SweepReport& report)
{
    std::ostringstream out;
    out << "gamma,vwind,equilibrium,mode,re,im,damping_ratio\n";
    for (const auto& c : report.cells) {
        for (std::size_t i = 0; i < c.records.size(); ++i) {
            const auto& r = c.records[i];
            if (!r.stability) continue;
            for (std::size_t m = 0; m < r.stability->dominant.size(); ++m) {
                const auto& mode = r.stability->dominant[m];
                out << format_number(c.gamma) << ',' << format_number(c.vwind) << ',' << i << ',' << m << ','
                    << format_number(mode.eigenvalue.real()) << ',' << format_number(mode.eigenvalue.imag()) << ','
                    << format_number(mode.damping_ratio) << '\n';
            }
        }
    }
    return out.str();
}

std::string emit_equilibria(const SweepReport& report)
{
    std::ostringstream out;
    out << "gamma,vwind,equilibrium,feasible,reasons,verdict,max_real,i_qr,Q_w,rotor_voltage,min_voltage,max_voltage\n";
    for (const auto& c : report.cells) {
        for (std::size_t i = 0; i < c.records.size(); ++i) {
            const auto& r = c.records[i];
            std::string reasons;
            for (const auto& s : r.feasibility.reasons) reasons += (reasons.empty() ? "" : ";") + s;
            std::string verdict = r.stability ? dyn::to_string(r.stability->verdict) : r.unclassifiable;
            double vmin = INFINITY, vmax = 0.0;
            for (auto v : r.state.voltages) {
                vmin = std::min(vmin, std::abs(v));
                vmax = std::max(vmax, std::abs(v));
            }
            const double vr = r.state.dfig ? std::hypot(r.state.dfig->v_qr.real(), r.state.dfig->v_dr.real()) : 0.0;
            out << format_number(c.gamma) << ',' << format_number(c.vwind) << ',' << i << ','
                << (r.feasibility.feasible ? 1 : 0) << ',' << csv_field(reasons) << ',' << csv_field(verdict) << ','
                << (r.stability ? format_number(r.stability->max_real) : "") << ','
                << format_number(dfig_i_qr(r.state)) << ',' << format_number(r.state.wind_reactive.real()) << ','
                << format_number(vr) << ',' << format_number(vmin) << ',' << format_number(vmax) << '\n';
        }
    }
    return out.str();
}

std::string emit_json(const SweepReport& report)
{
    ordered_json j;
    j["case"] = report.case_name;
    j["seed"] = report.seed;
    j["total_degree"] = report.total_degree;
    j["generic_solutions"] = report.generic_solutions;
    j["generic_path_stats"] = {{"converged", report.generic_path_stats.converged},
                               {"diverged", report.generic_path_stats.diverged},
                               {"stalled", report.generic_path_stats.stalled}};
    j["cells"] = ordered_json::array();
    for (const auto& c : report.cells) {
        ordered_json cell;
        cell["gamma"] = c.gamma;
        cell["vwind"] = c.vwind;
        cell["solutions"] = c.total;
        cell["real"] = c.real;
        cell["feasible"] = c.feasible;
        cell["verdict"] = c.verdict;
        cell["path_stats"] = {{"converged", c.path_stats.converged},
                              {"diverged", c.path_stats.diverged},
                              {"stalled", c.path_stats.stalled}};
        cell["equilibria"] = ordered_json::array();
        for (const auto& r : c.records) {
            ordered_json e;
            e["feasible"] = r.feasibility.feasible;
            e["reasons"] = r.feasibility.reasons;
            e["solution"] = std::vector<double>(r.solution.data(), r.solution.data() + r.solution.size());
            ordered_json volts = ordered_json::array();
            for (auto v : r.state.voltages) volts.push_back(complex_json(v));
            e["voltages"] = volts;
            e["i_qr"] = dfig_i_qr(r.state);
            e["Q_w"] = r.state.wind_reactive.real();
            if (r.stability) {
                e["verdict"] = dyn::to_string(r.stability->verdict);
                e["max_real"] = r.stability->max_real;
                ordered_json modes = ordered_json::array();
                for (const auto& m : r.stability->dominant) {
                    modes.push_back({{"eigenvalue", complex_json(m.eigenvalue)}, {"damping_ratio", m.damping_ratio}});
                }
                e["dominant_modes"] = modes;
                ordered_json eigs = ordered_json::array();
                for (auto z : r.eigenvalues) eigs.push_back(complex_json(z));
                e["eigenvalues"] = eigs;
                e["derivative_residual"] = r.derivative_residual;
                e["algebraic_residual"] = r.algebraic_residual;
            } else if (!r.unclassifiable.empty()) {
                e["verdict"] = "unclassifiable";
                e["unclassifiable"] = r.unclassifiable;
            }
            cell["equilibria"].push_back(std::move(e));
        }
        j["cells"].push_back(std::move(cell));
    }
    return j.dump(2) + "\n";
}

void write_report(const SweepReport& report, const RunConfig& cfg)
{
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail("output-write-failed", "cannot create " + dir.string() + ": " + ec.message());

    auto put = [](const fs::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        out << text;
        if (!out) fail("output-write-failed", "cannot write " + p.string());
    };
    auto wants = [&](const char* f) { return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end(); };

    if (wants("json")) put(dir / "report.json", emit_json(report));
    if (wants("csv")) {
        put(dir / "stability_grid.csv", emit_stability_grid(report));
        put(dir / "dominant_modes.csv", emit_dominant_modes(report));
        put(dir / "equilibria.csv", emit_equilibria(report));
        fs::create_directories(dir / "scatter", ec);
        if (ec) fail("output-write-failed", "cannot create scatter directory: " + ec.message());
        for (const auto& c : report.cells) {
            const auto name = "scatter_gamma_" + short_number(c.gamma) + "_vwind_" + short_number(c.vwind) + ".csv";
            put(dir / "scatter" / name, emit_scatter(report, c.gamma, c.vwind));
        }
    }
}

}  // namespace allflow::report
