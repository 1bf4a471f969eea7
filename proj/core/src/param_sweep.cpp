#include "allflow/param_sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "allflow/error.hpp"
#include "json.hpp"

namespace allflow::sweep {

namespace {

using json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Complex generic_entry(std::mt19937_64& rng)
{
    const double modulus = 0.5 + 1.5 * unit_uniform(rng);
    const double phase = 2.0 * std::numbers::pi * unit_uniform(rng);
    return std::polar(modulus, phase);
}

void require_family(const poly::PolynomialSystem& family)
{
    if (family.parameter_count() != 2) {
        throw Error(Module::param_sweep, "parameter-slots", "family must have exactly two parameter slots");
    }
    if (!family.is_square()) throw Error(Module::param_sweep, "not-square", "family must be square");
}

std::size_t singular_count(const homotopy::SolutionSet& set)
{
    std::size_t n = 0;
    for (const auto& s : set.solutions) n += s.is_singular ? 1 : 0;
    return n;
}

void note(const std::function<void(const std::string&)>& log, const std::string& msg)
{
    if (log) log(msg);
}

json complex_pair(Complex c) { return json::array({c.real(), c.imag()}); }

Complex read_complex(const json& j)
{
    if (!j.is_array() || j.size() != 2) throw std::runtime_error("expected [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

ParameterPoint ParameterPoint::physical(double gamma, double vwind_mag)
{
    if (!(gamma > 0.0) || !(vwind_mag > 0.0)) {
        throw Error(Module::param_sweep, "invalid-parameter", "physical parameters must be positive");
    }
    return {Complex(gamma), Complex(vwind_mag * vwind_mag)};
}

bool ParameterPoint::is_physical() const
{
    return gamma.imag() == 0.0 && vwind_sq.imag() == 0.0 && gamma.real() > 0.0 && vwind_sq.real() > 0.0;
}

std::vector<std::pair<double, double>> SweepGrid::points() const
{
    std::vector<std::pair<double, double>> out;
    for (double g : gamma) {
        for (double v : vwind) out.emplace_back(g, v);
    }
    return out;
}

std::string fingerprint(const poly::PolynomialSystem& family)
{
    std::uint64_t h = fnv1a("allflow-generic-cache/" + std::to_string(cache_format_version) + "\n");
    for (const auto& name : family.variable_names()) h = fnv1a(name + "\n", h);
    for (const auto& name : family.parameter_names()) h = fnv1a(name + "\n", h);
    h = fnv1a(family.dump(), h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ParameterPoint draw_generic_point(std::uint64_t seed, int k)
{
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
    ParameterPoint p{};
    for (int i = 0; i <= k; ++i) {
        p.gamma = generic_entry(rng);
        p.vwind_sq = generic_entry(rng);
    }
    return p;
}

GenericSolveCache solve_generic(const poly::PolynomialSystem& family, const homotopy::TrackerConfig& cfg)
{
    require_family(family);

    struct Attempt {
        ParameterPoint point;
        homotopy::SolutionSet set;
        std::size_t singular;
    };
    auto attempt = [&](int k) {
        const auto point = draw_generic_point(cfg.rng_seed, k);
        auto set = homotopy::solve_all(family.bind(point.values()), cfg);
        const auto singular = singular_count(set);
        return Attempt{point, std::move(set), singular};
    };
    auto accept = [&](Attempt a, int draws) {
        GenericSolveCache cache;
        cache.generic_point = a.point;
        cache.system_family = family;
        cache.fingerprint = fingerprint(family);
        cache.seed = cfg.rng_seed;
        cache.draws = draws;
        cache.start_solutions.path_stats = a.set.path_stats;
        cache.start_solutions.provenance = a.set.provenance;
        for (auto& s : a.set.solutions) {
            if (!s.is_singular) cache.start_solutions.solutions.push_back(std::move(s));
        }
        return cache;
    };

    // A generic point has no singular solutions beyond the ones every point of
    // the family shares, so the singular count must agree between two draws.
    std::vector<Attempt> seen;
    for (int k = 0; k < 3; ++k) {
        auto a = attempt(k);
        if (a.singular == 0) return accept(std::move(a), k + 1);
        for (auto& prev : seen) {
            if (prev.singular == a.singular) return accept(std::move(prev), k + 1);
        }
        seen.push_back(std::move(a));
    }
    throw Error(Module::param_sweep, "degenerate-generic-point",
                "singular solution count differed across three generic parameter draws");
}

void save_cache(const GenericSolveCache& cache, const std::string& path)
{
    json doc;
    doc["format"] = "allflow-generic-cache";
    doc["version"] = cache_format_version;
    doc["fingerprint"] = cache.fingerprint;
    doc["seed"] = cache.seed;
    doc["draws"] = cache.draws;
    doc["generic_point"] = {{"gamma", complex_pair(cache.generic_point.gamma)},
                            {"vwind_sq", complex_pair(cache.generic_point.vwind_sq)}};
    doc["gamma_h"] = complex_pair(cache.start_solutions.provenance.gamma);
    const auto& ps = cache.start_solutions.path_stats;
    doc["path_stats"] = {{"converged", ps.converged}, {"diverged", ps.diverged}, {"stalled", ps.stalled}};
    doc["variables"] = cache.system_family.variable_names();
    json sols = json::array();
    for (const auto& s : cache.start_solutions.solutions) {
        json row = json::array();
        for (Eigen::Index i = 0; i < s.x.size(); ++i) {
            row.push_back(s.x[i].real());
            row.push_back(s.x[i].imag());
        }
        sols.push_back(std::move(row));
    }
    doc["solutions"] = std::move(sols);

    std::ofstream out(path);
    if (!out) throw Error(Module::param_sweep, "cache-write-failed", "cannot write cache file '" + path + "'");
    out << doc.dump(1) << "\n";
}

std::optional<GenericSolveCache> load_cache(const std::string& path, const poly::PolynomialSystem& family,
                                            const homotopy::TrackerConfig& cfg,
                                            const std::function<void(const std::string&)>& log)
{
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception&) {
        note(log, "cache '" + path + "' is not valid JSON; rebuilding");
        return std::nullopt;
    }

    try {
        if (doc.at("format") != "allflow-generic-cache" || doc.at("version") != cache_format_version) {
            note(log, "cache '" + path + "' has another format version; rebuilding");
            return std::nullopt;
        }
        const auto expected = fingerprint(family);
        if (doc.at("fingerprint").get<std::string>() != expected) {
            note(log, "cache '" + path + "' was built for another system; rebuilding");
            return std::nullopt;
        }
        if (doc.at("seed").get<std::uint64_t>() != cfg.rng_seed) {
            note(log, "cache '" + path + "' was built with another seed; rebuilding");
            return std::nullopt;
        }

        GenericSolveCache cache;
        cache.fingerprint = expected;
        cache.seed = cfg.rng_seed;
        cache.draws = doc.at("draws").get<int>();
        cache.system_family = family;
        cache.generic_point.gamma = read_complex(doc.at("generic_point").at("gamma"));
        cache.generic_point.vwind_sq = read_complex(doc.at("generic_point").at("vwind_sq"));
        auto& stats = cache.start_solutions.path_stats;
        stats.converged = doc.at("path_stats").at("converged").get<std::uint64_t>();
        stats.diverged = doc.at("path_stats").at("diverged").get<std::uint64_t>();
        stats.stalled = doc.at("path_stats").at("stalled").get<std::uint64_t>();
        cache.start_solutions.provenance.config = cfg;
        cache.start_solutions.provenance.gamma = read_complex(doc.at("gamma_h"));
        cache.start_solutions.provenance.paths_tracked = stats.total();

        const auto n = static_cast<Eigen::Index>(family.variable_count());
        std::vector<homotopy::PathResult> endpoints;
        std::uint64_t index = 0;
        for (const auto& row : doc.at("solutions")) {
            if (static_cast<Eigen::Index>(row.size()) != 2 * n) throw std::runtime_error("solution length");
            homotopy::PathResult r;
            r.start_index = index++;
            r.endpoint.resize(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                r.endpoint[i] = {row[static_cast<std::size_t>(2 * i)].get<double>(),
                                 row[static_cast<std::size_t>(2 * i + 1)].get<double>()};
            }
            endpoints.push_back(std::move(r));
        }
        const poly::CompiledSystem at_generic(family.bind(cache.generic_point.values()));
        cache.start_solutions.solutions = homotopy::merge_endpoints(endpoints, at_generic, cfg);
        return cache;
    } catch (const std::exception& e) {
        note(log, "cache '" + path + "' is malformed (" + e.what() + "); rebuilding");
        return std::nullopt;
    }
}

GenericSolveCache obtain_cache(const poly::PolynomialSystem& family, const homotopy::TrackerConfig& cfg,
                               const std::optional<std::string>& path, bool* hit,
                               const std::function<void(const std::string&)>& log)
{
    if (path) {
        if (auto cached = load_cache(*path, family, cfg, log)) {
            if (hit) *hit = true;
            return std::move(*cached);
        }
    }
    if (hit) *hit = false;
    auto cache = solve_generic(family, cfg);
    if (path) save_cache(cache, *path);
    return cache;
}

homotopy::SolutionSet track_to_parameter(const GenericSolveCache& cache, const ParameterPoint& target,
                                         const homotopy::TrackerConfig& cfg)
{
    require_family(cache.system_family);
    const poly::CompiledSystem source(cache.system_family.bind(cache.generic_point.values()));
    const poly::CompiledSystem dest(cache.system_family.bind(target.values()));
    const homotopy::LinearHomotopy h(source, dest);
    const auto& starts = cache.start_solutions.solutions;
    auto out = homotopy::track_all(
        h, starts.size(), [&](std::uint64_t k) { return starts[static_cast<std::size_t>(k)].x; }, cfg);
    out.provenance.gamma = 1.0;
    return out;
}

homotopy::SolutionSet track_to_parameter(const GenericSolveCache& cache, const poly::PolynomialSystem& family,
                                         const ParameterPoint& target, const homotopy::TrackerConfig& cfg)
{
    if (fingerprint(family) != cache.fingerprint) {
        throw Error(Module::param_sweep, "fingerprint-mismatch", "cache was built for a different system family");
    }
    return track_to_parameter(cache, target, cfg);
}

SweepResult sweep(const net::Network& net, const SweepGrid& grid, const homotopy::TrackerConfig& cfg,
                  const SweepOptions& options)
{
    if (grid.gamma.empty() || grid.vwind.empty()) {
        throw Error(Module::param_sweep, "nonempty-invariant", "sweep grid must be nonempty");
    }
    for (double v : grid.gamma) {
        if (!(v > 0.0)) throw Error(Module::param_sweep, "invalid-grid", "gamma values must be positive");
    }
    for (double v : grid.vwind) {
        if (!(v > 0.0)) throw Error(Module::param_sweep, "invalid-grid", "wind voltage values must be positive");
    }

    SweepResult out{steady::build_equilibrium_family(net, options.formulation), {}, false, {}};
    out.cache = obtain_cache(out.problem.system, cfg, options.cache_path, &out.cache_hit, options.log);
    note(options.log, std::to_string(out.cache.start_solutions.solutions.size()) + " generic start solutions" +
                          (out.cache_hit ? " (from cache)" : ""));
    for (const auto& [g, v] : grid.points()) {
        out.points.push_back({g, v, track_to_parameter(out.cache, ParameterPoint::physical(g, v), cfg)});
    }
    return out;
}

}  // namespace allflow::sweep
