#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "allflow/homotopy.hpp"
#include "allflow/netmodel.hpp"
#include "allflow/polynomial.hpp"
#include "allflow/steady_poly.hpp"

namespace allflow::sweep {

using Complex = std::complex<double>;

/// Values for the two parameter slots of an equilibrium family: the wind
/// scaling gamma and the squared wind bus voltage magnitude.
struct ParameterPoint {
    Complex gamma;
    Complex vwind_sq;

    static ParameterPoint physical(double gamma, double vwind_mag);
    bool is_physical() const;
    std::vector<Complex> values() const { return {gamma, vwind_sq}; }
};

struct GenericSolveCache {
    ParameterPoint generic_point;
    /// Regular solutions at the generic point; singular ones are dropped.
    homotopy::SolutionSet start_solutions;
    poly::PolynomialSystem system_family;
    std::string fingerprint;
    std::uint64_t seed = 0;
    /// Generic points drawn before one was accepted.
    int draws = 1;
};

struct SweepGrid {
    std::vector<double> gamma;
    std::vector<double> vwind;

    /// Cross product, gamma in the outer loop.
    std::vector<std::pair<double, double>> points() const;
};

inline constexpr int cache_format_version = 1;

/// Hex FNV-1a hash over the family's canonical dump and the cache version.
std::string fingerprint(const poly::PolynomialSystem& family);

/// Generic point draw k (0-based) for a seed: each entry has modulus uniform
/// in [0.5, 2] and a uniform phase.
ParameterPoint draw_generic_point(std::uint64_t seed, int k);

GenericSolveCache solve_generic(const poly::PolynomialSystem& family, const homotopy::TrackerConfig& cfg);

void save_cache(const GenericSolveCache& cache, const std::string& path);

/// Reads a cache file. Returns nullopt (with a note through `log`) when the
/// file is missing, unreadable, of another version, or was built for another
/// family or seed.
std::optional<GenericSolveCache> load_cache(const std::string& path, const poly::PolynomialSystem& family,
                                            const homotopy::TrackerConfig& cfg,
                                            const std::function<void(const std::string&)>& log = {});

/// Loads `path` when it matches, otherwise solves and writes it back.
/// `hit` reports whether tracking was skipped.
GenericSolveCache obtain_cache(const poly::PolynomialSystem& family, const homotopy::TrackerConfig& cfg,
                               const std::optional<std::string>& path, bool* hit = nullptr,
                               const std::function<void(const std::string&)>& log = {});

/// Tracks every cached start solution along (1 - t) P(x, lambda*) + t P(x, lambda).
homotopy::SolutionSet track_to_parameter(const GenericSolveCache& cache, const ParameterPoint& target,
                                         const homotopy::TrackerConfig& cfg);

/// As above, but first checks that `family` is the one the cache was built for.
homotopy::SolutionSet track_to_parameter(const GenericSolveCache& cache, const poly::PolynomialSystem& family,
                                         const ParameterPoint& target, const homotopy::TrackerConfig& cfg);

struct SweepOptions {
    steady::Formulation formulation = steady::Formulation::eliminated;
    std::optional<std::string> cache_path;
    std::function<void(const std::string&)> log;
};

struct PointResult {
    double gamma;
    double vwind;
    homotopy::SolutionSet solutions;
};

struct SweepResult {
    steady::EquilibriumProblem problem;
    GenericSolveCache cache;
    bool cache_hit = false;
    std::vector<PointResult> points;
};

SweepResult sweep(const net::Network& net, const SweepGrid& grid, const homotopy::TrackerConfig& cfg,
                  const SweepOptions& options = {});

}  // namespace allflow::sweep
