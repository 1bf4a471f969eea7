#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "allflow/polynomial.hpp"

namespace allflow::homotopy {

using Complex = std::complex<double>;

struct TrackerConfig {
    double newton_tol = 1e-10;
    int max_newton_iters = 10;
    double initial_step = 0.01;
    double min_step = 1e-14;
    double max_step = 0.1;
    double divergence_norm = 1e8;
    double endgame_start = 0.9;
    double dedup_tol = 1e-6;
    double real_tol = 1e-6;
    double singular_cond_threshold = 1e12;
    std::uint64_t rng_seed = 42;

    /// Largest Bezout count solve_all will attempt.
    std::uint64_t path_budget = std::uint64_t{1} << 26;
    /// Newton iterations per corrector step and the relative step size that
    /// counts as converged.
    int max_corrector_iters = 3;
    double corrector_tol = 1e-6;
    /// Each corrector update must shrink by at least this factor.
    double contraction = 0.5;
    /// When 1 - t falls below this the tracker stops and polishes at t = 1.
    double endgame_tail = 1e-6;
    /// 0 means worker_count().
    unsigned threads = 0;
};

/// Throws Error(homotopy, "invalid-config") when the invariants do not hold.
void check_config(const TrackerConfig& cfg);

/// x_i^{d_i} - 1 = 0. Start points are enumerated lazily in mixed radix
/// order over the degrees, index 0 being (1, ..., 1).
class StartSystem {
public:
    StartSystem() = default;
    StartSystem(std::vector<int> degrees, Complex gamma);

    const std::vector<int>& degrees() const { return degrees_; }
    Complex gamma() const { return gamma_; }
    std::uint64_t size() const { return size_; }
    std::size_t variable_count() const { return degrees_.size(); }

    Eigen::VectorXcd point(std::uint64_t index) const;
    void evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f, Eigen::MatrixXcd& jac) const;

private:
    std::vector<int> degrees_;
    Complex gamma_{1.0};
    std::uint64_t size_ = 0;
};

/// gamma_h = exp(i phi), phi uniform on [0, 2 pi) from the seed.
Complex draw_gamma(std::uint64_t seed);

StartSystem make_start_system(const poly::PolynomialSystem& sys, const TrackerConfig& cfg);

/// H(x, t) = g (1 - t) A(x) + t B(x). A is either a start system (g = its
/// gamma) or another compiled system (g = 1).
class LinearHomotopy {
public:
    LinearHomotopy(const StartSystem& source, const poly::CompiledSystem& target);
    LinearHomotopy(const poly::CompiledSystem& source, const poly::CompiledSystem& target);

    std::size_t variable_count() const { return target_->variable_count(); }
    const poly::CompiledSystem& target() const { return *target_; }

    /// H, dH/dx and dH/dt at (x, t).
    void evaluate(const Eigen::VectorXcd& x, double t, Eigen::VectorXcd& h, Eigen::MatrixXcd& hx,
                  Eigen::VectorXcd& ht) const;

private:
    void evaluate_source(const Eigen::VectorXcd& x, Eigen::VectorXcd& f, Eigen::MatrixXcd& jac) const;

    const StartSystem* start_ = nullptr;
    const poly::CompiledSystem* source_ = nullptr;
    const poly::CompiledSystem* target_;
    Complex gamma_{1.0};
};

enum class PathStatus { converged, diverged, stalled };
std::string to_string(PathStatus s);

struct PathResult {
    std::uint64_t start_index = 0;
    Eigen::VectorXcd start_point;
    Eigen::VectorXcd endpoint;
    PathStatus status = PathStatus::stalled;
    double final_t = 0.0;
    double endpoint_residual = 0.0;
    double endpoint_jacobian_condition = 0.0;
    int steps_taken = 0;
    int steps_rejected = 0;
    int steps_before_endgame = 0;
};

PathResult track_path(const LinearHomotopy& h, const Eigen::VectorXcd& start, const TrackerConfig& cfg,
                      std::uint64_t start_index = 0);

struct Solution {
    Eigen::VectorXcd x;
    bool is_real = false;
    bool is_singular = false;
    /// Number of converged paths that landed on this point.
    int multiplicity_hint = 1;
    double residual = 0.0;
    double condition = 0.0;
    /// Lowest start index among the paths that landed here.
    std::uint64_t first_path = 0;
};

struct PathStats {
    std::uint64_t converged = 0;
    std::uint64_t diverged = 0;
    std::uint64_t stalled = 0;
    std::uint64_t total() const { return converged + diverged + stalled; }
};

struct Provenance {
    TrackerConfig config;
    Complex gamma{1.0};
    std::uint64_t paths_tracked = 0;
};

struct SolutionSet {
    std::vector<Solution> solutions;
    PathStats path_stats;
    Provenance provenance;
};

/// Tracks `count` paths of `h`, path k starting at start(k), then merges the
/// endpoints into a SolutionSet. Results do not depend on the worker count.
SolutionSet track_all(const LinearHomotopy& h, std::uint64_t count,
                      const std::function<Eigen::VectorXcd(std::uint64_t)>& start, const TrackerConfig& cfg);

/// All isolated solutions of a bound square system by total-degree homotopy.
SolutionSet solve_all(const poly::PolynomialSystem& sys, const TrackerConfig& cfg);

/// Dedup, tag and sort converged endpoints. Exposed for reuse by param_sweep.
std::vector<Solution> merge_endpoints(const std::vector<PathResult>& converged, const poly::CompiledSystem& target,
                                      const TrackerConfig& cfg);

struct Classified {
    std::vector<Solution> real_regular;
    std::vector<Solution> real_singular;
    std::vector<Solution> complex;
};

/// Real solutions get their imaginary parts zeroed and are re-polished by
/// real Newton.
Classified classify_solutions(const SolutionSet& set, const poly::CompiledSystem& target, const TrackerConfig& cfg);

/// One solution per line: `status,is_real,is_singular,residual,re,im,...`.
std::string dump(const SolutionSet& set);

/// Max-norm distance.
double distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

}  // namespace allflow::homotopy
