#include "allflow/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "allflow/error.hpp"
#include "allflow/parallel.hpp"

namespace allflow::homotopy {

namespace {

double max_norm(const Eigen::VectorXcd& v)
{
    double m = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
    return m;
}

bool all_finite(const Eigen::VectorXcd& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
    }
    return true;
}

[[noreturn]] void config_error(const std::string& what) { throw Error(Module::homotopy, "invalid-config", what); }

double condition_number(const Eigen::MatrixXcd& jac)
{
    if (jac.size() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(jac);
    const auto& s = svd.singularValues();
    const double smin = s[s.size() - 1];
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return s[0] / smin;
}

/// Newton on H(., t) from x. Returns false on non-convergence or loss of contraction.
bool correct(const LinearHomotopy& h, Eigen::VectorXcd& x, double t, const TrackerConfig& cfg)
{
    Eigen::VectorXcd hv, ht;
    Eigen::MatrixXcd hx;
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.max_corrector_iters; ++k) {
        h.evaluate(x, t, hv, hx, ht);
        const Eigen::VectorXcd dx = hx.partialPivLu().solve(hv);
        if (!all_finite(dx)) return false;
        const double size = max_norm(dx);
        x -= dx;
        const double scale = 1.0 + max_norm(x);
        if (size <= cfg.corrector_tol * scale) return true;
        if (size > cfg.contraction * previous) return false;
        previous = size;
    }
    return false;
}

struct Polish {
    Eigen::VectorXcd x;
    double residual;
};

Polish polish_at_one(const poly::CompiledSystem& target, Eigen::VectorXcd x, const TrackerConfig& cfg)
{
    Eigen::VectorXcd f;
    Eigen::MatrixXcd jac;
    target.evaluate(x, f, jac);
    Polish best{x, all_finite(f) ? max_norm(f) : std::numeric_limits<double>::infinity()};
    for (int k = 0; k < cfg.max_newton_iters; ++k) {
        if (best.residual < cfg.newton_tol * 1e-3) break;
        const Eigen::VectorXcd dx = jac.partialPivLu().solve(f);
        if (!all_finite(dx)) break;
        x -= dx;
        target.evaluate(x, f, jac);
        if (!all_finite(f)) break;
        const double r = max_norm(f);
        if (r < best.residual) best = {x, r};
        if (max_norm(dx) <= 1e-15 * (1.0 + max_norm(x))) break;
    }
    return best;
}

std::vector<double> sort_key(const Eigen::VectorXcd& x, double grid)
{
    std::vector<double> key;
    key.reserve(static_cast<std::size_t>(2 * x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        key.push_back(std::round(x[i].real() / grid));
        key.push_back(std::round(x[i].imag() / grid));
    }
    return key;
}

std::string number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void check_config(const TrackerConfig& cfg)
{
    if (!(cfg.min_step > 0.0 && cfg.min_step < cfg.initial_step && cfg.initial_step <= cfg.max_step &&
          cfg.max_step < 1.0)) {
        config_error("steps must satisfy 0 < min_step < initial_step <= max_step < 1");
    }
    for (double v : {cfg.newton_tol, cfg.divergence_norm, cfg.dedup_tol, cfg.real_tol, cfg.singular_cond_threshold,
                     cfg.corrector_tol, cfg.endgame_tail}) {
        if (!(v > 0.0)) config_error("tolerances must be positive");
    }
    if (!(cfg.endgame_start > 0.0 && cfg.endgame_start < 1.0)) config_error("endgame_start must lie in (0, 1)");
    if (!(cfg.contraction > 0.0 && cfg.contraction < 1.0)) config_error("contraction must lie in (0, 1)");
    if (cfg.max_newton_iters < 1 || cfg.max_corrector_iters < 1) config_error("iteration limits must be positive");
    if (cfg.path_budget == 0) config_error("path budget must be positive");
}

StartSystem::StartSystem(std::vector<int> degrees, Complex gamma) : degrees_(std::move(degrees)), gamma_(gamma)
{
    size_ = 1;
    for (int d : degrees_) {
        if (d < 1) throw Error(Module::homotopy, "zero-degree-equation", "start system needs positive degrees");
        const auto ud = static_cast<std::uint64_t>(d);
        size_ = size_ > std::numeric_limits<std::uint64_t>::max() / ud ? std::numeric_limits<std::uint64_t>::max()
                                                                          : size_ * ud;
    }
}

Eigen::VectorXcd StartSystem::point(std::uint64_t index) const
{
    Eigen::VectorXcd x(static_cast<Eigen::Index>(degrees_.size()));
    for (std::size_t i = 0; i < degrees_.size(); ++i) {
        const auto d = static_cast<std::uint64_t>(degrees_[i]);
        const std::uint64_t digit = index % d;
        index /= d;
        if (digit == 0) {
            x[static_cast<Eigen::Index>(i)] = 1.0;
        } else {
            x[static_cast<Eigen::Index>(i)] =
                std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(digit) / static_cast<double>(d));
        }
    }
    return x;
}

void StartSystem::evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f, Eigen::MatrixXcd& jac) const
{
    const auto n = static_cast<Eigen::Index>(degrees_.size());
    f.resize(n);
    jac.setZero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int d = degrees_[static_cast<std::size_t>(i)];
        Complex lower(1.0);
        for (int k = 1; k < d; ++k) lower *= x[i];
        f[i] = lower * x[i] - 1.0;
        jac(i, i) = static_cast<double>(d) * lower;
    }
}

Complex draw_gamma(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::polar(1.0, 2.0 * std::numbers::pi * u);
}

StartSystem make_start_system(const poly::PolynomialSystem& sys, const TrackerConfig& cfg)
{
    if (!sys.is_square()) throw Error(Module::homotopy, "not-square", "start system needs a square target");
    std::vector<int> degrees;
    for (std::size_t i = 0; i < sys.equation_count(); ++i) {
        const int d = sys.degree(i);
        if (d < 1) {
            throw Error(Module::homotopy, "zero-degree-equation",
                        "equation " + std::to_string(i) + " is constant in the variables");
        }
        degrees.push_back(d);
    }
    return StartSystem(std::move(degrees), draw_gamma(cfg.rng_seed));
}

LinearHomotopy::LinearHomotopy(const StartSystem& source, const poly::CompiledSystem& target)
    : start_(&source), target_(&target), gamma_(source.gamma())
{
    if (source.variable_count() != target.variable_count() || target.equation_count() != target.variable_count()) {
        throw Error(Module::homotopy, "dimension-mismatch", "start and target systems differ in size");
    }
}

LinearHomotopy::LinearHomotopy(const poly::CompiledSystem& source, const poly::CompiledSystem& target)
    : source_(&source), target_(&target)
{
    if (source.variable_count() != target.variable_count() || source.equation_count() != target.equation_count() ||
        target.equation_count() != target.variable_count()) {
        throw Error(Module::homotopy, "dimension-mismatch", "source and target systems differ in size");
    }
}

void LinearHomotopy::evaluate_source(const Eigen::VectorXcd& x, Eigen::VectorXcd& f, Eigen::MatrixXcd& jac) const
{
    if (start_) {
        start_->evaluate(x, f, jac);
    } else {
        source_->evaluate(x, f, jac);
    }
}

void LinearHomotopy::evaluate(const Eigen::VectorXcd& x, double t, Eigen::VectorXcd& h, Eigen::MatrixXcd& hx,
                              Eigen::VectorXcd& ht) const
{
    // Scratch buffers: the tracker calls this in its inner loop from many threads.
    thread_local Eigen::VectorXcd fa, fb;
    thread_local Eigen::MatrixXcd ja, jb;
    evaluate_source(x, fa, ja);
    target_->evaluate(x, fb, jb);
    const Complex ga = gamma_ * (1.0 - t);
    h.noalias() = ga * fa + t * fb;
    hx.noalias() = ga * ja + t * jb;
    ht.noalias() = fb - gamma_ * fa;
}

std::string to_string(PathStatus s)
{
    switch (s) {
    case PathStatus::converged: return "converged";
    case PathStatus::diverged: return "diverged";
    case PathStatus::stalled: return "stalled";
    }
    return "unknown";
}

PathResult track_path(const LinearHomotopy& h, const Eigen::VectorXcd& start, const TrackerConfig& cfg,
                      std::uint64_t start_index)
{
    if (static_cast<std::size_t>(start.size()) != h.variable_count()) {
        throw Error(Module::homotopy, "dimension-mismatch", "start point has the wrong length");
    }
    PathResult out;
    out.start_index = start_index;
    out.start_point = start;

    Eigen::VectorXcd hv, ht;
    Eigen::MatrixXcd hx;
    h.evaluate(start, 0.0, hv, hx, ht);
    if (!all_finite(hv) || max_norm(hv) > 1e-6 * (1.0 + max_norm(start))) {
        throw Error(Module::homotopy, "invalid-start", "start point does not satisfy H(x, 0) = 0");
    }

    Eigen::VectorXcd x = start;
    double t = 0.0;
    double dt = cfg.initial_step;
    int successes = 0;
    bool stalled = false;
    double endgame_norm = -1.0;
    // Paths heading to infinity grow without bound as t -> 1; finite singular
    // endpoints do not.
    auto runaway = [&] {
        const double n = max_norm(x);
        return n > std::sqrt(cfg.divergence_norm) || (endgame_norm >= 0.0 && n > 10.0 * (1.0 + endgame_norm));
    };

    while (t < 1.0) {
        if (endgame_norm < 0.0 && t >= cfg.endgame_start) endgame_norm = max_norm(x);
        const double cap = t >= cfg.endgame_start ? cfg.max_step / 10.0 : cfg.max_step;
        dt = std::min({dt, cap, 1.0 - t});

        h.evaluate(x, t, hv, hx, ht);
        const Eigen::VectorXcd dxdt = -hx.partialPivLu().solve(ht);
        Eigen::VectorXcd candidate = x + dt * dxdt;
        const double t_next = (1.0 - t - dt) <= 0.0 ? 1.0 : t + dt;

        bool ok = all_finite(dxdt) && correct(h, candidate, t_next, cfg);
        ++out.steps_taken;
        if (t < cfg.endgame_start) ++out.steps_before_endgame;
        if (ok) {
            x = std::move(candidate);
            t = t_next;
            if (max_norm(x) > cfg.divergence_norm) {
                out.status = PathStatus::diverged;
                out.final_t = t;
                out.endpoint = x;
                return out;
            }
            if (++successes >= 3) {
                dt *= 1.5;
                successes = 0;
            }
        } else {
            successes = 0;
            ++out.steps_rejected;
            dt *= 0.5;
            if (1.0 - t < cfg.endgame_tail) break;
            if (dt < cfg.min_step) {
                stalled = true;
                break;
            }
        }
    }

    out.final_t = t;
    if (stalled) {
        out.status = runaway() ? PathStatus::diverged : PathStatus::stalled;
        out.endpoint = x;
        return out;
    }

    auto polished = polish_at_one(h.target(), x, cfg);
    out.endpoint = polished.x;
    out.endpoint_residual = polished.residual;
    // A polish that moves far from the tracked point has left the path (typically a
    // path heading to infinity being pulled onto some unrelated finite root).
    const bool stayed = distance(polished.x, x) <= 1e-2 * (1.0 + max_norm(polished.x));
    if (stayed && polished.residual < cfg.newton_tol * 10.0 && max_norm(polished.x) <= cfg.divergence_norm) {
        out.status = PathStatus::converged;
        out.final_t = 1.0;
        Eigen::VectorXcd f;
        Eigen::MatrixXcd jac;
        h.target().evaluate(polished.x, f, jac);
        out.endpoint_jacobian_condition = condition_number(jac);
    } else {
        out.status = runaway() ? PathStatus::diverged : PathStatus::stalled;
    }
    return out;
}

double distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b)
{
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    return max_norm(a - b);
}

std::vector<Solution> merge_endpoints(const std::vector<PathResult>& converged, const poly::CompiledSystem& target,
                                      const TrackerConfig& cfg)
{
    std::vector<const PathResult*> ordered;
    ordered.reserve(converged.size());
    for (const auto& p : converged) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(),
              [](const PathResult* a, const PathResult* b) { return a->start_index < b->start_index; });

    // Newton step length at each endpoint estimates its forward error. It is
    // negligible at regular roots and comparable to the distance to the root
    // near a multiple one, where the endgame stops well short of it.
    const double widen_cap = std::sqrt(cfg.dedup_tol);
    std::vector<double> err(ordered.size(), 0.0);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        Eigen::VectorXcd f;
        Eigen::MatrixXcd jac;
        target.evaluate(ordered[i]->endpoint, f, jac);
        const Eigen::VectorXcd step = jac.fullPivLu().solve(f);
        const double e = step.allFinite() ? max_norm(step) : widen_cap;
        err[i] = std::min(e, widen_cap);
    }

    std::vector<Solution> unique;
    std::vector<double> unique_err;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const auto* p = ordered[i];
        bool merged = false;
        for (std::size_t j = 0; j < unique.size(); ++j) {
            auto& s = unique[j];
            if (distance(s.x, p->endpoint) < cfg.dedup_tol + 10.0 * (err[i] + unique_err[j])) {
                ++s.multiplicity_hint;
                merged = true;
                break;
            }
        }
        if (merged) continue;
        Solution s;
        s.x = p->endpoint;
        s.residual = p->endpoint_residual;
        s.condition = p->endpoint_jacobian_condition;
        s.first_path = p->start_index;
        unique.push_back(std::move(s));
        unique_err.push_back(err[i]);
    }

    for (auto& s : unique) {
        Eigen::VectorXcd f;
        Eigen::MatrixXcd jac;
        target.evaluate(s.x, f, jac);
        s.residual = max_norm(f);
        s.condition = condition_number(jac);
        double im = 0.0;
        for (Eigen::Index i = 0; i < s.x.size(); ++i) im = std::max(im, std::abs(s.x[i].imag()));
        s.is_real = im < cfg.real_tol;
        s.is_singular = s.condition > cfg.singular_cond_threshold || s.multiplicity_hint >= 2;
    }

    std::vector<std::pair<std::vector<double>, std::size_t>> keys;
    keys.reserve(unique.size());
    for (std::size_t i = 0; i < unique.size(); ++i) keys.emplace_back(sort_key(unique[i].x, cfg.dedup_tol), i);
    std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return unique[a.second].first_path < unique[b.second].first_path;
    });
    std::vector<Solution> sorted;
    sorted.reserve(unique.size());
    for (const auto& k : keys) sorted.push_back(std::move(unique[k.second]));
    return sorted;
}

SolutionSet track_all(const LinearHomotopy& h, std::uint64_t count,
                      const std::function<Eigen::VectorXcd(std::uint64_t)>& start, const TrackerConfig& cfg)
{
    check_config(cfg);
    std::vector<std::uint8_t> status(count, 0);
    std::vector<PathResult> converged;
    std::mutex mutex;

    parallel_for(count, cfg.threads ? cfg.threads : worker_count(), [&](std::uint64_t k) {
        PathResult r = track_path(h, start(k), cfg, k);
        status[k] = static_cast<std::uint8_t>(r.status);
        if (r.status == PathStatus::converged) {
            r.start_point.resize(0);
            std::lock_guard lock(mutex);
            converged.push_back(std::move(r));
        }
    });

    SolutionSet out;
    for (auto s : status) {
        switch (static_cast<PathStatus>(s)) {
        case PathStatus::converged: ++out.path_stats.converged; break;
        case PathStatus::diverged: ++out.path_stats.diverged; break;
        case PathStatus::stalled: ++out.path_stats.stalled; break;
        }
    }
    out.solutions = merge_endpoints(converged, h.target(), cfg);
    out.provenance.config = cfg;
    out.provenance.paths_tracked = count;
    return out;
}

SolutionSet solve_all(const poly::PolynomialSystem& sys, const TrackerConfig& cfg)
{
    check_config(cfg);
    if (!sys.is_square()) throw Error(Module::homotopy, "not-square", "solve_all needs a square system");
    const std::uint64_t bezout = poly::total_degree(sys);
    if (bezout > cfg.path_budget) {
        throw Error(Module::homotopy, "path-budget-exceeded",
                    "total degree " + std::to_string(bezout) + " exceeds the path budget " +
                        std::to_string(cfg.path_budget) + "; use the parameter sweep instead");
    }
    const StartSystem start = make_start_system(sys, cfg);
    const poly::CompiledSystem target(sys);
    const LinearHomotopy h(start, target);
    auto out = track_all(h, start.size(), [&](std::uint64_t k) { return start.point(k); }, cfg);
    out.provenance.gamma = start.gamma();
    return out;
}

Classified classify_solutions(const SolutionSet& set, const poly::CompiledSystem& target, const TrackerConfig& cfg)
{
    Classified out;
    for (const auto& s : set.solutions) {
        if (!s.is_real) {
            out.complex.push_back(s);
            continue;
        }
        Solution r = s;
        Eigen::VectorXcd x = s.x.real().cast<Complex>();
        Eigen::VectorXcd f;
        Eigen::MatrixXcd jac;
        target.evaluate(x, f, jac);
        Eigen::VectorXcd best = x;
        double best_res = max_norm(f);
        for (int k = 0; k < cfg.max_newton_iters && best_res >= cfg.newton_tol * 1e-3; ++k) {
            const Eigen::MatrixXd jr = jac.real();
            const Eigen::VectorXd dx = jr.partialPivLu().solve(f.real());
            if (!dx.allFinite()) break;
            x -= dx.cast<Complex>();
            target.evaluate(x, f, jac);
            const double res = max_norm(f);
            if (!(res < best_res)) break;
            best = x;
            best_res = res;
        }
        r.x = best;
        r.residual = best_res;
        if (r.is_singular) {
            out.real_singular.push_back(std::move(r));
        } else {
            out.real_regular.push_back(std::move(r));
        }
    }
    return out;
}

std::string dump(const SolutionSet& set)
{
    std::ostringstream out;
    for (const auto& s : set.solutions) {
        out << "converged," << (s.is_real ? 1 : 0) << "," << (s.is_singular ? 1 : 0) << "," << number(s.residual);
        for (Eigen::Index i = 0; i < s.x.size(); ++i) {
            out << "," << number(s.x[i].real()) << "," << number(s.x[i].imag());
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace allflow::homotopy
