#include <random>
#include <set>

#include <gtest/gtest.h>

#include "allflow/error.hpp"
#include "allflow/homotopy.hpp"
#include "allflow/steady_poly.hpp"
#include "oracles.hpp"

using namespace allflow;
using namespace allflow::homotopy;
using oracle::monomial;
using poly::CompiledSystem;
using poly::PolynomialSystem;

namespace {

PolynomialSystem univariate(std::vector<std::pair<std::uint16_t, Complex>> terms)
{
    poly::Polynomial p(1);
    for (auto [e, c] : terms) p.add_term({e}, c);
    return PolynomialSystem({"x"}, {}, {p});
}

Eigen::VectorXcd vec(std::initializer_list<Complex> v)
{
    Eigen::VectorXcd x(v.size());
    int i = 0;
    for (auto c : v) x(i++) = c;
    return x;
}

}  // namespace

TEST(StartSystem, SquareRootsOfUnity)
{
    const auto sys = univariate({{2, 1.0}, {0, -2.0}});
    const auto start = make_start_system(sys, {});
    ASSERT_EQ(start.size(), 2u);
    EXPECT_LT(std::abs(start.point(0)(0) - 1.0), 1e-15);
    EXPECT_LT(std::abs(start.point(1)(0) + 1.0), 1e-15);
}

TEST(StartSystem, ThreeQuadratics)
{
    const auto start = make_start_system(oracle::decoupled_squares({1, 2, 3}), {});
    ASSERT_EQ(start.size(), 8u);
    std::set<std::tuple<int, int, int>> seen;
    for (std::uint64_t k = 0; k < 8; ++k) {
        const auto p = start.point(k);
        for (int i = 0; i < 3; ++i) {
            EXPECT_LT(std::abs(p(i).imag()), 1e-15);
            EXPECT_NEAR(std::abs(p(i).real()), 1.0, 1e-15);
        }
        seen.insert({p(0).real() > 0, p(1).real() > 0, p(2).real() > 0});
        Eigen::VectorXcd f;
        Eigen::MatrixXcd jac;
        start.evaluate(p, f, jac);
        EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-14);
    }
    EXPECT_EQ(seen.size(), 8u);
}

TEST(StartSystem, ZeroDegreeEquation)
{
    PolynomialSystem sys({"x", "y"}, {}, {monomial(2, {2}, 1.0), monomial(2, {}, 1.0)});
    try {
        make_start_system(sys, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "zero-degree-equation");
    }
}

TEST(Gamma, SeedDependentUnitModulus)
{
    const Complex a = draw_gamma(42), b = draw_gamma(43);
    EXPECT_NE(a, b);
    EXPECT_NEAR(std::abs(a), 1.0, 1e-15);
    EXPECT_EQ(a, draw_gamma(42));
}

TEST(TrackPath, RealDeformation)
{
    const CompiledSystem src(univariate({{2, 1.0}, {0, -1.0}}));
    const CompiledSystem dst(univariate({{2, 1.0}, {0, -4.0}}));
    const LinearHomotopy h(src, dst);
    const auto r = track_path(h, vec({1.0}), {});
    EXPECT_EQ(r.status, PathStatus::converged);
    EXPECT_LT(std::abs(r.endpoint(0) - 2.0), 1e-10);
    const auto r2 = track_path(h, vec({-1.0}), {});
    EXPECT_LT(std::abs(r2.endpoint(0) + 2.0), 1e-10);
}

TEST(TrackPath, ComplexRoots)
{
    const auto target = univariate({{2, 1.0}, {0, 1.0}});
    const CompiledSystem dst(target);
    const StartSystem start({2}, draw_gamma(7));
    const LinearHomotopy h(start, dst);
    for (std::uint64_t k = 0; k < 2; ++k) {
        const auto r = track_path(h, start.point(k), {}, k);
        EXPECT_EQ(r.status, PathStatus::converged);
        EXPECT_LT(std::abs(std::abs(r.endpoint(0).imag()) - 1.0), 1e-10);
        EXPECT_LT(std::abs(r.endpoint(0).real()), 1e-10);
        EXPECT_LT(r.endpoint_residual, 1e-10);
        EXPECT_DOUBLE_EQ(r.final_t, 1.0);
    }
}

TEST(TrackPath, InvalidStart)
{
    const CompiledSystem src(univariate({{2, 1.0}, {0, -1.0}}));
    const LinearHomotopy h(src, src);
    try {
        track_path(h, vec({3.0}), {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "invalid-start");
    }
}

TEST(SolveAll, SolutionAtInfinity)
{
    // x y - 1 = 0, x - 2 = 0: Bezout 2, one affine root.
    PolynomialSystem sys({"x", "y"}, {}, {monomial(2, {1, 1}, 1.0) + monomial(2, {}, -1.0),
                                          monomial(2, {1}, 1.0) + monomial(2, {}, -2.0)});
    const auto set = solve_all(sys, {});
    EXPECT_EQ(set.path_stats.total(), 2u);
    EXPECT_EQ(set.path_stats.converged, 1u);
    EXPECT_EQ(set.path_stats.diverged + set.path_stats.stalled, 1u);
    ASSERT_EQ(set.solutions.size(), 1u);
    EXPECT_LT(oracle::max_dist(set.solutions[0].x, vec({2.0, 0.5})), 1e-10);
}

TEST(SolveAll, FourRealRoots)
{
    const auto set = solve_all(oracle::decoupled_squares({1.0, 1.0}), {});
    ASSERT_EQ(set.solutions.size(), 4u);
    for (const auto& s : set.solutions) {
        EXPECT_TRUE(s.is_real);
        EXPECT_FALSE(s.is_singular);
        EXPECT_NEAR(std::abs(s.x(0)), 1.0, 1e-12);
        EXPECT_NEAR(std::abs(s.x(1)), 1.0, 1e-12);
    }
}

TEST(SolveAll, ImaginaryRoots)
{
    const auto set = solve_all(univariate({{2, 1.0}, {0, 1.0}}), {});
    ASSERT_EQ(set.solutions.size(), 2u);
    for (const auto& s : set.solutions) EXPECT_FALSE(s.is_real);
    const auto cl = classify_solutions(set, CompiledSystem(univariate({{2, 1.0}, {0, 1.0}})), {});
    EXPECT_TRUE(cl.real_regular.empty());
    EXPECT_EQ(cl.complex.size(), 2u);
}

TEST(SolveAll, TwoBusClosedForm)
{
    const oracle::TwoBus c;
    const auto p = steady::build_equilibrium_system(oracle::two_bus_network(c), 1.0, 1.0);
    const auto set = solve_all(p.system, {});
    std::vector<Eigen::VectorXcd> expected;
    for (Complex v : oracle::two_bus_voltages(c)) expected.push_back(vec({v.real(), v.imag()}));
    EXPECT_TRUE(oracle::same_points(oracle::points(set), expected, 1e-10));
    for (const auto& s : set.solutions) {
        EXPECT_TRUE(s.is_real);
        EXPECT_LT(s.residual, 1e-10);
    }
}

TEST(SolveAll, DoubleRootIsSingular)
{
    const auto sys = univariate({{2, 1.0}});
    const auto set = solve_all(sys, {});
    EXPECT_EQ(set.path_stats.total(), 2u);
    ASSERT_GE(set.solutions.size(), 1u);
    const auto cl = classify_solutions(set, CompiledSystem(sys), {});
    EXPECT_FALSE(cl.real_singular.empty());
    for (const auto& s : set.solutions) {
        EXPECT_TRUE(s.is_singular);
        EXPECT_LT(std::abs(s.x(0)), 1e-4);
    }
}

TEST(SolveAll, PathBudget)
{
    TrackerConfig cfg;
    cfg.path_budget = 4;
    try {
        solve_all(oracle::decoupled_squares({1, 2, 3}), cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "path-budget-exceeded");
    }
}

TEST(SolveAll, NotSquare)
{
    PolynomialSystem sys({"x", "y"}, {}, {monomial(2, {2}, 1.0)});
    EXPECT_THROW(solve_all(sys, {}), Error);
}

TEST(SolveAll, IndependentOfThreadCount)
{
    std::mt19937_64 rng(99);
    const auto sys = oracle::random_real_system(rng, {2, 2, 2, 2});
    TrackerConfig one, many;
    one.threads = 1;
    many.threads = 3;
    EXPECT_EQ(dump(solve_all(sys, one)), dump(solve_all(sys, many)));
}

TEST(SolveAll, GammaIndependence)
{
    const auto p = steady::build_equilibrium_system(oracle::two_bus_network({}), 1.0, 1.0);
    TrackerConfig a, b;
    b.rng_seed = 43;
    const auto sa = solve_all(p.system, a), sb = solve_all(p.system, b);
    EXPECT_NE(sa.provenance.gamma, sb.provenance.gamma);
    EXPECT_TRUE(oracle::same_points(oracle::points(sa), oracle::points(sb), 1e-8));
}

TEST(SolveAll, SolutionsAreSortedAndDistinct)
{
    std::mt19937_64 rng(5);
    const auto set = solve_all(oracle::random_real_system(rng, {2, 3}), {});
    for (std::size_t i = 0; i < set.solutions.size(); ++i) {
        for (std::size_t j = i + 1; j < set.solutions.size(); ++j) {
            EXPECT_GT(distance(set.solutions[i].x, set.solutions[j].x), 1e-6);
        }
    }
    EXPECT_LE(set.solutions.size(), 6u);
}

TEST(Classify, RealTolerance)
{
    const auto sys = univariate({{2, 1.0}, {0, -1.0}});
    const CompiledSystem compiled(sys);
    std::vector<PathResult> ends(2);
    ends[0].endpoint = vec({Complex(1.0, 1e-9)});
    ends[1].endpoint = vec({Complex(-1.0, 1e-3)});
    for (auto& e : ends) e.status = PathStatus::converged;
    ends[1].start_index = 1;
    const auto merged = merge_endpoints(ends, compiled, {});
    ASSERT_EQ(merged.size(), 2u);
    SolutionSet set;
    set.solutions = merged;
    const auto cl = classify_solutions(set, compiled, {});
    ASSERT_EQ(cl.real_regular.size(), 1u);
    ASSERT_EQ(cl.complex.size(), 1u);
    EXPECT_EQ(cl.real_regular[0].x(0).imag(), 0.0);
    EXPECT_NEAR(cl.real_regular[0].x(0).real(), 1.0, 1e-15);
}

TEST(Config, Invariants)
{
    TrackerConfig cfg;
    EXPECT_NO_THROW(check_config(cfg));
    cfg.min_step = 1.0;
    EXPECT_THROW(check_config(cfg), Error);
    cfg = {};
    cfg.newton_tol = -1;
    EXPECT_THROW(check_config(cfg), Error);
    cfg = {};
    cfg.endgame_start = 1.5;
    EXPECT_THROW(check_config(cfg), Error);
}

TEST(Dump, OneLinePerSolution)
{
    const auto set = solve_all(oracle::decoupled_squares({1.0, 4.0}), {});
    const auto text = dump(set);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
    EXPECT_EQ(text, dump(solve_all(oracle::decoupled_squares({1.0, 4.0}), {})));
}
