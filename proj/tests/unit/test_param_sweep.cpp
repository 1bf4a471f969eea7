#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "allflow/error.hpp"
#include "allflow/param_sweep.hpp"
#include "oracles.hpp"

using namespace allflow;
using namespace allflow::sweep;
using oracle::monomial;
using poly::PolynomialSystem;

namespace {

// x^2 - p1 with an unused second slot.
PolynomialSystem sqrt_family()
{
    return PolynomialSystem({"x"}, {"p1", "p2"}, {monomial(3, {2}, 1.0) - monomial(3, {0, 1}, 1.0)});
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("allflow_test_" + name)).string();
}

std::vector<Eigen::VectorXcd> column(std::initializer_list<Complex> values)
{
    std::vector<Eigen::VectorXcd> out;
    for (auto v : values) out.push_back(Eigen::VectorXcd::Constant(1, v));
    return out;
}

}  // namespace

TEST(GenericPoint, DeterministicAndBounded)
{
    for (int k = 0; k < 5; ++k) {
        const auto p = draw_generic_point(42, k);
        const auto q = draw_generic_point(42, k);
        EXPECT_EQ(p.gamma, q.gamma);
        EXPECT_EQ(p.vwind_sq, q.vwind_sq);
        for (Complex c : p.values()) {
            EXPECT_GE(std::abs(c), 0.5);
            EXPECT_LE(std::abs(c), 2.0);
        }
        EXPECT_FALSE(p.is_physical());
    }
    EXPECT_NE(draw_generic_point(42, 0).gamma, draw_generic_point(42, 1).gamma);
    EXPECT_NE(draw_generic_point(42, 0).gamma, draw_generic_point(43, 0).gamma);
}

TEST(ParameterPoint, Physical)
{
    const auto p = ParameterPoint::physical(1.5, 0.98);
    EXPECT_EQ(p.gamma, Complex(1.5));
    EXPECT_NEAR(p.vwind_sq.real(), 0.9604, 1e-15);
    EXPECT_TRUE(p.is_physical());
    EXPECT_THROW(ParameterPoint::physical(0.0, 1.0), Error);
}

TEST(SolveGeneric, SquareRoots)
{
    const auto cache = solve_generic(sqrt_family(), {});
    const Complex r = std::sqrt(cache.generic_point.gamma);
    EXPECT_TRUE(oracle::same_points(oracle::points(cache.start_solutions), column({r, -r}), 1e-10));
    EXPECT_EQ(cache.draws, 1);
    EXPECT_EQ(cache.fingerprint, fingerprint(sqrt_family()));
}

TEST(SolveGeneric, RequiresTwoSlots)
{
    PolynomialSystem one({"x"}, {"p"}, {monomial(2, {2}, 1.0) - monomial(2, {0, 1}, 1.0)});
    try {
        solve_generic(one, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "parameter-slots");
    }
}

TEST(TrackToParameter, SquareRoots)
{
    const auto cache = solve_generic(sqrt_family(), {});
    const auto set = track_to_parameter(cache, ParameterPoint{4.0, 1.0}, {});
    EXPECT_TRUE(oracle::same_points(oracle::points(set), column({2.0, -2.0}), 1e-10));
    for (const auto& s : set.solutions) EXPECT_TRUE(s.is_real);
}

TEST(TrackToParameter, IdentityAtGenericPoint)
{
    const auto cache = solve_generic(sqrt_family(), {});
    const auto set = track_to_parameter(cache, cache.generic_point, {});
    EXPECT_TRUE(oracle::same_points(oracle::points(set), oracle::points(cache.start_solutions), 1e-12));
}

TEST(TrackToParameter, TwoBusMatchesDirectSolve)
{
    const auto family = oracle::two_bus_family(Complex(0.0, 0.1));
    const auto cache = solve_generic(family, {});
    const auto direct_generic = homotopy::solve_all(family.bind(cache.generic_point.values()), {});
    EXPECT_EQ(cache.start_solutions.solutions.size(), direct_generic.solutions.size());
    EXPECT_EQ(cache.start_solutions.path_stats.total(), 4u);

    const auto tracked = track_to_parameter(cache, family, ParameterPoint{0.5, 0.0}, {});
    const auto direct = homotopy::solve_all(family.bind({0.5, 0.0}), {});
    EXPECT_TRUE(oracle::same_points(oracle::points(tracked), oracle::points(direct), 1e-8));
    EXPECT_EQ(tracked.solutions.size(), 2u);
}

TEST(TrackToParameter, FingerprintMismatch)
{
    const auto cache = solve_generic(sqrt_family(), {});
    try {
        track_to_parameter(cache, oracle::two_bus_family(Complex(0.0, 0.1)), ParameterPoint{1.0, 1.0}, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "fingerprint-mismatch");
    }
}

TEST(Fingerprint, SensitiveToCoefficients)
{
    EXPECT_EQ(fingerprint(oracle::two_bus_family(Complex(0.0, 0.1))),
              fingerprint(oracle::two_bus_family(Complex(0.0, 0.1))));
    EXPECT_NE(fingerprint(oracle::two_bus_family(Complex(0.0, 0.1))),
              fingerprint(oracle::two_bus_family(Complex(0.0, 0.11))));
    EXPECT_EQ(fingerprint(sqrt_family()).size(), 16u);
}

TEST(Cache, RoundTripAndHit)
{
    const auto family = oracle::two_bus_family(Complex(0.01, 0.1));
    const auto path = temp_path("roundtrip.json");
    std::filesystem::remove(path);

    bool hit = true;
    const auto first = obtain_cache(family, {}, path, &hit);
    EXPECT_FALSE(hit);
    ASSERT_TRUE(std::filesystem::exists(path));

    std::vector<std::string> notes;
    const auto second = obtain_cache(family, {}, path, &hit, [&](const std::string& s) { notes.push_back(s); });
    EXPECT_TRUE(hit);
    EXPECT_EQ(homotopy::dump(second.start_solutions), homotopy::dump(first.start_solutions));
    EXPECT_EQ(second.generic_point.gamma, first.generic_point.gamma);

    const auto loaded = load_cache(path, family, {});
    ASSERT_TRUE(loaded);
    EXPECT_EQ(loaded->fingerprint, first.fingerprint);
    std::filesystem::remove(path);
}

TEST(Cache, StaleFilesAreRejected)
{
    const auto family = oracle::two_bus_family(Complex(0.01, 0.1));
    const auto path = temp_path("stale.json");
    save_cache(solve_generic(family, {}), path);

    homotopy::TrackerConfig other_seed;
    other_seed.rng_seed = 7;
    std::string why;
    EXPECT_FALSE(load_cache(path, family, other_seed, [&](const std::string& s) { why = s; }));
    EXPECT_FALSE(why.empty());
    EXPECT_FALSE(load_cache(path, oracle::two_bus_family(Complex(0.02, 0.1)), {}));

    {
        std::ofstream out(path);
        out << "{ not json";
    }
    EXPECT_FALSE(load_cache(path, family, {}));
    EXPECT_FALSE(load_cache(temp_path("missing.json"), family, {}));

    bool hit = true;
    obtain_cache(family, {}, path, &hit);
    EXPECT_FALSE(hit);
    EXPECT_TRUE(load_cache(path, family, {}));
    std::filesystem::remove(path);
}

TEST(Cache, WriteFailure)
{
    try {
        save_cache(solve_generic(sqrt_family(), {}), "/nonexistent/dir/cache.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "cache-write-failed");
    }
}

TEST(Sweep, GridPoints)
{
    const SweepGrid grid{{0.5, 1.0}, {0.96, 0.98, 1.0}};
    const auto pts = grid.points();
    ASSERT_EQ(pts.size(), 6u);
    EXPECT_EQ(pts[0], std::make_pair(0.5, 0.96));
    EXPECT_EQ(pts[3], std::make_pair(1.0, 0.96));
}

TEST(Sweep, EmptyGrid)
{
    try {
        sweep::sweep(oracle::two_bus_network({}), SweepGrid{{}, {1.0}}, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "nonempty-invariant");
    }
    EXPECT_THROW(sweep::sweep(oracle::two_bus_network({}), SweepGrid{{-1.0}, {1.0}}, {}), Error);
}

TEST(Sweep, SinglePointMatchesTrack)
{
    const auto net = oracle::smib_network({});
    const auto result = sweep::sweep(net, SweepGrid{{1.0}, {1.0}}, {});
    ASSERT_EQ(result.points.size(), 1u);
    const auto direct = track_to_parameter(result.cache, ParameterPoint::physical(1.0, 1.0), {});
    EXPECT_EQ(homotopy::dump(result.points[0].solutions), homotopy::dump(direct));
    EXPECT_FALSE(result.cache_hit);
}
