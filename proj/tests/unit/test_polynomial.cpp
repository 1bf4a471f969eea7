#include <random>

#include <gtest/gtest.h>

#include "allflow/error.hpp"
#include "allflow/polynomial.hpp"
#include "oracles.hpp"

using namespace allflow;
using namespace allflow::poly;
using oracle::monomial;

namespace {

// x^2 - 1 in one unknown.
PolynomialSystem square_minus_one()
{
    return PolynomialSystem({"x"}, {}, {monomial(1, {2}, 1.0) + monomial(1, {}, -1.0)});
}

}  // namespace

TEST(Polynomial, ArithmeticAndDegree)
{
    const Polynomial x = Polynomial::indeterminate(2, 0);
    const Polynomial y = Polynomial::indeterminate(2, 1);
    const Polynomial p = x * x + Complex(3.0) * x * y - y + Polynomial::constant(2, 2.0);
    EXPECT_EQ(p.total_degree(), 2);
    EXPECT_EQ(p.degree_in(1, 1), 1);
    const std::vector<Complex> at{2.0, -1.0};
    EXPECT_EQ(p.evaluate(at), Complex(4.0 - 6.0 + 1.0 + 2.0));
    EXPECT_TRUE((p - p).is_zero());
    EXPECT_EQ(p.derivative(0).evaluate(at), Complex(2.0 * 2.0 + 3.0 * -1.0));
}

TEST(Polynomial, ZeroCoefficientsAreDropped)
{
    Polynomial p(1);
    p.add_term({1}, 2.0);
    p.add_term({1}, -2.0);
    EXPECT_TRUE(p.is_zero());
}

TEST(Residual, SimpleCases)
{
    const auto sys = square_minus_one();
    EXPECT_EQ(residual(sys, Eigen::VectorXcd::Constant(1, 1.0))(0), Complex(0.0));
    EXPECT_EQ(residual(sys, Eigen::VectorXcd::Zero(1))(0), Complex(-1.0));
}

TEST(Residual, ZeroVectorGivesConstants)
{
    std::mt19937_64 rng(3);
    const auto sys = oracle::random_complex_system(rng, {2, 2, 3});
    const auto r = residual(sys, Eigen::VectorXcd::Zero(3));
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& terms = sys.equations()[i].terms();
        EXPECT_EQ(r(i), terms.at(Exponents(3, 0)));
    }
}

TEST(Residual, UnboundParameter)
{
    PolynomialSystem sys({"x"}, {"lambda"}, {monomial(2, {2}, 1.0) - monomial(2, {0, 1}, 1.0)});
    try {
        residual(sys, Eigen::VectorXcd::Zero(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "unbound-parameter");
    }
    const auto bound = sys.bind({4.0});
    EXPECT_EQ(residual(bound, Eigen::VectorXcd::Constant(1, 2.0))(0), Complex(0.0));
    EXPECT_EQ(bound.degree(0), 2);
}

TEST(Jacobian, SimpleDerivative)
{
    PolynomialSystem sys({"x"}, {}, {monomial(1, {2}, 1.0)});
    EXPECT_EQ(system_jacobian(sys, Eigen::VectorXcd::Constant(1, 3.0))(0, 0), Complex(6.0));
    // Double root of x^2: derivative vanishes there.
    EXPECT_EQ(system_jacobian(sys, Eigen::VectorXcd::Zero(1))(0, 0), Complex(0.0));
}

TEST(Jacobian, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(11);
    const auto sys = oracle::random_complex_system(rng, {2, 3, 2});
    Eigen::VectorXcd x(3);
    x << Complex(0.3, -0.2), Complex(-0.7, 0.1), Complex(0.5, 0.4);
    const auto jac = system_jacobian(sys, x);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
        Eigen::VectorXcd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        const Eigen::VectorXcd fd = (residual(sys, xp) - residual(sys, xm)) / (2.0 * h);
        for (int i = 0; i < 3; ++i) {
            EXPECT_LT(std::abs(fd(i) - jac(i, j)), 1e-6 * (1.0 + std::abs(jac(i, j))));
        }
    }
}

TEST(TotalDegree, Products)
{
    EXPECT_EQ(total_degree(oracle::decoupled_squares({1.0, 2.0, 3.0})), 8u);
    std::mt19937_64 rng(5);
    EXPECT_EQ(total_degree(oracle::random_real_system(rng, {2, 3, 1})), 6u);
    EXPECT_EQ(total_degree(oracle::two_bus_family(Complex(0.0, 0.1))), 4u);
}

TEST(CompiledSystem, AgreesWithSymbolic)
{
    std::mt19937_64 rng(17);
    const auto sys = oracle::random_complex_system(rng, {2, 2, 3, 1});
    const CompiledSystem compiled(sys);
    EXPECT_EQ(compiled.degrees(), (std::vector<int>{2, 2, 3, 1}));
    EXPECT_FALSE(compiled.has_real_coefficients());
    Eigen::VectorXcd x = Eigen::VectorXcd::Random(4);
    Eigen::VectorXcd f;
    Eigen::MatrixXcd jac;
    compiled.evaluate(x, f, jac);
    EXPECT_LT((f - residual(sys, x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((jac - system_jacobian(sys, x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PolynomialSystem, DumpIsStable)
{
    const auto a = oracle::two_bus_family(Complex(0.0, 0.1));
    const auto b = oracle::two_bus_family(Complex(0.0, 0.1));
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_NE(a.dump(), oracle::two_bus_family(Complex(0.01, 0.1)).dump());
}
