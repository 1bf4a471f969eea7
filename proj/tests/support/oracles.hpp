#pragma once

// Independent reference results and fixture builders shared by the unit and
// acceptance tests. Nothing here calls into the solver.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "allflow/homotopy.hpp"
#include "allflow/netmodel.hpp"
#include "allflow/polynomial.hpp"

#ifndef ALLFLOW_DATA_DIR
#define ALLFLOW_DATA_DIR "data"
#endif

namespace oracle {

using Complex = std::complex<double>;
using allflow::poly::Polynomial;
using allflow::poly::PolynomialSystem;

inline std::string case_path(const std::string& name) { return std::string(ALLFLOW_DATA_DIR) + "/cases/" + name; }

// ---- two bus: slack 1∠0, line z, load G + jB (absorbing) at bus 2 ----
//
// Balance at bus 2 is conj(V) [(1/z + Y) V - 1/z] = 0 with Y = G - jB. With
// u = |V|^2 this gives conj(V) = u (1 + zY), hence u (u |1 + zY|^2 - 1) = 0.

struct TwoBus {
    Complex z{0.0, 0.1};
    double g = 0.5;
    double b = 0.0;
};

inline std::vector<Complex> two_bus_voltages(const TwoBus& c)
{
    const Complex k = 1.0 + c.z * Complex(c.g, -c.b);
    const double u = 1.0 / std::norm(k);
    return {Complex(0.0, 0.0), u * std::conj(k)};
}

inline allflow::net::Network two_bus_network(const TwoBus& c)
{
    using namespace allflow::net;
    Network n;
    Bus slack;
    slack.id = 1;
    slack.kind = BusKind::slack;
    slack.voltage_setpoint = 1.0;
    Bus load;
    load.id = 2;
    load.kind = BusKind::load;
    load.shunt_conductance = c.g;
    load.shunt_susceptance = c.b;
    n.buses = {slack, load};
    n.lines = {Line{1, 2, c.z}};
    return n;
}

// ---- single machine, infinite bus ----
//
// Machine at bus 1 (pv, |V| = v) behind x', lossless line x to the slack. The
// reduced model is m d2delta = P_m - E sin(delta) / (x' + x), so the swing pair is
// +- i sqrt(E cos(delta) / ((x' + x) m)) with E, delta from the pv power flow.

struct Smib {
    double v = 1.0;
    double x_line = 0.2;
    double x_prime = 0.25;
    double inertia = 0.05;
    double power = 0.5;
};

struct SmibEquilibrium {
    Complex terminal;
    Complex internal;
    double omega;  // imaginary part of the swing pair
};

inline SmibEquilibrium smib_equilibrium(const Smib& s)
{
    const double theta = std::asin(s.power * s.x_line / s.v);
    const Complex vt = std::polar(s.v, theta);
    const double q = (s.v * s.v - s.v * std::cos(theta)) / s.x_line;
    const Complex current = std::conj(Complex(s.power, q) / vt);
    const Complex e = vt + Complex(0.0, s.x_prime) * current;
    const double omega = std::sqrt(std::abs(e) * std::cos(std::arg(e)) / ((s.x_prime + s.x_line) * s.inertia));
    return {vt, e, omega};
}

inline allflow::net::Network smib_network(const Smib& s)
{
    using namespace allflow::net;
    Network n;
    Bus gen;
    gen.id = 1;
    gen.kind = BusKind::pv;
    gen.voltage_setpoint = s.v;
    Bus inf;
    inf.id = 2;
    inf.kind = BusKind::slack;
    inf.voltage_setpoint = 1.0;
    n.buses = {gen, inf};
    n.lines = {Line{1, 2, Complex(0.0, s.x_line)}};
    SyncGenerator g;
    g.bus = 1;
    g.inertia = s.inertia;
    g.internal_voltage = 1.0;
    g.transient_reactance = s.x_prime;
    g.mechanical_power = s.power;
    g.scheduled_active_power = s.power;
    n.generators = {g};
    return n;
}

// ---- synthetic polynomial systems ----

inline std::vector<std::string> names(const char* prefix, std::size_t n)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

inline Polynomial monomial(std::size_t slots, std::vector<std::uint16_t> exps, Complex c)
{
    Polynomial p(slots);
    exps.resize(slots, 0);
    p.add_term(exps, c);
    return p;
}

/// Dense random polynomial of the given degree with coefficients from `draw`.
template <class Draw>
Polynomial dense(std::size_t n, int degree, Draw&& draw)
{
    Polynomial p(n);
    std::vector<std::uint16_t> e(n, 0);
    // Enumerate exponent vectors with total degree <= degree.
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i == n) {
            p.add_term(e, draw());
            return;
        }
        for (int d = 0; d <= left; ++d) {
            e[i] = static_cast<std::uint16_t>(d);
            rec(i + 1, left - d);
        }
        e[i] = 0;
    };
    rec(0, degree);
    return p;
}

/// Random dense system with real coefficients, one equation of each degree.
inline PolynomialSystem random_real_system(std::mt19937_64& rng, const std::vector<int>& degrees)
{
    std::normal_distribution<double> nd;
    const std::size_t n = degrees.size();
    std::vector<Polynomial> eqs;
    for (int d : degrees) eqs.push_back(dense(n, d, [&] { return Complex(nd(rng), 0.0); }));
    return PolynomialSystem(names("x", n), {}, eqs);
}

inline PolynomialSystem random_complex_system(std::mt19937_64& rng, const std::vector<int>& degrees)
{
    std::normal_distribution<double> nd;
    const std::size_t n = degrees.size();
    std::vector<Polynomial> eqs;
    for (int d : degrees) eqs.push_back(dense(n, d, [&] { return Complex(nd(rng), nd(rng)); }));
    return PolynomialSystem(names("x", n), {}, eqs);
}

/// prod_i (x_i - r_i) style system: x_i^2 - c_i = 0 with known real roots.
inline PolynomialSystem decoupled_squares(const std::vector<double>& c)
{
    const std::size_t n = c.size();
    std::vector<Polynomial> eqs;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint16_t> e(n, 0);
        e[i] = 2;
        eqs.push_back(monomial(n, e, 1.0) + monomial(n, {}, -c[i]));
    }
    return PolynomialSystem(names("x", n), {}, eqs);
}

/// Two-bus balance equations in (e, f) with the load (G, B) as parameter
/// slots: G u + g (u - e) - b f = 0 and B u - g f - b (u - e) = 0 where
/// g + jb = 1/z and u = e^2 + f^2.
inline PolynomialSystem two_bus_family(Complex z)
{
    const Complex y = 1.0 / z;
    const double g = y.real(), b = y.imag();
    const std::size_t s = 4;  // e, f, G, B
    auto term = [&](std::vector<std::uint16_t> e, double c) { return monomial(s, std::move(e), c); };
    const Polynomial u = term({2}, 1.0) + term({0, 2}, 1.0);
    const Polynomial p = term({2, 0, 1}, 1.0) + term({0, 2, 1}, 1.0) + g * u + term({1}, -g) + term({0, 1}, -b);
    const Polynomial q = term({2, 0, 0, 1}, 1.0) + term({0, 2, 0, 1}, 1.0) + term({0, 1}, -g) + (-b) * u +
                         term({1}, b);
    return PolynomialSystem({"e", "f"}, {"G", "B"}, {p, q});
}

/// Four quadratics in four unknowns whose coefficients are affine in two
/// parameters: c0 + p1 c1 + p2 c2 with fixed random real c0, c1, c2.
inline PolynomialSystem synthetic_family(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const std::size_t n = 4, s = 6;
    std::vector<Polynomial> eqs;
    for (std::size_t k = 0; k < n; ++k) {
        Polynomial eq(s);
        const Polynomial base = dense(n, 2, [&] { return Complex(nd(rng), 0.0); });
        for (const auto& [e, c] : base.terms()) {
            std::vector<std::uint16_t> ex(e.begin(), e.end());
            ex.resize(s, 0);
            eq.add_term(ex, c);
            for (std::size_t p = 0; p < 2; ++p) {
                auto ep = ex;
                ep[n + p] = 1;
                eq.add_term(ep, Complex(0.3 * nd(rng), 0.0));
            }
        }
        eqs.push_back(eq);
    }
    return PolynomialSystem(names("x", n), {"p1", "p2"}, eqs);
}

// ---- solution set comparison ----

inline double max_dist(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Every point of `a` has a partner in `b` within tol and vice versa.
inline bool same_points(const std::vector<Eigen::VectorXcd>& a, const std::vector<Eigen::VectorXcd>& b, double tol,
                        std::string* why = nullptr)
{
    if (a.size() != b.size()) {
        if (why) *why = "sizes " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
        return false;
    }
    auto covered = [&](const auto& from, const auto& to) {
        for (const auto& x : from) {
            bool hit = false;
            for (const auto& y : to) hit = hit || max_dist(x, y) <= tol * (1.0 + x.cwiseAbs().maxCoeff());
            if (!hit) return false;
        }
        return true;
    };
    const bool ok = covered(a, b) && covered(b, a);
    if (!ok && why) *why = "unmatched point";
    return ok;
}

inline std::vector<Eigen::VectorXcd> points(const allflow::homotopy::SolutionSet& set)
{
    std::vector<Eigen::VectorXcd> out;
    for (const auto& s : set.solutions) out.push_back(s.x);
    return out;
}

/// Each solution's conjugate is also a solution.
inline bool conjugate_closed(const std::vector<Eigen::VectorXcd>& pts, double tol)
{
    std::vector<Eigen::VectorXcd> conj;
    for (const auto& p : pts) conj.push_back(p.conjugate());
    return same_points(pts, conj, tol);
}

}  // namespace oracle
