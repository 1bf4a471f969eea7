#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "allflow/netmodel.hpp"
#include "allflow/polynomial.hpp"

namespace allflow::steady {

using Complex = std::complex<double>;

/// `full` keeps every steady-state unknown (generator and wind reactive
/// injections, DFIG currents, rotor voltages and torque). `eliminated` keeps
/// the bus voltages and the DFIG stator currents only; everything else enters
/// linearly and is recovered from those by `interpret`. Both describe the
/// same solution set and have the same total degree.
enum class Formulation { full, eliminated };

enum class Quantity { v_re, v_im, q_gen, q_wind, i_qs, i_ds, i_qr, i_dr, v_qr, v_dr, torque };

struct VariableInfo {
    std::string name;
    Quantity quantity;
    int bus;
};

class VariableMap {
public:
    std::size_t add(Quantity quantity, int bus);
    std::size_t size() const { return entries_.size(); }
    const VariableInfo& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<VariableInfo>& entries() const { return entries_; }
    std::optional<std::size_t> find(Quantity quantity, int bus) const;
    std::vector<std::string> names() const;

private:
    std::vector<VariableInfo> entries_;
};

/// Parameter slot order of every family built here.
inline constexpr std::size_t gamma_slot = 0;
inline constexpr std::size_t vwind_sq_slot = 1;

struct EquilibriumProblem {
    poly::PolynomialSystem system;
    VariableMap variables;
    Formulation formulation = Formulation::full;
};

/// Parametric family P(x; gamma, |V_w|^2) with both parameter slots unbound.
EquilibriumProblem build_equilibrium_family(const net::Network& net, Formulation formulation = Formulation::full);

/// Family bound at a physical point. Requires gamma > 0 and vwind_mag > 0.
EquilibriumProblem build_equilibrium_system(const net::Network& net, double gamma, double vwind_mag,
                                            Formulation formulation = Formulation::full);

std::vector<Complex> parameter_values(double gamma, double vwind_mag);

struct DfigState {
    Complex i_qs, i_ds, i_qr, i_dr;
    Complex v_qr, v_dr;
    Complex torque;
};

/// Physical reading of one solution vector.
struct SteadyState {
    std::vector<Complex> voltages;           // by bus position; slack fixed at 1
    std::vector<Complex> reactive_injection; // by bus position; pv and wind buses, 0 elsewhere
    std::optional<DfigState> dfig;
    Complex wind_active{};
    Complex wind_reactive{};
    /// Largest |Im| over the solved unknowns; voltages above are formed as
    /// V_Re + i V_Im and only carry physical meaning when this is small.
    double max_imag = 0.0;

    bool is_real(double tol) const { return max_imag <= tol; }
};

SteadyState interpret(const net::Network& net, const EquilibriumProblem& problem, const Eigen::VectorXcd& x,
                      std::span<const Complex> params);

/// Solution vector for `map` (e.g. the full formulation) from a physical state.
Eigen::VectorXcd to_variables(const net::Network& net, const SteadyState& state, const VariableMap& map);

struct SlackInjection {
    double active;
    double reactive;
};

/// Power delivered by the slack bus at a real equilibrium. Computed after the
/// solve; never part of the polynomial system.
SlackInjection slack_injection(const net::Network& net, const SteadyState& state, double real_tol = 1e-8);

}  // namespace allflow::steady
