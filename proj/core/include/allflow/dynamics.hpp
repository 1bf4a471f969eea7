#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "allflow/netmodel.hpp"
#include "allflow/steady_poly.hpp"

namespace allflow::dyn {

using Complex = std::complex<double>;

// Turbine and generator relations.

/// C_p(lambda, beta) = 0.22 (116 / lambda_i - 0.4 beta - 5) exp(-12.5 / lambda_i).
/// Throws cp-pole when 1 / lambda_i vanishes, invalid-argument for lambda <= 0.
double cp_coefficient(double tip_speed_ratio, double pitch);

double tip_speed_ratio(double rotor_speed, double wind_speed, const net::Turbine& turbine);

/// Aerodynamic torque in N m for wind speed v_r (m/s) and rotor speed w_r (rad/s).
double aero_torque(double wind_speed, double rotor_speed, const net::Turbine& turbine);

struct ShaftCoupling {
    double generator_torque;          // N m, equal to the aerodynamic torque
    double generator_speed;           // rad/s, N_g w_r
    double generator_electrical_speed; // rad/s, (p / 2) w_g
};

ShaftCoupling shaft_coupling(double wind_speed, double rotor_speed, const net::Turbine& turbine, int poles);

double dfig_torque(double i_qs, double i_ds, double i_qr, double i_dr, const net::DfigParams& dfig);

struct DfigPower {
    double active;
    double reactive;
};

DfigPower dfig_power(double v_qs, double v_ds, double v_qr, double v_dr, double i_qs, double i_ds, double i_qr,
                     double i_dr);

// Small-signal model.

struct Machine {
    std::size_t bus_position;
    double inertia;
    double internal_voltage;
    double transient_reactance;
    double mechanical_power;
};

struct WindUnit {
    std::size_t bus_position;
    double v_qr;
    double v_dr;
    Eigen::Matrix4d inductance;  // multiplies the current derivatives
    Eigen::Matrix4d resistive;   // resistances and speed voltages
    double base_speed;           // rad/s; converts per-unit flux rates to time
};

/// Differential states: (delta_i, omega_i) for every machine at a pv bus, then
/// i_qs, i_ds, i_qr, i_dr of the DFIG. Algebraic states: (V_Re, V_Im) of every
/// non-slack bus in network order. The slack bus is an infinite bus.
class DaeModel {
public:
    DaeModel(const net::Network& net, std::vector<Machine> machines, std::optional<WindUnit> wind, double gamma);

    std::size_t state_size() const { return 2 * machines_.size() + (wind_ ? 4 : 0); }
    std::size_t algebraic_size() const { return 2 * algebraic_buses_.size(); }
    const std::vector<Machine>& machines() const { return machines_; }
    const std::optional<WindUnit>& wind() const { return wind_; }
    double gamma() const { return gamma_; }

    Eigen::VectorXd state_derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    Eigen::VectorXd algebraic_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

    /// Machine active and reactive output at its terminal.
    static Complex machine_power(const Machine& m, double delta, Complex v);

private:
    std::vector<Complex> bus_voltages(const Eigen::VectorXd& y) const;

    const net::Network* net_;
    std::vector<Machine> machines_;
    std::optional<WindUnit> wind_;
    double gamma_;
    std::vector<std::size_t> algebraic_buses_;
};

struct OperatingPoint {
    DaeModel model;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
};

/// Builds the model around a real steady state. Internal voltages and
/// mechanical powers are chosen so that the state is an equilibrium; rotor
/// voltages are held at their steady-state values.
OperatingPoint initialize(const net::Network& net, const steady::SteadyState& state, double gamma);

struct Linearization {
    Eigen::MatrixXd a, b, c, d;
    Eigen::MatrixXd reduced;
};

/// Central differences with step 1e-6 relative, then A - B D^-1 C. Throws
/// singular-algebraic when D is numerically singular.
Linearization linearize(const OperatingPoint& op);

/// Dense nonsymmetric eigenvalues, sorted by descending real part then
/// descending imaginary magnitude.
std::vector<Complex> eigenvalues(const Eigen::MatrixXd& m);

enum class Verdict { stable, marginal, unstable };
std::string to_string(Verdict v);

struct Mode {
    Complex eigenvalue;  // member of the pair with positive imaginary part
    double damping_ratio;
};

struct Stability {
    Verdict verdict;
    double max_real;
    std::vector<Mode> dominant;
};

/// Stable iff every real part is below -tol; marginal when the largest real
/// part lies in [-tol, tol]. Dominant modes are the two oscillatory pairs with
/// the largest real parts.
Stability classify_stability(const std::vector<Complex>& eigs, double tol = 1e-6);

double damping_ratio(Complex eigenvalue);

struct FeasibilityLimits {
    double rotor_voltage_max = 0.35;
    double q_wind_max_abs = 1.0;
    double voltage_min = 0.8;
    double voltage_max = 1.2;
};

void check_limits(const FeasibilityLimits& limits);

struct Feasibility {
    bool feasible = false;
    /// complex, singular, rotor-voltage, q-wind, voltage-band.
    std::vector<std::string> reasons;
};

Feasibility check_feasibility(const net::Network& net, const steady::SteadyState& state, bool is_real,
                              bool is_singular, const FeasibilityLimits& limits);

struct EquilibriumRecord {
    double gamma = 0.0;
    double vwind = 0.0;
    Eigen::VectorXd solution;
    steady::SteadyState state;
    Feasibility feasibility;
    /// Filled for feasible equilibria only.
    std::vector<Complex> eigenvalues;
    std::optional<Stability> stability;
    /// Set when a feasible equilibrium could not be classified.
    std::string unclassifiable;
    double derivative_residual = 0.0;
    double algebraic_residual = 0.0;
};

/// Feasibility, linearization and stability of one real solution.
EquilibriumRecord analyze_equilibrium(const net::Network& net, const steady::EquilibriumProblem& problem,
                                      const Eigen::VectorXd& solution, bool is_singular, double gamma, double vwind,
                                      const FeasibilityLimits& limits, double stability_tol = 1e-6);

}  // namespace allflow::dyn
