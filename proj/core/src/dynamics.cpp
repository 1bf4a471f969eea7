#include "allflow/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "allflow/error.hpp"

namespace allflow::dyn {

using net::BusKind;

double cp_coefficient(double tip_speed_ratio, double pitch)
{
    if (!(tip_speed_ratio > 0.0)) {
        throw Error(Module::dynamics, "invalid-argument", "tip speed ratio must be positive");
    }
    const double a = 1.0 / (tip_speed_ratio + 0.08 * pitch);
    const double b = 0.035 / (pitch * pitch * pitch + 1.0);
    const double inner = a - b;
    if (!std::isfinite(inner) || std::abs(inner) <= 1e-12 * std::max(std::abs(a), std::abs(b))) {
        throw Error(Module::dynamics, "cp-pole", "lambda_i is singular at this tip speed ratio and pitch");
    }
    const double lambda_i = 1.0 / inner;
    return 0.22 * (116.0 / lambda_i - 0.4 * pitch - 5.0) * std::exp(-12.5 / lambda_i);
}

double tip_speed_ratio(double rotor_speed, double wind_speed, const net::Turbine& turbine)
{
    if (!(rotor_speed > 0.0) || !(wind_speed > 0.0)) {
        throw Error(Module::dynamics, "invalid-argument", "rotor and wind speeds must be positive");
    }
    return rotor_speed * turbine.blade_length / wind_speed;
}

double aero_torque(double wind_speed, double rotor_speed, const net::Turbine& turbine)
{
    const double cp = cp_coefficient(tip_speed_ratio(rotor_speed, wind_speed, turbine), turbine.pitch);
    return turbine.air_density * turbine.swept_area * wind_speed * wind_speed * wind_speed * cp / (2.0 * rotor_speed);
}

ShaftCoupling shaft_coupling(double wind_speed, double rotor_speed, const net::Turbine& turbine, int poles)
{
    const double wg = turbine.gear_ratio * rotor_speed;
    return {aero_torque(wind_speed, rotor_speed, turbine), wg, 0.5 * poles * wg};
}

double dfig_torque(double i_qs, double i_ds, double i_qr, double i_dr, const net::DfigParams& dfig)
{
    return -0.75 * dfig.poles * dfig.magnetizing * (i_qs * i_dr - i_ds * i_qr);
}

DfigPower dfig_power(double v_qs, double v_ds, double v_qr, double v_dr, double i_qs, double i_ds, double i_qr,
                     double i_dr)
{
    return {v_qs * i_qs + v_ds * i_ds + v_dr * i_dr + v_qr * i_qr,
            v_ds * i_qs - v_qs * i_ds + v_dr * i_qr - v_qr * i_dr};
}

DaeModel::DaeModel(const net::Network& net, std::vector<Machine> machines, std::optional<WindUnit> wind, double gamma)
    : net_(&net), machines_(std::move(machines)), wind_(std::move(wind)), gamma_(gamma)
{
    for (std::size_t pos = 0; pos < net.buses.size(); ++pos) {
        if (net.buses[pos].kind != BusKind::slack) algebraic_buses_.push_back(pos);
    }
    for (const auto& m : machines_) {
        if (!(m.inertia > 0.0) || !(m.transient_reactance > 0.0)) {
            throw Error(Module::dynamics, "invalid-machine", "machine inertia and reactance must be positive");
        }
    }
    if (wind_ && std::abs(wind_->inductance.determinant()) < 1e-12) {
        throw Error(Module::dynamics, "singular-inductance", "DFIG inductance matrix is singular");
    }
}

std::vector<Complex> DaeModel::bus_voltages(const Eigen::VectorXd& y) const
{
    if (static_cast<std::size_t>(y.size()) != algebraic_size()) {
        throw Error(Module::dynamics, "dimension-mismatch", "algebraic state has the wrong length");
    }
    std::vector<Complex> v(net_->buses.size(), Complex(1.0));
    for (std::size_t k = 0; k < algebraic_buses_.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(2 * k);
        v[algebraic_buses_[k]] = {y[i], y[i + 1]};
    }
    return v;
}

Complex DaeModel::machine_power(const Machine& m, double delta, Complex v)
{
    const double k = m.internal_voltage / m.transient_reactance;
    const double p = k * (v.real() * std::sin(delta) - v.imag() * std::cos(delta));
    const double q = k * (v.real() * std::cos(delta) + v.imag() * std::sin(delta)) - std::norm(v) / m.transient_reactance;
    return {p, q};
}

Eigen::VectorXd DaeModel::state_derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const
{
    if (static_cast<std::size_t>(x.size()) != state_size()) {
        throw Error(Module::dynamics, "dimension-mismatch", "differential state has the wrong length");
    }
    const auto v = bus_voltages(y);
    Eigen::VectorXd dx(x.size());
    for (std::size_t i = 0; i < machines_.size(); ++i) {
        const auto& m = machines_[i];
        const auto k = static_cast<Eigen::Index>(2 * i);
        const double pe = machine_power(m, x[k], v[m.bus_position]).real();
        dx[k] = x[k + 1];
        dx[k + 1] = (m.mechanical_power - pe) / m.inertia;
    }
    if (wind_) {
        const auto off = static_cast<Eigen::Index>(2 * machines_.size());
        const Complex vw = v[wind_->bus_position];
        const Eigen::Vector4d volts(vw.real(), vw.imag(), wind_->v_qr, wind_->v_dr);
        const Eigen::Vector4d i = x.segment<4>(off);
        dx.segment<4>(off) = wind_->base_speed * wind_->inductance.partialPivLu().solve(volts - wind_->resistive * i);
    }
    return dx;
}

Eigen::VectorXd DaeModel::algebraic_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const
{
    const auto v = bus_voltages(y);
    std::vector<Complex> injection(net_->buses.size(), Complex(0.0));
    for (std::size_t i = 0; i < machines_.size(); ++i) {
        const auto& m = machines_[i];
        injection[m.bus_position] += machine_power(m, x[static_cast<Eigen::Index>(2 * i)], v[m.bus_position]);
    }
    if (wind_) {
        const auto off = static_cast<Eigen::Index>(2 * machines_.size());
        const Complex vw = v[wind_->bus_position];
        const auto p =
            dfig_power(vw.real(), vw.imag(), wind_->v_qr, wind_->v_dr, x[off], x[off + 1], x[off + 2], x[off + 3]);
        injection[wind_->bus_position] += gamma_ * Complex(p.active, p.reactive);
    }
    Eigen::VectorXd g(static_cast<Eigen::Index>(algebraic_size()));
    for (std::size_t k = 0; k < algebraic_buses_.size(); ++k) {
        const std::size_t pos = algebraic_buses_[k];
        const auto& bus = net_->buses[pos];
        const Complex s = net::line_outflow(*net_, pos, v);
        const double vsq = std::norm(v[pos]);
        const auto i = static_cast<Eigen::Index>(2 * k);
        g[i] = injection[pos].real() - s.real() - bus.shunt_conductance * vsq;
        g[i + 1] = injection[pos].imag() - s.imag() - bus.shunt_susceptance * vsq;
    }
    return g;
}

OperatingPoint initialize(const net::Network& net, const steady::SteadyState& state, double gamma)
{
    if (!state.is_real(1e-6)) {
        throw Error(Module::dynamics, "non-real-equilibrium", "small-signal analysis needs a real equilibrium");
    }
    std::vector<Machine> machines;
    std::vector<double> angles;
    for (std::size_t pos = 0; pos < net.buses.size(); ++pos) {
        const auto& bus = net.buses[pos];
        if (bus.kind != BusKind::pv) continue;
        const auto* gen = net.generator_at(bus.id);
        const Complex v(state.voltages[pos].real(), state.voltages[pos].imag());
        const Complex s(gen->scheduled_active_power, state.reactive_injection[pos].real());
        const Complex current = std::conj(s / v);
        const Complex e = v + Complex(0.0, gen->transient_reactance) * current;
        machines.push_back({pos, gen->inertia, std::abs(e), gen->transient_reactance, gen->scheduled_active_power});
        angles.push_back(std::arg(e));
    }

    std::optional<WindUnit> wind;
    if (auto wpos = net.wind_index()) {
        if (!state.dfig) throw Error(Module::dynamics, "missing-dfig-state", "steady state carries no DFIG values");
        const auto& plant = *net.wind_plant;
        const auto& d = plant.dfig;
        const double ls = d.stator_inductance();
        const double lr = d.rotor_inductance();
        const double lm = d.magnetizing;
        const double wsl = d.slip_speed_pu(plant.operating_point.generator_speed);
        WindUnit w;
        w.bus_position = *wpos;
        w.v_qr = state.dfig->v_qr.real();
        w.v_dr = state.dfig->v_dr.real();
        w.inductance << ls, 0, lm, 0,
                        0, ls, 0, lm,
                        lm, 0, lr, 0,
                        0, lm, 0, lr;
        w.resistive << d.stator_resistance, ls, 0, lm,
                       -ls, d.stator_resistance, -lm, 0,
                       0, wsl * lm, d.rotor_resistance, wsl * lr,
                       -wsl * lm, 0, -wsl * lr, d.rotor_resistance;
        w.base_speed = d.electrical_base_speed();
        wind = w;
    }

    DaeModel model(net, std::move(machines), std::move(wind), gamma);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.state_size()));
    for (std::size_t i = 0; i < angles.size(); ++i) x[static_cast<Eigen::Index>(2 * i)] = angles[i];
    if (model.wind()) {
        const auto off = static_cast<Eigen::Index>(2 * angles.size());
        x[off] = state.dfig->i_qs.real();
        x[off + 1] = state.dfig->i_ds.real();
        x[off + 2] = state.dfig->i_qr.real();
        x[off + 3] = state.dfig->i_dr.real();
    }
    Eigen::VectorXd y(static_cast<Eigen::Index>(model.algebraic_size()));
    Eigen::Index k = 0;
    for (std::size_t pos = 0; pos < net.buses.size(); ++pos) {
        if (net.buses[pos].kind == BusKind::slack) continue;
        y[k++] = state.voltages[pos].real();
        y[k++] = state.voltages[pos].imag();
    }
    return {std::move(model), std::move(x), std::move(y)};
}

namespace {

template <class F>
Eigen::MatrixXd central_difference(F&& f, const Eigen::VectorXd& at, Eigen::Index rows)
{
    Eigen::MatrixXd jac(rows, at.size());
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(at[j]));
        Eigen::VectorXd up = at, down = at;
        up[j] += h;
        down[j] -= h;
        jac.col(j) = (f(up) - f(down)) / (up[j] - down[j]);
    }
    return jac;
}

}  // namespace

Linearization linearize(const OperatingPoint& op)
{
    const auto& m = op.model;
    const auto nx = static_cast<Eigen::Index>(m.state_size());
    const auto ny = static_cast<Eigen::Index>(m.algebraic_size());
    Linearization out;
    out.a = central_difference([&](const Eigen::VectorXd& x) { return m.state_derivative(x, op.y); }, op.x, nx);
    out.b = central_difference([&](const Eigen::VectorXd& y) { return m.state_derivative(op.x, y); }, op.y, nx);
    out.c = central_difference([&](const Eigen::VectorXd& x) { return m.algebraic_residual(x, op.y); }, op.x, ny);
    out.d = central_difference([&](const Eigen::VectorXd& y) { return m.algebraic_residual(op.x, y); }, op.y, ny);

    if (ny == 0) {
        out.reduced = out.a;
        return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.d);
    const auto& s = svd.singularValues();
    if (!(s[ny - 1] > 1e-12 * s[0])) {
        throw Error(Module::dynamics, "singular-algebraic", "algebraic Jacobian block is singular");
    }
    out.reduced = out.a - out.b * out.d.partialPivLu().solve(out.c);
    return out;
}

std::vector<Complex> eigenvalues(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols()) throw Error(Module::dynamics, "not-square", "eigenvalues need a square matrix");
    if (!m.allFinite()) throw Error(Module::dynamics, "non-finite-matrix", "matrix has non-finite entries");
    std::vector<Complex> out;
    if (m.size() == 0) return out;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success) {
        throw Error(Module::dynamics, "eigen-nonconvergence", "eigenvalue iteration did not converge");
    }
    const auto& ev = solver.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() > b.real();
        if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) > std::abs(b.imag());
        return a.imag() > b.imag();
    });
    return out;
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::marginal: return "marginal";
    case Verdict::unstable: return "unstable";
    }
    return "unknown";
}

double damping_ratio(Complex eigenvalue)
{
    const double mag = std::abs(eigenvalue);
    return mag > 0.0 ? -eigenvalue.real() / mag : 0.0;
}

Stability classify_stability(const std::vector<Complex>& eigs, double tol)
{
    if (eigs.empty()) throw Error(Module::dynamics, "empty-spectrum", "no eigenvalues to classify");
    Stability out{};
    out.max_real = eigs.front().real();
    for (auto e : eigs) out.max_real = std::max(out.max_real, e.real());
    if (out.max_real < -tol) {
        out.verdict = Verdict::stable;
    } else if (out.max_real > tol) {
        out.verdict = Verdict::unstable;
    } else {
        out.verdict = Verdict::marginal;
    }

    std::vector<Complex> upper;
    for (auto e : eigs) {
        if (e.imag() > 0.0) upper.push_back(e);
    }
    std::stable_sort(upper.begin(), upper.end(), [](Complex a, Complex b) { return a.real() > b.real(); });
    for (std::size_t i = 0; i < upper.size() && i < 2; ++i) out.dominant.push_back({upper[i], damping_ratio(upper[i])});
    return out;
}

void check_limits(const FeasibilityLimits& limits)
{
    if (!(limits.rotor_voltage_max > 0.0) || !(limits.q_wind_max_abs > 0.0) || !(limits.voltage_min > 0.0) ||
        !(limits.voltage_min < limits.voltage_max)) {
        throw Error(Module::dynamics, "invalid-limits", "limits must be positive and the voltage band ordered");
    }
}

Feasibility check_feasibility(const net::Network& net, const steady::SteadyState& state, bool is_real,
                              bool is_singular, const FeasibilityLimits& limits)
{
    Feasibility out;
    if (!is_real) out.reasons.push_back("complex");
    if (is_singular) out.reasons.push_back("singular");
    if (is_real) {
        if (state.dfig) {
            const double vr = std::hypot(state.dfig->v_qr.real(), state.dfig->v_dr.real());
            if (vr > limits.rotor_voltage_max) out.reasons.push_back("rotor-voltage");
        }
        if (net.wind_index() && std::abs(state.wind_reactive.real()) > limits.q_wind_max_abs) {
            out.reasons.push_back("q-wind");
        }
        for (auto v : state.voltages) {
            const double mag = std::hypot(v.real(), v.imag());
            if (mag < limits.voltage_min || mag > limits.voltage_max) {
                out.reasons.push_back("voltage-band");
                break;
            }
        }
    }
    out.feasible = out.reasons.empty();
    return out;
}

EquilibriumRecord analyze_equilibrium(const net::Network& net, const steady::EquilibriumProblem& problem,
                                      const Eigen::VectorXd& solution, bool is_singular, double gamma, double vwind,
                                      const FeasibilityLimits& limits, double stability_tol)
{
    EquilibriumRecord rec;
    rec.gamma = gamma;
    rec.vwind = vwind;
    rec.solution = solution;
    const auto params = steady::parameter_values(gamma, vwind);
    rec.state = steady::interpret(net, problem, solution.cast<Complex>(), params);
    rec.feasibility = check_feasibility(net, rec.state, true, is_singular, limits);
    if (!rec.feasibility.feasible) return rec;

    try {
        const auto op = initialize(net, rec.state, gamma);
        auto max_abs = [](const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };
        rec.derivative_residual = max_abs(op.model.state_derivative(op.x, op.y));
        rec.algebraic_residual = max_abs(op.model.algebraic_residual(op.x, op.y));
        const auto lin = linearize(op);
        rec.eigenvalues = eigenvalues(lin.reduced);
        rec.stability = classify_stability(rec.eigenvalues, stability_tol);
    } catch (const Error& e) {
        rec.unclassifiable = e.code();
    }
    return rec;
}

}  // namespace allflow::dyn
