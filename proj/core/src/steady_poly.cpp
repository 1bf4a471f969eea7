#include "allflow/steady_poly.hpp"

#include <algorithm>
#include <cmath>

#include "allflow/error.hpp"

namespace allflow::steady {

using net::BusKind;
using net::Network;
using poly::Polynomial;

namespace {

std::string quantity_prefix(Quantity q)
{
    switch (q) {
    case Quantity::v_re: return "V_Re";
    case Quantity::v_im: return "V_Im";
    case Quantity::q_gen: return "Q_s";
    case Quantity::q_wind: return "Q_w";
    case Quantity::i_qs: return "i_qs";
    case Quantity::i_ds: return "i_ds";
    case Quantity::i_qr: return "i_qr";
    case Quantity::i_dr: return "i_dr";
    case Quantity::v_qr: return "v_qr";
    case Quantity::v_dr: return "v_dr";
    case Quantity::torque: return "T_g";
    }
    return "x";
}

/// Real and imaginary parts of a complex quantity whose components are
/// real-coefficient polynomials in real unknowns.
struct Rect {
    Polynomial re;
    Polynomial im;

    Rect conj() const { return {re, -im}; }
    Rect operator+(const Rect& o) const { return {re + o.re, im + o.im}; }
    Rect operator-(const Rect& o) const { return {re - o.re, im - o.im}; }
    Rect operator*(const Rect& o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
    Rect scaled(Complex c) const
    {
        // c is a numeric constant with real and imaginary parts.
        return {re * c.real() - im * c.imag(), re * c.imag() + im * c.real()};
    }
};

/// Rotor currents from the stator voltage equations and rotor voltages from
/// the rotor ones; all four are linear in (v_qs, v_ds, i_qs, i_ds).
template <class T>
struct RotorTerms {
    T i_qr, i_dr, v_qr, v_dr;
};

template <class T>
RotorTerms<T> rotor_terms(const T& vqs, const T& vds, const T& iqs, const T& ids, const net::WindPlant& plant)
{
    const auto& d = plant.dfig;
    const double ls = d.stator_inductance();
    const double lr = d.rotor_inductance();
    const double lm = d.magnetizing;
    const double wsl = d.slip_speed_pu(plant.operating_point.generator_speed);
    // Stator frame at synchronous speed: omega_e = 1 p.u.
    const T idr = (vqs - iqs * d.stator_resistance - ids * ls) * (1.0 / lm);
    const T iqr = (-vds - iqs * ls + ids * d.stator_resistance) * (1.0 / lm);
    const T vqr = ids * (wsl * lm) + iqr * d.rotor_resistance + idr * (wsl * lr);
    const T vdr = iqs * (-wsl * lm) + idr * d.rotor_resistance + iqr * (-wsl * lr);
    return {iqr, idr, vqr, vdr};
}

class Builder {
public:
    Builder(const Network& net, Formulation formulation) : net_(net), formulation_(formulation)
    {
        const auto diags = net::validate(net);
        if (net::has_errors(diags)) {
            throw Error(Module::steady_poly, "invalid-network", "network must pass validation before building");
        }
        register_variables();
    }

    EquilibriumProblem build()
    {
        std::vector<Polynomial> equations;
        for (std::size_t pos = 0; pos < net_.buses.size(); ++pos) {
            const auto& bus = net_.buses[pos];
            switch (bus.kind) {
            case BusKind::slack:
                break;
            case BusKind::pv:
                add_pv(pos, equations);
                break;
            case BusKind::wind:
                add_wind(pos, equations);
                break;
            case BusKind::load:
                add_load(pos, equations);
                break;
            }
        }
        std::vector<std::string> params{"gamma", "vwind_sq"};
        EquilibriumProblem out{poly::PolynomialSystem(map_.names(), std::move(params), std::move(equations)),
                               map_, formulation_};
        if (!out.system.is_square()) {
            throw Error(Module::steady_poly, "not-square", "equilibrium system is not square");
        }
        return out;
    }

private:
    void register_variables()
    {
        voltage_index_.assign(net_.buses.size(), {0, 0});
        for (std::size_t pos = 0; pos < net_.buses.size(); ++pos) {
            const auto& bus = net_.buses[pos];
            if (bus.kind == BusKind::slack) continue;
            voltage_index_[pos] = {map_.add(Quantity::v_re, bus.id), map_.add(Quantity::v_im, bus.id)};
            const bool full = formulation_ == Formulation::full;
            if (bus.kind == BusKind::pv && full) map_.add(Quantity::q_gen, bus.id);
            if (bus.kind == BusKind::wind) {
                if (full) map_.add(Quantity::q_wind, bus.id);
                map_.add(Quantity::i_qs, bus.id);
                map_.add(Quantity::i_ds, bus.id);
                if (full) {
                    for (auto q : {Quantity::i_qr, Quantity::i_dr, Quantity::v_qr, Quantity::v_dr, Quantity::torque}) {
                        map_.add(q, bus.id);
                    }
                }
            }
        }
        n_ = map_.size() + 2;
    }

    Polynomial var(Quantity q, int bus) const { return Polynomial::indeterminate(n_, *map_.find(q, bus)); }
    Polynomial gamma() const { return Polynomial::indeterminate(n_, map_.size() + gamma_slot); }
    Polynomial vwind_sq() const { return Polynomial::indeterminate(n_, map_.size() + vwind_sq_slot); }
    Polynomial constant(double c) const { return Polynomial::constant(n_, c); }

    Rect voltage(std::size_t pos) const
    {
        if (net_.buses[pos].kind == BusKind::slack) return {constant(1.0), Polynomial(n_)};
        const auto [re, im] = voltage_index_[pos];
        return {Polynomial::indeterminate(n_, re), Polynomial::indeterminate(n_, im)};
    }

    /// S_j = V_j conj(sum_k y_jk (V_j - V_k)), denominators already cleared
    /// into the admittances.
    Rect outflow(std::size_t pos) const
    {
        const auto vj = voltage(pos);
        Rect current{Polynomial(n_), Polynomial(n_)};
        for (const auto& nb : net::neighbors(net_, net_.buses[pos].id)) {
            if (!std::isfinite(nb.admittance.real()) || !std::isfinite(nb.admittance.imag())) {
                throw Error(Module::steady_poly, "zero-impedance", "degenerate impedance while clearing denominators");
            }
            current = current + (vj - voltage(nb.index)).scaled(nb.admittance);
        }
        return vj * current.conj();
    }

    Polynomial magnitude_sq(std::size_t pos) const
    {
        const auto v = voltage(pos);
        return v.re * v.re + v.im * v.im;
    }

    void add_balances(std::size_t pos, const Polynomial& p_inj, const Polynomial& q_inj,
                      std::vector<Polynomial>& eqs) const
    {
        const auto& bus = net_.buses[pos];
        const auto s = outflow(pos);
        const auto vsq = magnitude_sq(pos);
        eqs.push_back(p_inj - s.re - vsq * bus.shunt_conductance);
        eqs.push_back(q_inj - s.im - vsq * bus.shunt_susceptance);
    }

    void add_pv(std::size_t pos, std::vector<Polynomial>& eqs) const
    {
        const auto& bus = net_.buses[pos];
        const auto* gen = net_.generator_at(bus.id);
        const auto p = constant(gen->scheduled_active_power);
        const auto s = outflow(pos);
        const auto vsq = magnitude_sq(pos);
        eqs.push_back(p - s.re - vsq * bus.shunt_conductance);
        if (formulation_ == Formulation::full) {
            eqs.push_back(var(Quantity::q_gen, bus.id) - s.im - vsq * bus.shunt_susceptance);
        }
        const double vset = *bus.voltage_setpoint;
        eqs.push_back(vsq - constant(vset * vset));
    }

    void add_load(std::size_t pos, std::vector<Polynomial>& eqs) const
    {
        add_balances(pos, Polynomial(n_), Polynomial(n_), eqs);
    }

    void add_wind(std::size_t pos, std::vector<Polynomial>& eqs) const
    {
        const auto& bus = net_.buses[pos];
        const auto& plant = *net_.wind_plant;
        const auto& d = plant.dfig;
        const int id = bus.id;

        const double ls = d.stator_inductance();
        const double lr = d.rotor_inductance();
        const double lm = d.magnetizing;
        const double wsl = d.slip_speed_pu(plant.operating_point.generator_speed);
        const bool full = formulation_ == Formulation::full;

        const auto v = voltage(pos);
        const auto& vqs = v.re;
        const auto& vds = v.im;
        const auto iqs = var(Quantity::i_qs, id);
        const auto ids = var(Quantity::i_ds, id);
        const auto rotor = rotor_terms(vqs, vds, iqs, ids, plant);
        const auto iqr = full ? var(Quantity::i_qr, id) : rotor.i_qr;
        const auto idr = full ? var(Quantity::i_dr, id) : rotor.i_dr;
        const auto vqr = full ? var(Quantity::v_qr, id) : rotor.v_qr;
        const auto vdr = full ? var(Quantity::v_dr, id) : rotor.v_dr;

        const auto scheduled = gamma() * plant.operating_point.scheduled_active_power;
        const auto dfig_p = vqs * iqs + vds * ids + vdr * idr + vqr * iqr;
        const auto dfig_q = vds * iqs - vqs * ids + vdr * iqr - vqr * idr;

        const auto s = outflow(pos);
        const auto vsq = magnitude_sq(pos);
        eqs.push_back(scheduled - s.re - vsq * bus.shunt_conductance);
        if (formulation_ == Formulation::full) {
            eqs.push_back(var(Quantity::q_wind, id) - s.im - vsq * bus.shunt_susceptance);
        } else {
            eqs.push_back(gamma() * dfig_q - s.im - vsq * bus.shunt_susceptance);
        }
        eqs.push_back(vsq - vwind_sq());

        if (formulation_ == Formulation::full) {
            eqs.push_back(var(Quantity::torque, id) + (iqs * idr - ids * iqr) * (0.75 * d.poles * lm));
        }
        if (full) {
            eqs.push_back(vqs - (iqs * d.stator_resistance + ids * ls + idr * lm));
            eqs.push_back(vds - (iqs * (-ls) + ids * d.stator_resistance + iqr * (-lm)));
            eqs.push_back(vqr - (ids * (wsl * lm) + iqr * d.rotor_resistance + idr * (wsl * lr)));
            eqs.push_back(vdr - (iqs * (-wsl * lm) + idr * d.rotor_resistance + iqr * (-wsl * lr)));
        }
        eqs.push_back(scheduled - gamma() * dfig_p);
        if (formulation_ == Formulation::full) eqs.push_back(var(Quantity::q_wind, id) - gamma() * dfig_q);
    }

    const Network& net_;
    Formulation formulation_;
    VariableMap map_;
    std::vector<std::pair<std::size_t, std::size_t>> voltage_index_;
    std::size_t n_ = 0;
};

}  // namespace

std::size_t VariableMap::add(Quantity quantity, int bus)
{
    entries_.push_back({quantity_prefix(quantity) + "_" + std::to_string(bus), quantity, bus});
    return entries_.size() - 1;
}

std::optional<std::size_t> VariableMap::find(Quantity quantity, int bus) const
{
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].quantity == quantity && entries_[i].bus == bus) return i;
    }
    return std::nullopt;
}

std::vector<std::string> VariableMap::names() const
{
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

EquilibriumProblem build_equilibrium_family(const Network& net, Formulation formulation)
{
    return Builder(net, formulation).build();
}

std::vector<Complex> parameter_values(double gamma, double vwind_mag)
{
    return {Complex(gamma), Complex(vwind_mag * vwind_mag)};
}

EquilibriumProblem build_equilibrium_system(const Network& net, double gamma, double vwind_mag,
                                            Formulation formulation)
{
    if (!(gamma > 0.0)) throw Error(Module::steady_poly, "invalid-parameter", "gamma must be positive");
    if (!(vwind_mag > 0.0)) throw Error(Module::steady_poly, "invalid-parameter", "wind bus voltage must be positive");
    auto problem = build_equilibrium_family(net, formulation);
    problem.system = problem.system.bind(parameter_values(gamma, vwind_mag));
    return problem;
}

SteadyState interpret(const Network& net, const EquilibriumProblem& problem, const Eigen::VectorXcd& x,
                      std::span<const Complex> params)
{
    const auto& map = problem.variables;
    if (static_cast<std::size_t>(x.size()) != map.size()) {
        throw Error(Module::steady_poly, "dimension-mismatch", "solution length differs from the variable map");
    }
    if (params.size() != 2) throw Error(Module::steady_poly, "unbound-parameter", "two parameter values expected");
    const Complex gamma = params[gamma_slot];

    SteadyState st;
    for (Eigen::Index i = 0; i < x.size(); ++i) st.max_imag = std::max(st.max_imag, std::abs(x[i].imag()));
    for (auto p : params) st.max_imag = std::max(st.max_imag, std::abs(p.imag()));
    st.voltages.assign(net.buses.size(), Complex(1.0));
    st.reactive_injection.assign(net.buses.size(), Complex(0.0));
    for (std::size_t pos = 0; pos < net.buses.size(); ++pos) {
        const auto& bus = net.buses[pos];
        if (bus.kind == BusKind::slack) continue;
        // Real-valued unknowns complexified: V = V_Re + i V_Im with V_Re, V_Im possibly complex.
        st.voltages[pos] = x[*map.find(Quantity::v_re, bus.id)] + Complex(0.0, 1.0) * x[*map.find(Quantity::v_im, bus.id)];
    }

    // Reactive injections recovered from the network side; with complex
    // unknowns the "real part" of S must be taken polynomially, not with conj.
    auto reactive_from_network = [&](std::size_t pos) {
        const auto& bus = net.buses[pos];
        const auto vr = x[*map.find(Quantity::v_re, bus.id)];
        const auto vi = x[*map.find(Quantity::v_im, bus.id)];
        Complex ir(0.0), ii(0.0);
        for (const auto& nb : net::neighbors(net, bus.id)) {
            Complex kr(1.0), ki(0.0);
            const auto& other = net.buses[nb.index];
            if (other.kind != BusKind::slack) {
                kr = x[*map.find(Quantity::v_re, other.id)];
                ki = x[*map.find(Quantity::v_im, other.id)];
            }
            const Complex dr = vr - kr, di = vi - ki;
            ir += nb.admittance.real() * dr - nb.admittance.imag() * di;
            ii += nb.admittance.real() * di + nb.admittance.imag() * dr;
        }
        // S = V conj(I) expanded with real-coefficient arithmetic.
        const Complex s_im = vi * ir - vr * ii;
        return s_im + (vr * vr + vi * vi) * bus.shunt_susceptance;
    };

    for (std::size_t pos = 0; pos < net.buses.size(); ++pos) {
        const auto& bus = net.buses[pos];
        if (bus.kind == BusKind::pv) {
            auto idx = map.find(Quantity::q_gen, bus.id);
            st.reactive_injection[pos] = idx ? x[*idx] : reactive_from_network(pos);
        } else if (bus.kind == BusKind::wind) {
            const auto& plant = *net.wind_plant;
            DfigState d;
            d.i_qs = x[*map.find(Quantity::i_qs, bus.id)];
            d.i_ds = x[*map.find(Quantity::i_ds, bus.id)];
            const auto vqs = x[*map.find(Quantity::v_re, bus.id)];
            const auto vds = x[*map.find(Quantity::v_im, bus.id)];
            if (map.find(Quantity::i_qr, bus.id)) {
                d.i_qr = x[*map.find(Quantity::i_qr, bus.id)];
                d.i_dr = x[*map.find(Quantity::i_dr, bus.id)];
                d.v_qr = x[*map.find(Quantity::v_qr, bus.id)];
                d.v_dr = x[*map.find(Quantity::v_dr, bus.id)];
            } else {
                const auto r = rotor_terms(vqs, vds, d.i_qs, d.i_ds, plant);
                d.i_qr = r.i_qr;
                d.i_dr = r.i_dr;
                d.v_qr = r.v_qr;
                d.v_dr = r.v_dr;
            }
            if (auto t = map.find(Quantity::torque, bus.id)) {
                d.torque = x[*t];
            } else {
                d.torque = -0.75 * plant.dfig.poles * plant.dfig.magnetizing * (d.i_qs * d.i_dr - d.i_ds * d.i_qr);
            }
            st.wind_active = gamma * (vqs * d.i_qs + vds * d.i_ds + d.v_dr * d.i_dr + d.v_qr * d.i_qr);
            if (auto q = map.find(Quantity::q_wind, bus.id)) {
                st.wind_reactive = x[*q];
            } else {
                st.wind_reactive = reactive_from_network(pos);
            }
            st.reactive_injection[pos] = st.wind_reactive;
            st.dfig = d;
        }
    }
    return st;
}

Eigen::VectorXcd to_variables(const Network& net, const SteadyState& state, const VariableMap& map)
{
    Eigen::VectorXcd x(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        const auto& e = map[i];
        auto pos = *net.bus_index(e.bus);
        const auto v = state.voltages[pos];
        switch (e.quantity) {
        case Quantity::v_re: x[i] = v.real(); break;
        case Quantity::v_im: x[i] = v.imag(); break;
        case Quantity::q_gen:
        case Quantity::q_wind: x[i] = state.reactive_injection[pos]; break;
        case Quantity::i_qs: x[i] = state.dfig->i_qs; break;
        case Quantity::i_ds: x[i] = state.dfig->i_ds; break;
        case Quantity::i_qr: x[i] = state.dfig->i_qr; break;
        case Quantity::i_dr: x[i] = state.dfig->i_dr; break;
        case Quantity::v_qr: x[i] = state.dfig->v_qr; break;
        case Quantity::v_dr: x[i] = state.dfig->v_dr; break;
        case Quantity::torque: x[i] = state.dfig->torque; break;
        }
    }
    return x;
}

SlackInjection slack_injection(const Network& net, const SteadyState& state, double real_tol)
{
    auto slack = net.slack_index();
    if (!slack) throw Error(Module::steady_poly, "missing-slack", "network has no slack bus");
    if (!state.is_real(real_tol)) {
        throw Error(Module::steady_poly, "non-real-solution", "slack injection needs a real solution");
    }
    const auto& bus = net.buses[*slack];
    const Complex s = net::line_outflow(net, *slack, state.voltages);
    const double vsq = std::norm(state.voltages[*slack]);
    return {s.real() + vsq * bus.shunt_conductance, s.imag() + vsq * bus.shunt_susceptance};
}

}  // namespace allflow::steady
