#include "allflow/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <utility>

#include "allflow/error.hpp"

namespace allflow::net {

std::string_view to_string(BusKind kind)
{
    switch (kind) {
    case BusKind::slack: return "slack";
    case BusKind::pv: return "pv";
    case BusKind::wind: return "wind";
    case BusKind::load: return "load";
    }
    return "unknown";
}

std::optional<BusKind> parse_bus_kind(std::string_view text)
{
    if (text == "slack") return BusKind::slack;
    if (text == "pv") return BusKind::pv;
    if (text == "wind") return BusKind::wind;
    if (text == "load") return BusKind::load;
    return std::nullopt;
}

std::optional<std::size_t> Network::bus_index(int id) const
{
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return i;
    }
    return std::nullopt;
}

const Bus& Network::bus(int id) const
{
    auto idx = bus_index(id);
    if (!idx) throw Error(Module::netmodel, "no-such-bus", "bus " + std::to_string(id) + " does not exist");
    return buses[*idx];
}

const SyncGenerator* Network::generator_at(int bus_id) const
{
    for (const auto& g : generators) {
        if (g.bus == bus_id) return &g;
    }
    return nullptr;
}

namespace {

std::optional<std::size_t> first_of_kind(const Network& net, BusKind kind)
{
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        if (net.buses[i].kind == kind) return i;
    }
    return std::nullopt;
}

std::string bus_subject(int id) { return "bus " + std::to_string(id); }
std::string line_subject(const Line& l)
{
    return "line " + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus);
}

class DiagnosticList {
public:
    void error(std::string code, std::string subject, std::string message)
    {
        items_.push_back({Severity::error, std::move(code), std::move(subject), std::move(message)});
    }
    void warning(std::string code, std::string subject, std::string message)
    {
        items_.push_back({Severity::warning, std::move(code), std::move(subject), std::move(message)});
    }
    std::vector<Diagnostic> take() { return std::move(items_); }

private:
    std::vector<Diagnostic> items_;
};

void check_positive(DiagnosticList& out, double value, const char* what, const std::string& subject,
                    const char* code = "non-physical-parameter")
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        out.error(code, subject, std::string(what) + " must be positive and finite");
    }
}

void validate_buses(const Network& net, DiagnosticList& out)
{
    std::set<int> ids;
    int slack_count = 0;
    int wind_count = 0;
    for (const auto& b : net.buses) {
        const auto subject = bus_subject(b.id);
        if (!ids.insert(b.id).second) out.error("duplicate-bus", subject, "bus id appears more than once");
        switch (b.kind) {
        case BusKind::slack:
            ++slack_count;
            break;
        case BusKind::wind:
            ++wind_count;
            break;
        default:
            break;
        }
        if (b.kind == BusKind::load) {
            if (b.voltage_setpoint) out.error("unexpected-setpoint", subject, "load buses carry no voltage setpoint");
        } else if (!b.voltage_setpoint) {
            out.error("missing-setpoint", subject, "voltage setpoint required for slack, pv and wind buses");
        } else if (!(*b.voltage_setpoint > 0.0)) {
            out.error("non-positive-setpoint", subject, "voltage setpoint must be strictly positive");
        }
        if (b.kind == BusKind::slack) {
            // The steady-state formulation fixes the reference at 1∠0.
            if (b.voltage_setpoint && std::abs(*b.voltage_setpoint - 1.0) > 1e-12) {
                out.error("slack-reference", subject, "slack voltage setpoint must be 1.0 p.u.");
            }
            if (std::abs(b.angle_setpoint) > 1e-12) {
                out.error("slack-reference", subject, "slack angle setpoint must be 0");
            }
        } else if (b.angle_setpoint != 0.0) {
            out.error("unexpected-angle", subject, "only the slack bus carries an angle setpoint");
        }
        if (!std::isfinite(b.shunt_conductance) || !std::isfinite(b.shunt_susceptance)) {
            out.error("non-finite-shunt", subject, "shunt conductance/susceptance must be finite");
        }
    }
    if (slack_count == 0) out.error("missing-slack", "network", "exactly one slack bus is required");
    if (slack_count > 1) out.error("duplicate-slack", "network", "more than one bus is marked slack");
    if (wind_count > 1) out.error("duplicate-wind", "network", "more than one bus is marked wind");
}

void validate_lines(const Network& net, DiagnosticList& out)
{
    std::set<std::pair<int, int>> seen;
    for (const auto& l : net.lines) {
        const auto subject = line_subject(l);
        if (!net.bus_index(l.from_bus) || !net.bus_index(l.to_bus)) {
            out.error("dangling-reference", subject, "line endpoint refers to an unknown bus");
        }
        if (l.from_bus == l.to_bus) out.error("self-loop", subject, "line connects a bus to itself");
        if (!(std::abs(l.impedance) > 0.0)) out.error("zero-impedance", subject, "line impedance must be nonzero");
        if (!std::isfinite(l.impedance.real()) || !std::isfinite(l.impedance.imag())) {
            out.error("non-finite-impedance", subject, "line impedance must be finite");
        }
        auto key = std::minmax(l.from_bus, l.to_bus);
        if (!seen.insert(key).second) {
            out.error("parallel-line", subject, "parallel lines must be combined into one equivalent");
        }
    }
}

void validate_connectivity(const Network& net, DiagnosticList& out)
{
    if (net.buses.empty()) {
        out.error("empty-network", "network", "network has no buses");
        return;
    }
    std::vector<std::vector<std::size_t>> adj(net.buses.size());
    for (const auto& l : net.lines) {
        auto a = net.bus_index(l.from_bus);
        auto b = net.bus_index(l.to_bus);
        if (a && b) {
            adj[*a].push_back(*b);
            adj[*b].push_back(*a);
        }
    }
    std::vector<bool> seen(net.buses.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                stack.push_back(w);
            }
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            out.error("disconnected", bus_subject(net.buses[i].id), "bus is not connected to the rest of the network");
        }
    }
}

void validate_generators(const Network& net, DiagnosticList& out)
{
    std::map<int, int> per_bus;
    for (const auto& g : net.generators) {
        const auto subject = "generator at " + bus_subject(g.bus);
        auto idx = net.bus_index(g.bus);
        if (!idx) {
            out.error("dangling-reference", subject, "generator refers to an unknown bus");
            continue;
        }
        const auto kind = net.buses[*idx].kind;
        if (kind != BusKind::pv && kind != BusKind::slack) {
            out.error("generator-bus-kind", subject, "synchronous generators attach to pv or slack buses");
        }
        ++per_bus[g.bus];
        check_positive(out, g.inertia, "inertia", subject);
        check_positive(out, g.transient_reactance, "transient reactance", subject);
        check_positive(out, g.internal_voltage, "internal voltage", subject);
        if (!std::isfinite(g.mechanical_power) || !std::isfinite(g.scheduled_active_power)) {
            out.error("non-finite-power", subject, "power values must be finite");
        }
    }
    for (const auto& [bus, count] : per_bus) {
        if (count > 1) out.error("duplicate-generator", bus_subject(bus), "bus hosts more than one generator");
    }
    for (const auto& b : net.buses) {
        if (b.kind == BusKind::pv && per_bus.find(b.id) == per_bus.end()) {
            out.error("missing-generator", bus_subject(b.id), "pv bus has no synchronous generator");
        }
    }
}

void validate_wind(const Network& net, DiagnosticList& out)
{
    const auto wind_bus = first_of_kind(net, BusKind::wind);
    if (!net.wind_plant) {
        if (wind_bus) out.error("missing-wind-plant", bus_subject(net.buses[*wind_bus].id), "wind bus has no wind plant");
        return;
    }
    const auto& w = *net.wind_plant;
    const std::string subject = "wind_plant";
    auto idx = net.bus_index(w.bus);
    if (!idx) {
        out.error("dangling-reference", subject, "wind plant refers to an unknown bus");
    } else if (net.buses[*idx].kind != BusKind::wind) {
        out.error("wind-bus-kind", subject, "wind plant must sit on the bus marked wind");
    }

    const auto& d = w.dfig;
    check_positive(out, d.stator_resistance, "stator resistance", subject);
    check_positive(out, d.rotor_resistance, "rotor resistance", subject);
    check_positive(out, d.stator_leakage, "stator leakage inductance", subject, "non-physical-inductance");
    check_positive(out, d.rotor_leakage, "rotor leakage inductance", subject, "non-physical-inductance");
    check_positive(out, d.magnetizing, "magnetizing inductance", subject, "non-physical-inductance");
    check_positive(out, d.sync_speed, "synchronous speed", subject);
    if (d.poles <= 0 || d.poles % 2 != 0) out.error("odd-pole-count", subject, "pole count must be positive and even");

    const auto& t = w.turbine;
    check_positive(out, t.swept_area, "swept area", subject);
    check_positive(out, t.air_density, "air density", subject);
    check_positive(out, t.blade_length, "blade length", subject);
    check_positive(out, t.gear_ratio, "gear ratio", subject);
    if (t.swept_area > 0.0 && t.blade_length > 0.0) {
        const double disk = std::numbers::pi * t.blade_length * t.blade_length;
        if (std::abs(t.swept_area - disk) / t.swept_area > 0.01) {
            out.warning("swept-area-mismatch", subject, "swept area differs from pi R^2 by more than 1%");
        }
    }

    const auto& op = w.operating_point;
    check_positive(out, op.wind_speed, "wind speed", subject);
    check_positive(out, op.generator_speed, "generator speed", subject);
    if (!std::isfinite(op.scheduled_active_power)) {
        out.error("non-finite-power", subject, "scheduled active power must be finite");
    }
    check_positive(out, w.unit_scale, "unit scale", subject);
}

}  // namespace

std::optional<std::size_t> Network::slack_index() const { return first_of_kind(*this, BusKind::slack); }
std::optional<std::size_t> Network::wind_index() const { return first_of_kind(*this, BusKind::wind); }

std::vector<Diagnostic> validate(const Network& net)
{
    DiagnosticList out;
    validate_buses(net, out);
    validate_lines(net, out);
    validate_connectivity(net, out);
    validate_generators(net, out);
    validate_wind(net, out);
    if (!std::isfinite(net.base_mva) || !(net.base_mva > 0.0)) {
        out.error("non-physical-parameter", "network", "base_mva must be positive");
    }
    return out.take();
}

bool has_errors(const std::vector<Diagnostic>& diagnostics)
{
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

Complex line_admittance(const Network& net, int j, int k)
{
    for (const auto& l : net.lines) {
        if ((l.from_bus == j && l.to_bus == k) || (l.from_bus == k && l.to_bus == j)) {
            if (std::abs(l.impedance) == 0.0) {
                throw Error(Module::netmodel, "zero-impedance", line_subject(l) + " has zero impedance");
            }
            return 1.0 / l.impedance;
        }
    }
    throw Error(Module::netmodel, "no-such-line",
                "no line between bus " + std::to_string(j) + " and bus " + std::to_string(k));
}

std::vector<Neighbor> neighbors(const Network& net, int bus_id)
{
    std::vector<Neighbor> out;
    for (const auto& l : net.lines) {
        int other;
        if (l.from_bus == bus_id) {
            other = l.to_bus;
        } else if (l.to_bus == bus_id) {
            other = l.from_bus;
        } else {
            continue;
        }
        auto idx = net.bus_index(other);
        if (!idx) continue;
        out.push_back({*idx, 1.0 / l.impedance});
    }
    return out;
}

Complex line_outflow(const Network& net, std::size_t j, const std::vector<Complex>& voltages)
{
    Complex current{};
    const Complex vj = voltages[j];
    for (const auto& nb : neighbors(net, net.buses[j].id)) {
        current += nb.admittance * (vj - voltages[nb.index]);
    }
    return vj * std::conj(current);
}

}  // namespace allflow::net
