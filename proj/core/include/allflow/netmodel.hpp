#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace allflow::net {

using Complex = std::complex<double>;

enum class BusKind { slack, pv, wind, load };

std::string_view to_string(BusKind kind);
std::optional<BusKind> parse_bus_kind(std::string_view text);

struct Bus {
    int id = 0;
    BusKind kind = BusKind::load;
    /// Load conductance/susceptance including line charging, consumption
    /// convention: a positive value absorbs active/reactive power.
    double shunt_conductance = 0.0;
    double shunt_susceptance = 0.0;
    std::optional<double> voltage_setpoint;  // required for slack, pv, wind
    double angle_setpoint = 0.0;             // slack only
};

struct Line {
    int from_bus = 0;
    int to_bus = 0;
    Complex impedance;
};

struct SyncGenerator {
    int bus = 0;
    double inertia = 0.0;               // m_i, p.u. s^2
    double internal_voltage = 0.0;      // E_i, nominal value from the case
    double transient_reactance = 0.0;   // x'_di
    double mechanical_power = 0.0;      // P_mi
    double scheduled_active_power = 0.0;
};

struct Turbine {
    double swept_area = 0.0;   // m^2
    double air_density = 0.0;  // kg/m^3
    double blade_length = 0.0; // m
    double gear_ratio = 1.0;
    double pitch = 0.0;        // rad
};

/// Doubly-fed induction generator in per-unit. `sync_speed` is the
/// synchronous speed of the machine in mechanical rad/s; the electrical
/// base used to per-unitize the reactances is (poles / 2) * sync_speed.
struct DfigParams {
    double stator_resistance = 0.0;
    double rotor_resistance = 0.0;
    double stator_leakage = 0.0;
    double rotor_leakage = 0.0;
    double magnetizing = 0.0;
    int poles = 4;
    double sync_speed = 0.0;

    double stator_inductance() const { return stator_leakage + magnetizing; }
    double rotor_inductance() const { return rotor_leakage + magnetizing; }
    double electrical_base_speed() const { return 0.5 * poles * sync_speed; }
    /// omega_ge = (p / 2) * omega_g.
    double rotor_electrical_speed(double generator_speed) const { return 0.5 * poles * generator_speed; }
    /// (omega_e - omega_ge) / omega_base, the per-unit slip speed.
    double slip_speed_pu(double generator_speed) const
    {
        return 1.0 - rotor_electrical_speed(generator_speed) / electrical_base_speed();
    }
};

struct WindOperatingPoint {
    double wind_speed = 0.0;              // v_r^e, m/s
    double generator_speed = 0.0;         // omega_g^e, rad/s
    double scheduled_active_power = 0.0;  // P_w^e at gamma = 1, p.u.
};

struct WindPlant {
    int bus = 0;
    Turbine turbine;
    DfigParams dfig;
    WindOperatingPoint operating_point;
    double unit_scale = 1000.0;  // turbines per unit of gamma
};

struct Network {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<SyncGenerator> generators;
    std::optional<WindPlant> wind_plant;
    double base_mva = 100.0;

    /// Position of the bus with the given id in `buses`, if any.
    std::optional<std::size_t> bus_index(int id) const;
    const Bus& bus(int id) const;
    const SyncGenerator* generator_at(int bus_id) const;
    std::optional<std::size_t> slack_index() const;
    std::optional<std::size_t> wind_index() const;
};

enum class Severity { warning, error };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;     // stable identifier, e.g. "zero-impedance"
    std::string subject;  // "bus 3", "line 1-2", "wind_plant"
    std::string message;
};

/// Check every structural and physical invariant of the network. Returns an
/// empty list for a valid network.
std::vector<Diagnostic> validate(const Network& net);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

/// 1 / Z_jk for the line joining j and k (either orientation).
Complex line_admittance(const Network& net, int j, int k);

/// Another bus and the admittance of the line that joins it to `bus_id`.
struct Neighbor {
    std::size_t index;  // position in Network::buses
    Complex admittance;
};
std::vector<Neighbor> neighbors(const Network& net, int bus_id);

/// Complex power leaving bus `j` through its lines, S = V_j conj(sum_k y_jk (V_j - V_k)).
/// `voltages` is indexed by bus position.
Complex line_outflow(const Network& net, std::size_t j, const std::vector<Complex>& voltages);

/// Parse and validate a case document. Throws allflow::Error on schema
/// violations and on any error-severity diagnostic.
Network load_case(std::string_view case_text);
Network load_case_file(const std::string& path);

/// Canonical case document; load_case(serialize(net)) reproduces `net`.
std::string serialize(const Network& net);

}  // namespace allflow::net
