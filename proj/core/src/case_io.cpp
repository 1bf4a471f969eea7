#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include "allflow/error.hpp"
#include "allflow/netmodel.hpp"
#include "json.hpp"

namespace allflow::net {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& where, const std::string& what)
{
    throw Error(Module::netmodel, "schema-violation", where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) schema_error(where, "expected an object");
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!keys.count(item.key())) schema_error(where, "unknown key '" + item.key() + "'");
    }
}

double number(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
    if (!it->is_number()) schema_error(where, std::string("field '") + key + "' must be a number");
    return it->get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where)
{
    if (!obj.contains(key)) return fallback;
    return number(obj, key, where);
}

int integer(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
    if (!it->is_number_integer()) schema_error(where, std::string("field '") + key + "' must be an integer");
    return it->get<int>();
}

const json& member(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
    return *it;
}

const json& array_member(const json& obj, const char* key, const std::string& where)
{
    const auto& v = member(obj, key, where);
    if (!v.is_array()) schema_error(where, std::string("field '") + key + "' must be an array");
    return v;
}

Bus parse_bus(const json& j, std::size_t n)
{
    const std::string where = "buses[" + std::to_string(n) + "]";
    reject_unknown_keys(j, where,
                        {"id", "kind", "shunt_conductance", "shunt_susceptance", "voltage_setpoint", "angle_setpoint"});
    Bus b;
    b.id = integer(j, "id", where);
    const auto& kind = member(j, "kind", where);
    if (!kind.is_string()) schema_error(where, "field 'kind' must be a string");
    auto parsed = parse_bus_kind(kind.get<std::string>());
    if (!parsed) schema_error(where, "unknown bus kind '" + kind.get<std::string>() + "'");
    b.kind = *parsed;
    b.shunt_conductance = number_or(j, "shunt_conductance", 0.0, where);
    b.shunt_susceptance = number_or(j, "shunt_susceptance", 0.0, where);
    if (j.contains("voltage_setpoint")) b.voltage_setpoint = number(j, "voltage_setpoint", where);
    b.angle_setpoint = number_or(j, "angle_setpoint", 0.0, where);
    return b;
}

Line parse_line(const json& j, std::size_t n)
{
    const std::string where = "lines[" + std::to_string(n) + "]";
    reject_unknown_keys(j, where, {"from", "to", "impedance"});
    Line l;
    l.from_bus = integer(j, "from", where);
    l.to_bus = integer(j, "to", where);
    const auto& z = member(j, "impedance", where);
    if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
        schema_error(where, "impedance must be a [re, im] pair");
    }
    l.impedance = {z[0].get<double>(), z[1].get<double>()};
    return l;
}

SyncGenerator parse_generator(const json& j, std::size_t n)
{
    const std::string where = "generators[" + std::to_string(n) + "]";
    reject_unknown_keys(j, where,
                        {"bus", "inertia", "internal_voltage", "transient_reactance", "mechanical_power",
                         "scheduled_active_power"});
    SyncGenerator g;
    g.bus = integer(j, "bus", where);
    g.inertia = number(j, "inertia", where);
    g.internal_voltage = number(j, "internal_voltage", where);
    g.transient_reactance = number(j, "transient_reactance", where);
    g.mechanical_power = number(j, "mechanical_power", where);
    g.scheduled_active_power = number(j, "scheduled_active_power", where);
    return g;
}

WindPlant parse_wind(const json& j)
{
    const std::string where = "wind_plant";
    reject_unknown_keys(j, where, {"bus", "unit_scale", "turbine", "dfig", "operating_point"});
    WindPlant w;
    w.bus = integer(j, "bus", where);
    w.unit_scale = number_or(j, "unit_scale", 1000.0, where);

    const auto& t = member(j, "turbine", where);
    const std::string tw = where + ".turbine";
    reject_unknown_keys(t, tw, {"swept_area", "air_density", "blade_length", "gear_ratio", "pitch"});
    w.turbine.swept_area = number(t, "swept_area", tw);
    w.turbine.air_density = number(t, "air_density", tw);
    w.turbine.blade_length = number(t, "blade_length", tw);
    w.turbine.gear_ratio = number(t, "gear_ratio", tw);
    w.turbine.pitch = number_or(t, "pitch", 0.0, tw);

    const auto& d = member(j, "dfig", where);
    const std::string dw = where + ".dfig";
    reject_unknown_keys(d, dw,
                        {"stator_resistance", "rotor_resistance", "stator_leakage", "rotor_leakage", "magnetizing",
                         "poles", "sync_speed"});
    w.dfig.stator_resistance = number(d, "stator_resistance", dw);
    w.dfig.rotor_resistance = number(d, "rotor_resistance", dw);
    w.dfig.stator_leakage = number(d, "stator_leakage", dw);
    w.dfig.rotor_leakage = number(d, "rotor_leakage", dw);
    w.dfig.magnetizing = number(d, "magnetizing", dw);
    w.dfig.poles = integer(d, "poles", dw);
    w.dfig.sync_speed = number(d, "sync_speed", dw);

    const auto& op = member(j, "operating_point", where);
    const std::string ow = where + ".operating_point";
    reject_unknown_keys(op, ow, {"wind_speed", "generator_speed", "scheduled_active_power"});
    w.operating_point.wind_speed = number(op, "wind_speed", ow);
    w.operating_point.generator_speed = number(op, "generator_speed", ow);
    w.operating_point.scheduled_active_power = number(op, "scheduled_active_power", ow);
    return w;
}

std::string format_diagnostics(const std::vector<Diagnostic>& diags)
{
    std::string out;
    for (const auto& d : diags) {
        if (d.severity != Severity::error) continue;
        if (!out.empty()) out += "; ";
        out += d.code + " (" + d.subject + "): " + d.message;
    }
    return out;
}

}  // namespace

Network load_case(std::string_view case_text)
{
    json doc;
    try {
        doc = json::parse(case_text.begin(), case_text.end());
    } catch (const json::parse_error& e) {
        throw Error(Module::netmodel, "schema-violation", std::string("case is not valid JSON: ") + e.what());
    }
    reject_unknown_keys(doc, "case", {"name", "notes", "base_mva", "buses", "lines", "generators", "wind_plant"});

    Network net;
    net.base_mva = number(doc, "base_mva", "case");
    const auto& buses = array_member(doc, "buses", "case");
    for (std::size_t i = 0; i < buses.size(); ++i) net.buses.push_back(parse_bus(buses[i], i));
    const auto& lines = array_member(doc, "lines", "case");
    for (std::size_t i = 0; i < lines.size(); ++i) net.lines.push_back(parse_line(lines[i], i));
    const auto& gens = array_member(doc, "generators", "case");
    for (std::size_t i = 0; i < gens.size(); ++i) net.generators.push_back(parse_generator(gens[i], i));
    if (auto it = doc.find("wind_plant"); it != doc.end() && !it->is_null()) net.wind_plant = parse_wind(*it);

    const auto diags = validate(net);
    if (has_errors(diags)) {
        // Surface the most specific code so callers can match on it.
        const Diagnostic* first = nullptr;
        for (const auto& d : diags) {
            if (d.severity == Severity::error) {
                first = &d;
                break;
            }
        }
        throw Error(Module::netmodel, first->code, format_diagnostics(diags));
    }
    return net;
}

Network load_case_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(Module::netmodel, "file-not-found", "cannot open case file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_case(buffer.str());
}

std::string serialize(const Network& net)
{
    json doc;
    doc["base_mva"] = net.base_mva;
    doc["buses"] = json::array();
    for (const auto& b : net.buses) {
        json jb;
        jb["id"] = b.id;
        jb["kind"] = std::string(to_string(b.kind));
        jb["shunt_conductance"] = b.shunt_conductance;
        jb["shunt_susceptance"] = b.shunt_susceptance;
        if (b.voltage_setpoint) jb["voltage_setpoint"] = *b.voltage_setpoint;
        if (b.kind == BusKind::slack) jb["angle_setpoint"] = b.angle_setpoint;
        doc["buses"].push_back(std::move(jb));
    }
    doc["lines"] = json::array();
    for (const auto& l : net.lines) {
        doc["lines"].push_back({{"from", l.from_bus},
                                {"to", l.to_bus},
                                {"impedance", {l.impedance.real(), l.impedance.imag()}}});
    }
    doc["generators"] = json::array();
    for (const auto& g : net.generators) {
        doc["generators"].push_back({{"bus", g.bus},
                                     {"inertia", g.inertia},
                                     {"internal_voltage", g.internal_voltage},
                                     {"transient_reactance", g.transient_reactance},
                                     {"mechanical_power", g.mechanical_power},
                                     {"scheduled_active_power", g.scheduled_active_power}});
    }
    if (net.wind_plant) {
        const auto& w = *net.wind_plant;
        json jw;
        jw["bus"] = w.bus;
        jw["unit_scale"] = w.unit_scale;
        jw["turbine"] = {{"swept_area", w.turbine.swept_area},
                         {"air_density", w.turbine.air_density},
                         {"blade_length", w.turbine.blade_length},
                         {"gear_ratio", w.turbine.gear_ratio},
                         {"pitch", w.turbine.pitch}};
        jw["dfig"] = {{"stator_resistance", w.dfig.stator_resistance},
                      {"rotor_resistance", w.dfig.rotor_resistance},
                      {"stator_leakage", w.dfig.stator_leakage},
                      {"rotor_leakage", w.dfig.rotor_leakage},
                      {"magnetizing", w.dfig.magnetizing},
                      {"poles", w.dfig.poles},
                      {"sync_speed", w.dfig.sync_speed}};
        jw["operating_point"] = {{"wind_speed", w.operating_point.wind_speed},
                                 {"generator_speed", w.operating_point.generator_speed},
                                 {"scheduled_active_power", w.operating_point.scheduled_active_power}};
        doc["wind_plant"] = std::move(jw);
    } else {
        doc["wind_plant"] = nullptr;
    }
    return doc.dump(2);
}

}  // namespace allflow::net
