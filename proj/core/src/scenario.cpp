#include "gridswitch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridswitch/error.hpp"

namespace gridswitch {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw Error(Errc::SchemaError, (path.empty() ? std::string("/") : path) + ": " + msg);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            schema_error(path + "/" + item.key(), "unknown key");
        }
    }
}

double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) schema_error(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) schema_error(path, "expected a finite number");
    return x;
}

double req_number(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) schema_error(path + "/" + key, "missing required number");
    return number_at(obj.at(key), path + "/" + key);
}

double opt_number(const json& obj, const std::string& path, const char* key, double fallback) {
    return obj.contains(key) ? number_at(obj.at(key), path + "/" + key) : fallback;
}

int req_int(const json& obj, const std::string& path, const char* key) {
    const std::string p = path + "/" + key;
    if (!obj.contains(key)) schema_error(p, "missing required integer");
    const json& v = obj.at(key);
    if (!v.is_number_integer()) schema_error(p, "expected an integer");
    return v.get<int>();
}

std::string req_string(const json& obj, const std::string& path, const char* key) {
    const std::string p = path + "/" + key;
    if (!obj.contains(key)) schema_error(p, "missing required string");
    if (!obj.at(key).is_string()) schema_error(p, "expected a string");
    return obj.at(key).get<std::string>();
}

bool opt_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) schema_error(path + "/" + key, "expected a boolean");
    return obj.at(key).get<bool>();
}

std::vector<double> number_list(const json& obj, const std::string& path, const char* key) {
    const std::string p = path + "/" + key;
    if (!obj.contains(key)) schema_error(p, "missing required array");
    const json& v = obj.at(key);
    if (!v.is_array()) schema_error(p, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_at(v[i], p + "/" + std::to_string(i)));
    return out;
}

SupplySpec parse_supply(const json& j, const std::string& path) {
    if (!j.is_object()) schema_error(path, "expected an object");
    const std::string model = req_string(j, path, "model");
    SupplySpec spec;
    if (j.contains("participation")) {
        spec.participation = number_at(j.at("participation"), path + "/participation");
        if (*spec.participation < 0.0) schema_error(path + "/participation", "must be >= 0");
    }
    if (model == "static_damping") {
        check_keys(j, path, {"model", "participation", "damping"});
        spec.model = StaticDamping{req_number(j, path, "damping")};
    } else if (model == "pi_lag") {
        check_keys(j, path, {"model", "participation", "gain", "droop_gain", "damping", "tau_beta"});
        spec.model = PILag{req_number(j, path, "gain"), opt_number(j, path, "droop_gain", 0.0),
                           req_number(j, path, "damping"), req_number(j, path, "tau_beta")};
    } else if (model == "pi_second_order") {
        check_keys(j, path, {"model", "participation", "gain", "damping", "tau_beta", "tau_gamma"});
        spec.model = PISecondOrder{req_number(j, path, "gain"), req_number(j, path, "damping"),
                                   req_number(j, path, "tau_beta"), req_number(j, path, "tau_gamma")};
    } else if (model == "state_space") {
        check_keys(j, path, {"model", "participation", "a", "b", "c", "d"});
        const std::vector<double> b = number_list(j, path, "b");
        const std::vector<double> c = number_list(j, path, "c");
        const auto n = static_cast<Eigen::Index>(b.size());
        if (!j.contains("a") || !j.at("a").is_array()) schema_error(path + "/a", "expected an array of rows");
        const json& a = j.at("a");
        if (a.size() != b.size() || c.size() != b.size()) {
            schema_error(path, "a, b and c dimensions disagree");
        }
        LinearStateSpace ss;
        ss.a.resize(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const std::string rp = path + "/a/" + std::to_string(r);
            const json& row = a[static_cast<std::size_t>(r)];
            if (!row.is_array() || row.size() != b.size()) schema_error(rp, "row has the wrong length");
            for (Eigen::Index col = 0; col < n; ++col) {
                ss.a(r, col) = number_at(row[static_cast<std::size_t>(col)], rp + "/" + std::to_string(col));
            }
        }
        ss.b = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
        ss.c = Eigen::Map<const Eigen::RowVectorXd>(c.data(), n);
        ss.d = req_number(j, path, "d");
        spec.model = ss;
    } else if (model == "transfer_function") {
        check_keys(j, path, {"model", "participation", "numerator", "denominator", "integrator"});
        spec.model = TransferFunction{number_list(j, path, "numerator"), number_list(j, path, "denominator"),
                                      opt_bool(j, path, "integrator", false)};
    } else if (model == "turbine_governor") {
        check_keys(j, path, {"model", "participation", "gain", "damping", "t_s", "t_3", "t_c", "t_4", "t_5"});
        GovernorParams g;
        g.gain = opt_number(j, path, "gain", g.gain);
        g.damping = opt_number(j, path, "damping", g.damping);
        g.t_s = opt_number(j, path, "t_s", g.t_s);
        g.t_3 = opt_number(j, path, "t_3", g.t_3);
        g.t_c = opt_number(j, path, "t_c", g.t_c);
        g.t_4 = opt_number(j, path, "t_4", g.t_4);
        g.t_5 = opt_number(j, path, "t_5", g.t_5);
        spec.governor = g;
        spec.model = turbine_governor(g);
    } else {
        schema_error(path + "/model", "unknown supply model '" + model + "'");
    }
    try {
        validate(spec.model);
    } catch (const Error& e) {
        schema_error(path, e.what());
    }
    return spec;
}

ThresholdUnit parse_units(const json& j, const std::string& path) {
    if (!j.contains("units")) return ThresholdUnit::RadPerSecond;
    const std::string u = req_string(j, path, "units");
    if (u == "rad_s") return ThresholdUnit::RadPerSecond;
    if (u == "hz") return ThresholdUnit::Hertz;
    schema_error(path + "/units", "expected 'rad_s' or 'hz'");
}

LoadSpec parse_control(const json& j, const std::string& path) {
    if (!j.is_object()) schema_error(path, "expected an object");
    const std::string policy = req_string(j, path, "policy");
    LoadSpec spec;
    if (policy == "none") {
        check_keys(j, path, {"policy"});
        return spec;
    }
    spec.units = parse_units(j, path);
    if (policy == "switching") {
        check_keys(j, path, {"policy", "units", "d_up", "d_down", "omega_up", "omega_down"});
        SwitchingLoad l{req_number(j, path, "d_up"), req_number(j, path, "d_down"), req_number(j, path, "omega_up"),
                        req_number(j, path, "omega_down")};
        if (l.d_up < 0.0 || l.d_down > 0.0) schema_error(path, "switching load needs d_down <= 0 <= d_up");
        if (!(l.omega_up > 0.0) || !(l.omega_down < 0.0)) {
            schema_error(path, "switching load needs omega_down < 0 < omega_up");
        }
        spec.control = l;
    } else if (policy == "hysteresis") {
        check_keys(j, path, {"policy", "units", "d_up", "omega1", "omega0"});
        HystereticLoad l{req_number(j, path, "d_up"), req_number(j, path, "omega1"), req_number(j, path, "omega0")};
        if (l.d_up < 0.0) schema_error(path + "/d_up", "must be >= 0");
        if (!(l.omega0 > 0.0) || !(l.omega1 > l.omega0)) {
            schema_error(path, "hysteresis thresholds need omega1 > omega0 > 0");
        }
        spec.control = l;
    } else {
        schema_error(path + "/policy", "expected 'none', 'switching' or 'hysteresis'");
    }
    return spec;
}

std::size_t line_of(std::string_view text, std::size_t byte, std::size_t* col) {
    std::size_t line = 1, c = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            c = 1;
        } else {
            ++c;
        }
    }
    *col = c;
    return line;
}

}  // namespace

const char* to_string(LoadMode mode) noexcept {
    switch (mode) {
        case LoadMode::None: return "none";
        case LoadMode::Switching: return "switching";
        case LoadMode::Hysteresis: return "hysteresis";
    }
    return "unknown";
}

LoadMode declared_load_mode(const Scenario& s) {
    bool sw = false, hy = false;
    for (const BusSpec& b : s.buses) {
        sw = sw || std::holds_alternative<SwitchingLoad>(b.control.control);
        hy = hy || std::holds_alternative<HystereticLoad>(b.control.control);
    }
    if (sw && hy) throw Error(Errc::SemanticError, "switching and hysteretic loads cannot be mixed in one scenario");
    return sw ? LoadMode::Switching : (hy ? LoadMode::Hysteresis : LoadMode::None);
}

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t col = 0;
        const std::size_t line = line_of(text, e.byte, &col);
        throw Error(Errc::SyntaxError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                           e.what());
    }

    check_keys(doc, "", {"name", "base_mva", "network", "disturbances", "solver", "monitor"});
    Scenario s;
    s.name = req_string(doc, "", "name");
    s.base_mva = opt_number(doc, "", "base_mva", 100.0);
    if (!(s.base_mva > 0.0)) schema_error("/base_mva", "must be positive");

    if (!doc.contains("network")) schema_error("/network", "missing required object");
    const json& net = doc.at("network");
    check_keys(net, "/network", {"buses", "lines"});
    if (!net.contains("buses") || !net.at("buses").is_array()) schema_error("/network/buses", "expected an array");
    const json& buses = net.at("buses");
    if (buses.empty()) schema_error("/network/buses", "at least one bus is required");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string p = "/network/buses/" + std::to_string(i);
        const json& b = buses[i];
        check_keys(b, p, {"id", "inertia", "load", "supply", "control"});
        BusSpec bus;
        bus.id = req_int(b, p, "id");
        bus.inertia = req_number(b, p, "inertia");
        bus.load = opt_number(b, p, "load", 0.0);
        if (!b.contains("supply")) schema_error(p + "/supply", "every bus needs exactly one supply model");
        bus.supply = parse_supply(b.at("supply"), p + "/supply");
        if (b.contains("control")) bus.control = parse_control(b.at("control"), p + "/control");
        s.buses.push_back(std::move(bus));
    }
    if (net.contains("lines")) {
        const json& lines = net.at("lines");
        if (!lines.is_array()) schema_error("/network/lines", "expected an array");
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const std::string p = "/network/lines/" + std::to_string(i);
            check_keys(lines[i], p, {"from", "to", "susceptance"});
            s.lines.push_back({req_int(lines[i], p, "from"), req_int(lines[i], p, "to"),
                               req_number(lines[i], p, "susceptance")});
        }
    }

    std::set<int> ids;
    for (const BusSpec& b : s.buses) ids.insert(b.id);
    if (doc.contains("disturbances")) {
        const json& ds = doc.at("disturbances");
        if (!ds.is_array()) schema_error("/disturbances", "expected an array");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::string p = "/disturbances/" + std::to_string(i);
            check_keys(ds[i], p, {"bus", "time", "magnitude"});
            DisturbanceSpec d{req_int(ds[i], p, "bus"), req_number(ds[i], p, "time"),
                              req_number(ds[i], p, "magnitude")};
            if (!ids.contains(d.bus)) {
                throw Error(Errc::SemanticError, p + "/bus: bus " + std::to_string(d.bus) + " does not exist");
            }
            if (d.time < 0.0) schema_error(p + "/time", "must be >= 0");
            s.disturbances.push_back(d);
        }
    }

    const LoadMode declared = declared_load_mode(s);
    s.solver.mode = declared == LoadMode::Switching ? SolverMode::Filippov : SolverMode::Hybrid;
    if (doc.contains("solver")) {
        const json& j = doc.at("solver");
        const std::string p = "/solver";
        check_keys(j, p, {"dt", "t_end", "event_tol", "mode", "sliding", "chatter_window", "chatter_count",
                          "output_dt"});
        SolverConfig& c = s.solver;
        c.dt = opt_number(j, p, "dt", c.dt);
        c.t_end = opt_number(j, p, "t_end", c.t_end);
        c.event_tol = opt_number(j, p, "event_tol", c.event_tol);
        c.chatter_window = opt_number(j, p, "chatter_window", c.chatter_window);
        c.output_dt = opt_number(j, p, "output_dt", c.output_dt);
        if (j.contains("chatter_count")) {
            const int n = req_int(j, p, "chatter_count");
            if (n < 0) schema_error(p + "/chatter_count", "must be >= 0");
            c.chatter_count = static_cast<std::size_t>(n);
        }
        if (j.contains("mode")) {
            const std::string m = req_string(j, p, "mode");
            if (m != "filippov" && m != "hybrid") schema_error(p + "/mode", "expected 'filippov' or 'hybrid'");
            const SolverMode mode = m == "filippov" ? SolverMode::Filippov : SolverMode::Hybrid;
            if ((declared == LoadMode::Switching && mode != SolverMode::Filippov) ||
                (declared == LoadMode::Hysteresis && mode != SolverMode::Hybrid)) {
                throw Error(Errc::SemanticError, p + "/mode: '" + m + "' does not match the declared load policies");
            }
            c.mode = mode;
        }
        if (j.contains("sliding")) {
            const std::string m = req_string(j, p, "sliding");
            if (m == "equivalent-control") {
                c.sliding = SlidingMode::EquivalentControl;
            } else if (m == "strict-event") {
                c.sliding = SlidingMode::StrictEvent;
            } else {
                schema_error(p + "/sliding", "expected 'equivalent-control' or 'strict-event'");
            }
        }
        try {
            c.validate();
        } catch (const Error& e) {
            schema_error(p, e.what());
        }
    }

    if (doc.contains("monitor")) {
        const json& j = doc.at("monitor");
        const std::string p = "/monitor";
        check_keys(j, p, {"lyapunov", "storage_epsilon", "settling_band", "assert_convergence", "convergence_tol",
                          "inner_ratio"});
        MonitorSpec& m = s.monitor;
        m.lyapunov = opt_bool(j, p, "lyapunov", m.lyapunov);
        m.storage_epsilon = opt_number(j, p, "storage_epsilon", m.storage_epsilon);
        m.settling_band = opt_number(j, p, "settling_band", m.settling_band);
        m.assert_convergence = opt_bool(j, p, "assert_convergence", m.assert_convergence);
        m.convergence_tol = opt_number(j, p, "convergence_tol", m.convergence_tol);
        m.inner_ratio = opt_number(j, p, "inner_ratio", m.inner_ratio);
        if (m.storage_epsilon < 0.0) schema_error(p + "/storage_epsilon", "must be >= 0");
        if (!(m.settling_band > 0.0)) schema_error(p + "/settling_band", "must be positive");
        if (!(m.convergence_tol > 0.0)) schema_error(p + "/convergence_tol", "must be positive");
        if (!(m.inner_ratio > 0.0 && m.inner_ratio < 1.0)) schema_error(p + "/inner_ratio", "must lie in (0, 1)");
    }

    if (s.monitor.assert_convergence &&
        std::none_of(s.buses.begin(), s.buses.end(),
                     [](const BusSpec& b) { return restores_frequency(b.supply.model); })) {
        throw Error(Errc::SemanticError,
                    "convergence assertions need at least one bus with a frequency-restoring supply");
    }
    (void)build_network(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::SyntaxError, "cannot read scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

namespace {

ojson supply_json(const SupplySpec& spec) {
    ojson j;
    if (spec.governor) {
        const GovernorParams& g = *spec.governor;
        j = {{"model", "turbine_governor"}, {"gain", g.gain}, {"damping", g.damping}, {"t_s", g.t_s},
             {"t_3", g.t_3},           {"t_c", g.t_c},     {"t_4", g.t_4},         {"t_5", g.t_5}};
    } else if (const auto* m = std::get_if<StaticDamping>(&spec.model)) {
        j = {{"model", "static_damping"}, {"damping", m->damping}};
    } else if (const auto* m = std::get_if<PILag>(&spec.model)) {
        j = {{"model", "pi_lag"}, {"gain", m->gain}, {"droop_gain", m->droop_gain}, {"damping", m->damping},
             {"tau_beta", m->tau_beta}};
    } else if (const auto* m = std::get_if<PISecondOrder>(&spec.model)) {
        j = {{"model", "pi_second_order"}, {"gain", m->gain}, {"damping", m->damping}, {"tau_beta", m->tau_beta},
             {"tau_gamma", m->tau_gamma}};
    } else if (const auto* m = std::get_if<LinearStateSpace>(&spec.model)) {
        ojson a = ojson::array();
        for (Eigen::Index r = 0; r < m->a.rows(); ++r) {
            ojson row = ojson::array();
            for (Eigen::Index c = 0; c < m->a.cols(); ++c) row.push_back(m->a(r, c));
            a.push_back(row);
        }
        j = {{"model", "state_space"},
             {"a", a},
             {"b", std::vector<double>(m->b.data(), m->b.data() + m->b.size())},
             {"c", std::vector<double>(m->c.data(), m->c.data() + m->c.size())},
             {"d", m->d}};
    } else if (const auto* m = std::get_if<TransferFunction>(&spec.model)) {
        j = {{"model", "transfer_function"}, {"numerator", m->numerator}, {"denominator", m->denominator},
             {"integrator", m->integrator}};
    } else {
        throw Error(Errc::UnsupportedVariant, "nonlinear supplies cannot be written to a scenario file");
    }
    if (spec.participation) j["participation"] = *spec.participation;
    return j;
}

ojson control_json(const LoadSpec& spec) {
    const char* units = spec.units == ThresholdUnit::Hertz ? "hz" : "rad_s";
    if (const auto* l = std::get_if<SwitchingLoad>(&spec.control)) {
        return {{"policy", "switching"}, {"units", units},           {"d_up", l->d_up},
                {"d_down", l->d_down},   {"omega_up", l->omega_up}, {"omega_down", l->omega_down}};
    }
    if (const auto* l = std::get_if<HystereticLoad>(&spec.control)) {
        return {{"policy", "hysteresis"}, {"units", units}, {"d_up", l->d_up}, {"omega1", l->omega1},
                {"omega0", l->omega0}};
    }
    return {{"policy", "none"}};
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
    ojson doc;
    doc["name"] = s.name;
    doc["base_mva"] = s.base_mva;
    ojson buses = ojson::array();
    for (const BusSpec& b : s.buses) {
        ojson jb = {{"id", b.id}, {"inertia", b.inertia}, {"load", b.load}, {"supply", supply_json(b.supply)}};
        if (!std::holds_alternative<NoLoad>(b.control.control)) jb["control"] = control_json(b.control);
        buses.push_back(jb);
    }
    ojson lines = ojson::array();
    for (const Line& l : s.lines) lines.push_back({{"from", l.from}, {"to", l.to}, {"susceptance", l.susceptance}});
    doc["network"] = {{"buses", buses}, {"lines", lines}};
    ojson ds = ojson::array();
    for (const DisturbanceSpec& d : s.disturbances) {
        ds.push_back({{"bus", d.bus}, {"time", d.time}, {"magnitude", d.magnitude}});
    }
    doc["disturbances"] = ds;
    const SolverConfig& c = s.solver;
    doc["solver"] = {{"dt", c.dt},
                     {"t_end", c.t_end},
                     {"event_tol", c.event_tol},
                     {"mode", c.mode == SolverMode::Filippov ? "filippov" : "hybrid"},
                     {"sliding", c.sliding == SlidingMode::StrictEvent ? "strict-event" : "equivalent-control"},
                     {"chatter_window", c.chatter_window},
                     {"chatter_count", c.chatter_count},
                     {"output_dt", c.output_dt}};
    const MonitorSpec& m = s.monitor;
    doc["monitor"] = {{"lyapunov", m.lyapunov},
                      {"storage_epsilon", m.storage_epsilon},
                      {"settling_band", m.settling_band},
                      {"assert_convergence", m.assert_convergence},
                      {"convergence_tol", m.convergence_tol},
                      {"inner_ratio", m.inner_ratio}};
    return doc.dump(2) + "\n";
}

Network build_network(const Scenario& s) {
    std::vector<Bus> buses;
    buses.reserve(s.buses.size());
    for (const BusSpec& b : s.buses) buses.push_back({b.id, b.inertia, b.load});
    return Network::build(std::move(buses), s.lines);
}

Plant build_plant(const Scenario& s) {
    Plant p;
    p.network = build_network(s);
    for (const BusSpec& b : s.buses) {
        p.supplies.push_back(b.supply.model);
        const double k = b.control.units == ThresholdUnit::Hertz ? 2.0 * std::numbers::pi : 1.0;
        LoadControl c = b.control.control;
        if (auto* l = std::get_if<SwitchingLoad>(&c)) {
            l->omega_up *= k;
            l->omega_down *= k;
        } else if (auto* l = std::get_if<HystereticLoad>(&c)) {
            l->omega1 *= k;
            l->omega0 *= k;
        }
        p.loads.push_back(c);
    }
    for (const DisturbanceSpec& d : s.disturbances) {
        p.disturbances.push_back({p.network.index_of(d.bus), d.time, d.magnitude});
    }
    validate(p);
    return p;
}

EquilibriumOptions equilibrium_options(const Scenario& s) {
    EquilibriumOptions o;
    const bool any = std::any_of(s.buses.begin(), s.buses.end(),
                                 [](const BusSpec& b) { return b.supply.participation.has_value(); });
    if (any) {
        for (const BusSpec& b : s.buses) o.participation.push_back(b.supply.participation.value_or(1.0));
    }
    return o;
}

Scenario with_load_mode(const Scenario& s, LoadMode mode) {
    Scenario out = s;
    for (BusSpec& b : out.buses) {
        LoadControl& c = b.control.control;
        if (std::holds_alternative<NoLoad>(c)) continue;
        if (mode == LoadMode::None) {
            c = NoLoad{};
        } else if (mode == LoadMode::Switching) {
            if (const auto* h = std::get_if<HystereticLoad>(&c)) {
                c = SwitchingLoad{h->d_up, -h->d_up, h->omega1, -h->omega1};
            }
        } else if (const auto* sw = std::get_if<SwitchingLoad>(&c)) {
            c = HystereticLoad{sw->d_up, sw->omega_up, s.monitor.inner_ratio * sw->omega_up};
        }
    }
    out.solver.mode = mode == LoadMode::Switching ? SolverMode::Filippov : SolverMode::Hybrid;
    return out;
}

}  // namespace gridswitch
