#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridswitch/error.hpp"
#include "gridswitch/report.hpp"
#include "gridswitch/scenario.hpp"
#include "support.hpp"

using namespace gridswitch;
using nlohmann::json;

namespace {

const char* kMinimal = R"({
  "name": "one",
  "network": { "buses": [ { "id": 1, "inertia": 1.0, "supply": { "model": "pi_lag", "gain": 1, "droop_gain": 0.3, "damping": 0.3, "tau_beta": 0.5 } } ], "lines": [] }
})";

Error error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected an Error");
    return Error(Errc::InvalidArgument, "");
}

json minimal() { return json::parse(kMinimal); }

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("minimal scenario parses") {
    const Scenario s = parse_scenario(kMinimal);
    CHECK(s.name == "one");
    CHECK(s.buses.size() == 1);
    CHECK(build_network(s).bus_count() == 1);
}

TEST_CASE("syntax errors carry a position") {
    const Error e = error_of("{\n  \"name\": \"x\",\n  oops\n}");
    CHECK(e.code() == Errc::SyntaxError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
}

TEST_CASE("unknown keys are schema errors with a path") {
    json j = minimal();
    j["voltage_dynamics"] = true;
    Error e = error_of(j.dump());
    CHECK(e.code() == Errc::SchemaError);
    CHECK(std::string(e.what()).find("/voltage_dynamics") != std::string::npos);

    j = minimal();
    j["network"]["buses"][0]["supply"]["colour"] = 1;
    e = error_of(j.dump());
    CHECK(e.code() == Errc::SchemaError);
    CHECK(std::string(e.what()).find("/network/buses/0/supply/colour") != std::string::npos);
}

TEST_CASE("hysteresis thresholds must be ordered") {
    json j = minimal();
    j["network"]["buses"][0]["control"] = {{"policy", "hysteresis"}, {"d_up", 0.1}, {"omega1", 0.01}, {"omega0", 0.01}};
    CHECK(error_of(j.dump()).code() == Errc::SchemaError);
    j["network"]["buses"][0]["control"]["omega0"] = 0.02;
    CHECK(error_of(j.dump()).code() == Errc::SchemaError);
}

TEST_CASE("wrong types are schema errors; bad network values keep their codes") {
    json j = minimal();
    j["network"]["buses"][0]["inertia"] = "heavy";
    CHECK(error_of(j.dump()).code() == Errc::SchemaError);
    j = minimal();
    j["network"]["buses"][0]["inertia"] = -1.0;
    CHECK(error_of(j.dump()).code() == Errc::NonPositiveParameter);
}

TEST_CASE("semantic errors") {
    json j = minimal();
    j["disturbances"] = json::array({{{"bus", 7}, {"time", 1.0}, {"magnitude", 0.1}}});
    CHECK(error_of(j.dump()).code() == Errc::SemanticError);

    j = minimal();
    j["disturbances"] = json::array({{{"bus", 1}, {"time", -1.0}, {"magnitude", 0.1}}});
    CHECK(error_of(j.dump()).code() != Errc::SyntaxError);

    j = minimal();
    j["network"]["buses"][0]["supply"] = {{"model", "static_damping"}, {"damping", 1.0}};
    j["monitor"] = {{"assert_convergence", true}};
    CHECK(error_of(j.dump()).code() == Errc::SemanticError);

    j = minimal();
    j["network"]["buses"][0]["control"] = {{"policy", "switching"}, {"d_up", 0.1}, {"d_down", -0.1},
                                           {"omega_up", 0.01}, {"omega_down", -0.01}};
    j["solver"] = {{"mode", "hybrid"}};
    CHECK(error_of(j.dump()).code() == Errc::SemanticError);
}

TEST_CASE("bundled scenarios round-trip") {
    for (const char* name : {"two_bus", "nine_bus_ring", "chatter_demo", "pilag_marginal"}) {
        const Scenario a = load_scenario(testing::scenario_path(name));
        const std::string text = serialize_scenario(a);
        const Scenario b = parse_scenario(text);
        CHECK(serialize_scenario(b) == text);
        CHECK(json::parse(text) == json::parse(serialize_scenario(b)));
    }
}

TEST_CASE("threshold units convert to rad/s") {
    json j = minimal();
    j["network"]["buses"][0]["control"] = {{"policy", "hysteresis"}, {"d_up", 0.1}, {"omega1", 0.01},
                                           {"omega0", 0.002}, {"units", "hz"}};
    const Plant p = build_plant(parse_scenario(j.dump()));
    const auto& h = std::get<HystereticLoad>(p.loads[0]);
    CHECK(h.omega1 == doctest::Approx(0.02 * M_PI));
    CHECK(h.omega0 == doctest::Approx(0.004 * M_PI));
}

TEST_CASE("load mode conversion") {
    const Scenario s = load_scenario(testing::scenario_path("two_bus"));
    CHECK(declared_load_mode(s) == LoadMode::Hysteresis);
    const Scenario sw = with_load_mode(s, LoadMode::Switching);
    CHECK(sw.solver.mode == SolverMode::Filippov);
    const auto& l = std::get<SwitchingLoad>(sw.buses[1].control.control);
    CHECK(l.omega_up == 0.05);
    CHECK(l.omega_down == -0.05);
    CHECK(l.d_down == -0.1);
    const Scenario back = with_load_mode(sw, LoadMode::Hysteresis);
    const auto& h = std::get<HystereticLoad>(back.buses[1].control.control);
    CHECK(h.omega1 == 0.05);
    CHECK(h.omega0 == doctest::Approx(0.0075));
    CHECK(declared_load_mode(with_load_mode(s, LoadMode::None)) == LoadMode::None);
}

TEST_CASE("CSV headers are stable") {
    Scenario s = load_scenario(testing::scenario_path("two_bus"));
    s.solver.t_end = 2.0;
    const RunResult r = run_scenario(s);
    std::ostringstream traj, ev, met;
    write_trajectory_csv(traj, r);
    write_events_csv(ev, r);
    write_metrics_csv(met, r);
    auto first = [](const std::string& t) { return t.substr(0, t.find('\n')); };
    CHECK(first(traj.str()) == "t,ell,omega_1,omega_2,eta_1_2,d_c_1,d_c_2,sigma_2,V");
    CHECK(first(ev.str()) == "t,ell,bus,kind");
    CHECK(first(met.str()) ==
          "bus,peak_abs_omega,peak_abs_omega_hz,peak_time,settling_time,terminal_omega,last_load_activity,"
          "load_off_at_end,switches,max_switches_in_window,sliding_intervals,chatter_flag,dwell_min_gap,"
          "dwell_bound,dwell_ok");
}

TEST_CASE("outputs are deterministic") {
    namespace fs = std::filesystem;
    Scenario s = load_scenario(testing::scenario_path("two_bus"));
    s.solver.t_end = 5.0;
    const fs::path base = fs::temp_directory_path() / "gridswitch_det";
    fs::remove_all(base);
    write_outputs(run_scenario(s), (base / "a").string(), true);
    write_outputs(run_scenario(s), (base / "b").string(), true);
    for (const char* f : {"trajectory.csv", "events.csv", "metrics.csv", "omega.svg"}) {
        CHECK(read(base / "a" / f) == read(base / "b" / f));
        CHECK_FALSE(read(base / "a" / f).empty());
    }
    std::ostringstream t1, t2;
    write_compare_table(t1, compare_load_modes(s, 3));
    write_compare_table(t2, compare_load_modes(s, 1));
    CHECK(t1.str() == t2.str());
    fs::remove_all(base);
}

TEST_CASE("check_run passes on the two-bus scenario") {
    const RunResult r = run_scenario(load_scenario(testing::scenario_path("two_bus")));
    CHECK(check_run(r).empty());
    REQUIRE(r.dissipation.has_value());
    CHECK(r.dissipation->ok());
}
