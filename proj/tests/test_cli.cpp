#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "support.hpp"

using namespace gridswitch;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gridswitch");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path temp_file(const std::string& name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("simulate --check on a passive scenario") {
    const fs::path dir = fs::temp_directory_path() / "gridswitch_cli_sim";
    fs::remove_all(dir);
    const Run r = cli({"simulate", testing::scenario_path("two_bus"), "--check", "--svg", "--out-dir", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("check: all assertions passed") != std::string::npos);
    for (const char* f : {"trajectory.csv", "events.csv", "metrics.csv", "omega.svg"}) CHECK(fs::exists(dir / f));
    fs::remove_all(dir);
}

TEST_CASE("usage and scenario errors exit 1") {
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"simulate", "/nonexistent/x.json"}).code == 1);
    CHECK(cli({"simulate", testing::scenario_path("two_bus"), "--mode", "sideways"}).code == 1);
    const auto bad = temp_file("gridswitch_bad.json", R"({"name": "x", "voltage_dynamics": 1})");
    const Run r = cli({"equilibrium", bad.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("SchemaError") != std::string::npos);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("infeasible equilibrium exits 2") {
    const auto p = temp_file("gridswitch_weak.json", R"({
      "name": "weak",
      "network": {
        "buses": [ { "id": 1, "inertia": 1, "load": 0.5, "supply": { "model": "pi_lag", "gain": 1, "droop_gain": 0.3, "damping": 0.3, "tau_beta": 0.5 } },
                   { "id": 2, "inertia": 1, "load": -0.5, "supply": { "model": "static_damping", "damping": 1 } } ],
        "lines": [ { "from": 1, "to": 2, "susceptance": 0.4 } ]
      }
    })");
    CHECK(cli({"equilibrium", p.string()}).code == 2);
    CHECK(cli({"simulate", p.string(), "--out-dir", (fs::temp_directory_path() / "gridswitch_weak").string()}).code == 2);
}

TEST_CASE("failed assertions exit 3") {
    const auto p = temp_file("gridswitch_slow.json", R"({
      "name": "slow",
      "network": {
        "buses": [ { "id": 1, "inertia": 1, "supply": { "model": "pi_lag", "gain": 0.01, "droop_gain": 0.3, "damping": 0.3, "tau_beta": 0.5 } },
                   { "id": 2, "inertia": 1, "supply": { "model": "static_damping", "damping": 1 } } ],
        "lines": [ { "from": 1, "to": 2, "susceptance": 5 } ]
      },
      "disturbances": [ { "bus": 2, "time": 0.5, "magnitude": 0.2 } ],
      "solver": { "t_end": 5 },
      "monitor": { "assert_convergence": true }
    })");
    const fs::path dir = fs::temp_directory_path() / "gridswitch_slow";
    CHECK(cli({"simulate", p.string(), "--check", "--out-dir", dir.string()}).code == 3);
    CHECK(cli({"simulate", p.string(), "--out-dir", dir.string()}).code == 0);
    fs::remove_all(dir);
}

TEST_CASE("equilibrium prints the solution") {
    const Run r = cli({"equilibrium", testing::scenario_path("two_bus")});
    CHECK(r.code == 0);
    CHECK(r.out.find("eta: 0.04001") != std::string::npos);
    CHECK(r.out.find("secure: true") != std::string::npos);
    const Run pre = cli({"equilibrium", testing::scenario_path("two_bus"), "--pre"});
    CHECK(pre.out.find("eta: 0\n") != std::string::npos);
}

TEST_CASE("passivity reports the marginal PI-lag as a boundary case") {
    const Run r = cli({"passivity", testing::scenario_path("pilag_marginal")});
    CHECK(r.code == 0);
    CHECK(r.out.find("pass (boundary)") != std::string::npos);
    CHECK(r.out.find("gain_condition: violated") != std::string::npos);
}

TEST_CASE("compare tabulates three load modes") {
    const Run r = cli({"compare", testing::scenario_path("two_bus"), "--t-end", "10"});
    CHECK(r.code == 0);
    CHECK(r.out.find("peak_none_hz") != std::string::npos);
    CHECK(r.out.find("peak_hyst_hz") != std::string::npos);
    CHECK(cli({"compare", testing::scenario_path("two_bus"), "--t-end", "10"}).out == r.out);
}

TEST_CASE("report prints metrics") {
    const Run r = cli({"report", testing::scenario_path("chatter_demo"), "--t-end", "3"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("bus,peak_abs_omega", 0) == 0);
}
