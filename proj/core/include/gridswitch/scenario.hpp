#pragma once

// Scenario documents (JSON), their validation, and conversion to a Plant.
//
// Schema (closed: unknown keys are rejected):
//
//   {
//     "name": "two_bus",
//     "base_mva": 100,
//     "network": {
//       "buses": [
//         { "id": 1, "inertia": 2.0, "load": 0.0,
//           "supply": { "model": "pi_lag", "gain": 1, "droop_gain": 0.3,
//                       "damping": 0.3, "tau_beta": 0.5, "participation": 1 },
//           "control": { "policy": "hysteresis", "d_up": 0.1, "omega1": 0.05,
//                        "omega0": 0.0075, "units": "rad_s" } }
//       ],
//       "lines": [ { "from": 1, "to": 2, "susceptance": 5.0 } ]
//     },
//     "disturbances": [ { "bus": 2, "time": 1.0, "magnitude": 0.2 } ],
//     "solver": { "dt": 1e-3, "t_end": 60, "event_tol": 1e-9, "mode": "hybrid",
//                 "sliding": "equivalent-control", "chatter_window": 1,
//                 "chatter_count": 50, "output_dt": 0.01 },
//     "monitor": { "lyapunov": true, "storage_epsilon": 0, "settling_band": 1e-3,
//                  "assert_convergence": true, "convergence_tol": 1e-3,
//                  "inner_ratio": 0.15 }
//   }
//
// Supply models: static_damping, pi_lag, pi_second_order, state_space
// (a, b, c, d), transfer_function (numerator, denominator ascending, integrator),
// turbine_governor (gain, damping, t_s, t_3, t_c, t_4, t_5).
// Control policies: none, switching (d_up, d_down, omega_up, omega_down),
// hysteresis (d_up, omega1, omega0). Threshold units: "rad_s" or "hz".

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridswitch/analysis.hpp"
#include "gridswitch/solver.hpp"

namespace gridswitch {

enum class ThresholdUnit { RadPerSecond, Hertz };

struct SupplySpec {
    SupplyModel model = StaticDamping{};
    std::optional<GovernorParams> governor;  ///< set when declared as turbine_governor
    std::optional<double> participation;
};

struct LoadSpec {
    LoadControl control = NoLoad{};  ///< thresholds in `units`
    ThresholdUnit units = ThresholdUnit::RadPerSecond;
};

struct BusSpec {
    int id = 0;
    double inertia = 1.0;
    double load = 0.0;
    SupplySpec supply;
    LoadSpec control;
};

struct DisturbanceSpec {
    int bus = 0;
    double time = 0.0;
    double magnitude = 0.0;
};

struct MonitorSpec {
    bool lyapunov = true;
    double storage_epsilon = 0.0;
    double settling_band = 1e-3;
    bool assert_convergence = false;
    double convergence_tol = 1e-3;
    double inner_ratio = 0.15;  ///< omega0 / omega1 when converting switching loads to hysteresis
};

struct Scenario {
    std::string name;
    double base_mva = 100.0;
    std::vector<BusSpec> buses;
    std::vector<Line> lines;
    std::vector<DisturbanceSpec> disturbances;
    SolverConfig solver;
    MonitorSpec monitor;
};

/// Throws SyntaxError (with line:column), SchemaError (with a JSON pointer) or
/// SemanticError; network-level errors keep their own codes.
Scenario parse_scenario(std::string_view text);

/// Reads and parses a file; I/O failures are SyntaxError.
Scenario load_scenario(const std::string& path);

/// Canonical JSON; parse(serialize(s)) reproduces s.
std::string serialize_scenario(const Scenario& scenario);

/// Network of the scenario (validated).
Network build_network(const Scenario& scenario);

/// Thresholds converted to rad/s, bus ids resolved to positions.
Plant build_plant(const Scenario& scenario);

EquilibriumOptions equilibrium_options(const Scenario& scenario);

enum class LoadMode { None, Switching, Hysteresis };

[[nodiscard]] const char* to_string(LoadMode mode) noexcept;

/// Rewrites every controllable load to `mode` and sets the solver mode to match.
///   hysteresis -> switching: omega_up = omega1, omega_down = -omega1, d_down = -d_up
///   switching -> hysteresis: omega1 = omega_up, omega0 = inner_ratio * omega1
Scenario with_load_mode(const Scenario& scenario, LoadMode mode);

/// Load mode implied by the declared controls (None when there are none).
LoadMode declared_load_mode(const Scenario& scenario);

}  // namespace gridswitch
