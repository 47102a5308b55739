#pragma once

// Closed-loop integration of the swing dynamics with supply models and
// controllable loads. Switching loads are integrated as a Filippov inclusion,
// hysteretic loads as a hybrid system with flow and jump sets.
//
// Fixed-step RK4 on a uniform grid; steps are split at disturbance times and
// at localized threshold crossings.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gridswitch/loads.hpp"
#include "gridswitch/network.hpp"
#include "gridswitch/supply.hpp"

namespace gridswitch {

/// Step change of the base load at one bus.
struct Disturbance {
    std::size_t bus = 0;  ///< bus position, not id
    double time = 0.0;
    double magnitude = 0.0;
};

/// Everything the integrator needs. Supplies must be in simulation form.
struct Plant {
    Network network;
    std::vector<SupplyModel> supplies;
    std::vector<LoadControl> loads;
    std::vector<Disturbance> disturbances;

    /// p^L at time t (disturbances with time <= t applied).
    [[nodiscard]] std::vector<double> load_at(double t) const;
    /// p^L after every disturbance.
    [[nodiscard]] std::vector<double> final_load() const;
};

/// Throws DimensionMismatch or the model-level validation errors.
void validate(const Plant& plant);

enum class SolverMode { Filippov, Hybrid };
enum class SlidingMode { EquivalentControl, StrictEvent };

struct SolverConfig {
    double dt = 1e-3;
    double event_tol = 1e-9;  ///< rad/s
    double t_end = 60.0;
    SolverMode mode = SolverMode::Hybrid;
    SlidingMode sliding = SlidingMode::EquivalentControl;
    double chatter_window = 1.0;
    std::size_t chatter_count = 50;
    double output_dt = 0.01;       ///< sample spacing, rounded to a multiple of dt
    double max_angle = 3.131592653589793;  ///< pi - 0.01
    double max_state_norm = 1e6;

    /// Throws InvalidArgument.
    void validate() const;
};

struct HybridState {
    double t = 0.0;
    std::size_t ell = 0;
    ContinuousState continuous;
    std::vector<int> sigma;  ///< per bus; always 0 on buses without a hysteretic load
};

enum class EventKind { JumpOn, JumpOff, FilippovCross, SlidingEnter, SlidingExit };

[[nodiscard]] const char* to_string(EventKind kind) noexcept;

struct Event {
    double t = 0.0;
    std::size_t ell = 0;  ///< jump counter after the event
    std::size_t bus = 0;
    EventKind kind = EventKind::JumpOn;
    double omega = 0.0;
    std::string detail;
};

/// One recorded point. `work_*` are running integrals since t = 0:
///   work_supply = int omega s dt, work_omega = int omega dt, work_demand = int omega d_c dt.
struct Sample {
    HybridState state;
    std::vector<double> demand;
    std::vector<double> supply;
    std::vector<double> work_supply;
    std::vector<double> work_omega;
    std::vector<double> work_demand;
};

enum class RunStatus { Completed, Blowup };

struct Trajectory {
    SolverConfig config;
    std::vector<Sample> samples;
    std::vector<Event> events;
    RunStatus status = RunStatus::Completed;
    std::string status_detail;
    std::vector<double> max_abs_omega_dot;  ///< per bus, over all accepted RK stages
    std::size_t steps = 0;
};

/// One RK4 step of size dt with demand held per sigma (hybrid) or per the
/// branch of the switching map at the start (Filippov). Throws StepRejected
/// when a threshold is crossed inside the step.
ContinuousState integrate_flow(const Plant& plant, const HybridState& state, double dt);

struct EventLocation {
    double h_lo = 0.0;  ///< last substep with margin >= 0
    double h_hi = 0.0;  ///< first substep with margin < 0
    double margin_lo = 0.0;
    double margin_hi = 0.0;
    int iterations = 0;
};

/// Illinois regula falsi on [0, h] for a margin that is >= 0 at 0 and < 0 at h.
/// Stops when the margin is within `tol` of zero or the bracket is narrower than
/// `time_resolution`. Throws NoSignChange or MaxBisectionsExceeded.
EventLocation locate_event(const std::function<double(double)>& margin, double h, double tol,
                           double time_resolution = 1e-15, int max_iterations = 200);

enum class Surface { Upper, Lower };

/// Demand holding omega on a switching surface. `free_power` is M omega_dot
/// evaluated with zero controllable demand. Throws NotAttracting when the
/// value lies outside the open Filippov interval of that surface.
double equivalent_control(const SwitchingLoad& load, Surface surface, double free_power);

/// Throws InvalidInitialSigma when sigma(0) is outside I(omega(0)).
Trajectory simulate(const Plant& plant, const SolverConfig& config, const HybridState& initial);

struct ChatterStats {
    std::size_t bus = 0;
    bool flagged = false;
    std::size_t switches = 0;
    std::size_t max_switches_in_window = 0;
    std::size_t sliding_intervals = 0;
    double sliding_time = 0.0;
};

/// Per-bus chattering statistics for buses with a controllable load.
std::vector<ChatterStats> chattering_report(const Trajectory& traj, const Plant& plant, double window,
                                            std::size_t count);

struct DwellStats {
    std::size_t bus = 0;
    std::size_t switches = 0;
    double min_gap = 0.0;
    double bound = 0.0;  ///< (omega1 - omega0 - 2 event_tol) / max |omega_dot|
    bool satisfied = false;
};

/// Buses with a hysteretic load and at least two switches after t = 0.
/// Returns an empty list when no bus qualifies.
std::vector<DwellStats> min_dwell_time(const Trajectory& traj, const Plant& plant);

/// One bus. Throws InsufficientSwitches below two switches, InvalidArgument
/// when the bus has no hysteretic load, NumericalBlowup for a failed run.
DwellStats min_dwell_time(const Trajectory& traj, const Plant& plant, std::size_t bus);

}  // namespace gridswitch
