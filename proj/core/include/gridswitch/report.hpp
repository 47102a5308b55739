#pragma once

// Running a scenario end to end and emitting its results.
//
// CSV schemas (column order is fixed):
//   trajectory: t, ell, omega_<bus>..., eta_<from>_<to>..., d_c_<bus>...,
//               sigma_<bus>... (hysteretic buses only), V (Lyapunov monitor on)
//   events:     t, ell, bus, kind
//   metrics:    bus, peak_abs_omega, peak_abs_omega_hz, peak_time, settling_time,
//               terminal_omega, last_load_activity, load_off_at_end, switches,
//               max_switches_in_window, sliding_intervals, chatter_flag,
//               dwell_min_gap, dwell_bound, dwell_ok

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridswitch/analysis.hpp"
#include "gridswitch/scenario.hpp"

namespace gridswitch {

struct RunResult {
    Scenario scenario;
    Plant plant;
    EquilibriumPoint initial_equilibrium;  ///< base loads; the trajectory starts here
    EquilibriumPoint final_equilibrium;    ///< after all disturbances; Lyapunov reference
    StorageSet storages;
    Trajectory trajectory;
    std::vector<LyapunovValue> lyapunov;  ///< per sample, when the monitor is on
    std::optional<DissipationReport> dissipation;
    std::vector<ChatterStats> chatter;
    std::vector<DwellStats> dwell;
    std::vector<OvershootMetrics> overshoot;
    double elapsed_seconds = 0.0;
};

/// Throws scenario-level errors (NonzeroFrequencyRequired, ...) and numerical
/// ones (NoEquilibriumFound, MaxBisectionsExceeded). A blowup is reported in the
/// trajectory status instead.
RunResult run_scenario(const Scenario& scenario);

/// Assertions behind `--check`: no blowup, dissipation holds, dwell bounds hold,
/// and (if requested by the scenario) terminal convergence. Empty when all pass.
std::vector<std::string> check_run(const RunResult& result);

void write_trajectory_csv(std::ostream& out, const RunResult& result);
void write_events_csv(std::ostream& out, const RunResult& result);
void write_metrics_csv(std::ostream& out, const RunResult& result);
/// Static line plot of omega (Hz) per bus.
void write_omega_svg(std::ostream& out, const RunResult& result);

/// trajectory.csv, events.csv, metrics.csv (+ omega.svg) under `dir`; returns the paths.
std::vector<std::string> write_outputs(const RunResult& result, const std::string& dir, bool svg);

/// The scenario under load modes none, switching and hysteresis, run on up to
/// `threads` threads. Results are in that order.
std::vector<RunResult> compare_load_modes(const Scenario& scenario, unsigned threads = 1);

void write_compare_table(std::ostream& out, const std::vector<RunResult>& runs);

/// GRIDSWITCH_THREADS, defaulting to 1; invalid values fall back to 1.
unsigned thread_count_from_env();

}  // namespace gridswitch
