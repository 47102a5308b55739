#pragma once

// Equilibria, security margins, Lyapunov monitoring and overshoot metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridswitch/passivity.hpp"
#include "gridswitch/solver.hpp"

namespace gridswitch {

struct EquilibriumPoint {
    std::vector<double> eta_star;
    std::vector<double> omega_star;
    std::vector<std::vector<double>> x_s_star;
    std::vector<double> s_star;
    std::vector<double> p_star;
    std::vector<double> load;  ///< p^L the point balances
    double residual = 0.0;     ///< max |derivative| of swing and supply dynamics at the point
};

struct EquilibriumOptions {
    /// Share of the total load carried by each frequency-restoring bus. Empty
    /// means an equal split; entries for non-restoring buses are ignored.
    std::vector<double> participation;
    std::size_t random_seeds = 20;
    std::uint64_t seed = 0x5eed;
    double tolerance = 1e-10;
    int max_iterations = 100;
};

/// omega* = 0; restoring buses split the total load by participation, the rest
/// sit at zero output. Newton on bus phases from several seeds; the solution
/// with the smallest max |eta| wins.
/// Throws NonzeroFrequencyRequired (no restoring bus) or NoEquilibriumFound.
EquilibriumPoint solve_equilibrium(const Network& network, std::span<const SupplyModel> supplies,
                                   std::span<const double> load, const EquilibriumOptions& options = {});

/// Equilibrium of the plant after all disturbances.
EquilibriumPoint solve_equilibrium(const Plant& plant, const EquilibriumOptions& options = {});

/// Initial state sitting at an equilibrium with every sigma at zero.
HybridState equilibrium_state(const EquilibriumPoint& eq, double t = 0.0);

/// Per line: true iff |eta*| < pi/2.
std::vector<bool> security_check(const EquilibriumPoint& eq);

struct LyapunovValue {
    double v_f = 0.0;
    double v_p = 0.0;
    std::vector<double> v_s;  ///< per bus, empty without storages
    double total = 0.0;
};

/// Per-bus storages; a missing entry means none was derived for that bus.
using StorageSet = std::vector<std::optional<StorageFunction>>;

/// Storages of every linear supply, centred on the equilibrium internal state.
/// Buses whose search fails (or nonlinear supplies) get an empty entry.
StorageSet derive_storages(std::span<const SupplyModel> supplies, const EquilibriumPoint& eq,
                           double epsilon = 0.0);

[[nodiscard]] bool complete(const StorageSet& storages) noexcept;

/// Throws MissingEquilibrium when `eq` is empty.
LyapunovValue lyapunov_value(const Network& network, const HybridState& state,
                             const std::optional<EquilibriumPoint>& eq, const StorageSet* storages = nullptr);

std::vector<LyapunovValue> lyapunov_series(const Network& network, const Trajectory& traj,
                                           const EquilibriumPoint& eq, const StorageSet* storages = nullptr);

enum class MonitorMode { Storage, SupplyRate };

[[nodiscard]] const char* to_string(MonitorMode mode) noexcept;

struct DissipationReport {
    MonitorMode mode = MonitorMode::Storage;
    double max_flow_increase = 0.0;  ///< max over flow intervals of the checked increase
    double max_jump_change = 0.0;    ///< max |V+ - V| across jumps
    std::size_t flow_intervals = 0;
    std::size_t jumps = 0;
    std::size_t flow_violations = 0;  ///< intervals exceeding 1e-8 + 1e-6 (t2 - t1)
    double worst_time = 0.0;
    [[nodiscard]] bool ok() const noexcept { return flow_violations == 0 && max_jump_change == 0.0; }
};

/// Storage mode checks V(t2) - V(t1) <= tol along flow. Supply-rate mode (used
/// when any storage is missing) checks
///   Vbar(t2) - Vbar(t1) <= int sum_j omega_j (s_j - s*_j - d_c_j) dt + tol.
DissipationReport verify_dissipation(const Network& network, const Trajectory& traj, const EquilibriumPoint& eq,
                                     const StorageSet* storages = nullptr);

struct OvershootMetrics {
    std::size_t bus = 0;
    double peak_abs_omega = 0.0;
    double peak_time = 0.0;
    double settling_time = 0.0;  ///< NaN when |omega| never stays inside the band
    double last_load_activity = 0.0;  ///< last sample time with non-zero demand; NaN if never active
    bool load_off_at_end = true;
};

std::vector<OvershootMetrics> overshoot_metrics(const Trajectory& traj, double band = 1e-3);

}  // namespace gridswitch
