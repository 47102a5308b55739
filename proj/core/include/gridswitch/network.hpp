#pragma once

// Power network graph and the swing dynamics evaluated on it.
//
// Angles are carried as per-line differences (eta), not per-bus phases, and
// frequencies as deviations from nominal in rad/s. Powers are per-unit.

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

namespace gridswitch {

struct Bus {
    int id = 0;
    double inertia = 1.0;    ///< M_j > 0, per-unit seconds
    double base_load = 0.0;  ///< frequency-independent load p^L_j, per-unit
};

/// Lossless line; power flows from `from` to `to` as B sin(eta).
struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 1.0;
};

/// Validated connected graph. Buses keep the order they were given in; all
/// per-bus vectors in the library are indexed by that position, and per-line
/// vectors by line position.
class Network {
public:
    Network() = default;

    /// Validates and builds. Throws Error with DisconnectedGraph, DuplicateLine,
    /// NonPositiveParameter or DanglingReference.
    static Network build(std::vector<Bus> buses, std::vector<Line> lines);

    [[nodiscard]] std::size_t bus_count() const noexcept { return buses_.size(); }
    [[nodiscard]] std::size_t line_count() const noexcept { return lines_.size(); }
    [[nodiscard]] std::span<const Bus> buses() const noexcept { return buses_; }
    [[nodiscard]] std::span<const Line> lines() const noexcept { return lines_; }
    [[nodiscard]] const Bus& bus(std::size_t index) const { return buses_.at(index); }
    [[nodiscard]] const Line& line(std::size_t index) const { return lines_.at(index); }

    /// Position of a bus id; throws DanglingReference for unknown ids.
    [[nodiscard]] std::size_t index_of(int bus_id) const;
    [[nodiscard]] bool contains(int bus_id) const noexcept { return index_.contains(bus_id); }

    [[nodiscard]] std::size_t from_index(std::size_t line) const { return ends_.at(line).first; }
    [[nodiscard]] std::size_t to_index(std::size_t line) const { return ends_.at(line).second; }

    [[nodiscard]] std::vector<double> base_loads() const;

private:
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<std::pair<std::size_t, std::size_t>> ends_;
    std::unordered_map<int, std::size_t> index_;
};

/// Continuous part of the closed-loop state: line angles, bus frequencies and
/// the internal state of every bus's supply model.
struct ContinuousState {
    std::vector<double> eta;
    std::vector<double> omega;
    std::vector<std::vector<double>> x_s;

    bool operator==(const ContinuousState&) const = default;
};

/// p_ij = B_ij sin(eta_ij) per line.
std::vector<double> line_flows(const Network& network, std::span<const double> eta);

struct SwingDerivative {
    std::vector<double> eta_dot;
    std::vector<double> omega_dot;
};

/// Swing dynamics with the network's own base loads.
SwingDerivative swing_rhs(const Network& network, const ContinuousState& state,
                          std::span<const double> supply, std::span<const double> demand);

/// Same, with an explicit per-bus load vector (used when disturbances have
/// moved p^L away from the base values).
SwingDerivative swing_rhs(const Network& network, const ContinuousState& state,
                          std::span<const double> load, std::span<const double> supply,
                          std::span<const double> demand);

/// Allocation-free kernel behind swing_rhs. No dimension checks.
void swing_rhs_into(const Network& network, std::span<const double> eta,
                    std::span<const double> omega, std::span<const double> load,
                    std::span<const double> supply, std::span<const double> demand,
                    std::span<double> eta_dot, std::span<double> omega_dot);

}  // namespace gridswitch
