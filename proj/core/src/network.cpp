#include "gridswitch/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "gridswitch/error.hpp"

namespace gridswitch {

Network Network::build(std::vector<Bus> buses, std::vector<Line> lines) {
    if (buses.empty()) {
        throw Error(Errc::InvalidArgument, "network needs at least one bus");
    }
    Network net;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const Bus& b = buses[i];
        if (!(b.inertia > 0.0) || !std::isfinite(b.inertia)) {
            throw Error(Errc::NonPositiveParameter,
                        "bus " + std::to_string(b.id) + " has non-positive inertia");
        }
        if (!std::isfinite(b.base_load)) {
            throw Error(Errc::InvalidArgument, "bus " + std::to_string(b.id) + " has non-finite load");
        }
        if (!net.index_.emplace(b.id, i).second) {
            throw Error(Errc::InvalidArgument, "bus id " + std::to_string(b.id) + " appears twice");
        }
    }

    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Line& l : lines) {
        auto from = net.index_.find(l.from);
        auto to = net.index_.find(l.to);
        if (from == net.index_.end() || to == net.index_.end()) {
            throw Error(Errc::DanglingReference, "line " + std::to_string(l.from) + "->" +
                                                     std::to_string(l.to) + " references a missing bus");
        }
        if (from->second == to->second) {
            throw Error(Errc::InvalidArgument, "self-loop on bus " + std::to_string(l.from));
        }
        if (!(l.susceptance > 0.0) || !std::isfinite(l.susceptance)) {
            throw Error(Errc::NonPositiveParameter, "line " + std::to_string(l.from) + "->" +
                                                        std::to_string(l.to) + " has non-positive susceptance");
        }
        auto key = std::minmax(from->second, to->second);
        if (!seen.insert(key).second) {
            throw Error(Errc::DuplicateLine, "buses " + std::to_string(l.from) + " and " +
                                                 std::to_string(l.to) + " are joined by more than one line");
        }
        net.ends_.emplace_back(from->second, to->second);
    }

    // union-find over the undirected graph
    std::vector<std::size_t> parent(buses.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = buses.size();
    for (auto [a, b] : net.ends_) {
        auto ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    if (components != 1) {
        throw Error(Errc::DisconnectedGraph,
                    "network has " + std::to_string(components) + " connected components");
    }

    net.buses_ = std::move(buses);
    net.lines_ = std::move(lines);
    return net;
}

std::size_t Network::index_of(int bus_id) const {
    auto it = index_.find(bus_id);
    if (it == index_.end()) {
        throw Error(Errc::DanglingReference, "unknown bus id " + std::to_string(bus_id));
    }
    return it->second;
}

std::vector<double> Network::base_loads() const {
    std::vector<double> out;
    out.reserve(buses_.size());
    for (const Bus& b : buses_) out.push_back(b.base_load);
    return out;
}

std::vector<double> line_flows(const Network& network, std::span<const double> eta) {
    if (eta.size() != network.line_count()) {
        throw Error(Errc::DimensionMismatch, "eta has " + std::to_string(eta.size()) +
                                                 " entries for " + std::to_string(network.line_count()) + " lines");
    }
    std::vector<double> p(eta.size());
    for (std::size_t k = 0; k < eta.size(); ++k) {
        p[k] = network.line(k).susceptance * std::sin(eta[k]);
    }
    return p;
}

void swing_rhs_into(const Network& network, std::span<const double> eta,
                    std::span<const double> omega, std::span<const double> load,
                    std::span<const double> supply, std::span<const double> demand,
                    std::span<double> eta_dot, std::span<double> omega_dot) {
    const std::size_t n = network.bus_count();
    for (std::size_t j = 0; j < n; ++j) {
        omega_dot[j] = -load[j] + supply[j] - demand[j];
    }
    const auto lines = network.lines();
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::size_t i = network.from_index(k);
        const std::size_t j = network.to_index(k);
        const double p = lines[k].susceptance * std::sin(eta[k]);
        omega_dot[i] -= p;
        omega_dot[j] += p;
        eta_dot[k] = omega[i] - omega[j];
    }
    const auto buses = network.buses();
    for (std::size_t j = 0; j < n; ++j) {
        omega_dot[j] /= buses[j].inertia;
    }
}

namespace {

void check_dims(const Network& network, const ContinuousState& state, std::size_t load,
                std::size_t supply, std::size_t demand) {
    const std::size_t n = network.bus_count();
    if (state.eta.size() != network.line_count() || state.omega.size() != n || load != n ||
        supply != n || demand != n) {
        throw Error(Errc::DimensionMismatch, "swing_rhs inputs do not match the network dimensions");
    }
}

}  // namespace

SwingDerivative swing_rhs(const Network& network, const ContinuousState& state,
                          std::span<const double> load, std::span<const double> supply,
                          std::span<const double> demand) {
    check_dims(network, state, load.size(), supply.size(), demand.size());
    SwingDerivative d;
    d.eta_dot.resize(network.line_count());
    d.omega_dot.resize(network.bus_count());
    swing_rhs_into(network, state.eta, state.omega, load, supply, demand, d.eta_dot, d.omega_dot);
    return d;
}

SwingDerivative swing_rhs(const Network& network, const ContinuousState& state,
                          std::span<const double> supply, std::span<const double> demand) {
    const auto load = network.base_loads();
    return swing_rhs(network, state, load, supply, demand);
}

}  // namespace gridswitch
