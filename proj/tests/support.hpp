#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridswitch/analysis.hpp"
#include "gridswitch/scenario.hpp"

namespace gridswitch::testing {

inline std::string scenario_path(const std::string& name) {
    return std::string(GRIDSWITCH_SCENARIO_DIR) + "/" + name + ".json";
}

/// Bus 1 restoring (PILag), bus 2 static damping; the load at bus 2 is whatever
/// the caller passes.
inline Plant two_bus_plant(LoadControl load2 = NoLoad{}, double step = 0.2) {
    Plant p;
    p.network = Network::build({{1, 2.0, 0.0}, {2, 1.0, 0.0}}, {{1, 2, 5.0}});
    p.supplies = {PILag{1.0, 0.3, 0.3, 0.5}, StaticDamping{0.5}};
    p.loads = {NoLoad{}, load2};
    if (step != 0.0) p.disturbances = {{1, 1.0, step}};
    return p;
}

/// Random connected network: a spanning tree plus a few chords.
struct RandomNetwork {
    Network network;
    std::vector<SupplyModel> supplies;
    std::vector<double> load;
};

inline RandomNetwork random_network(std::mt19937_64& rng, std::size_t n, double load_scale, double b_lo = 1.0,
                                    double b_hi = 5.0) {
    std::uniform_real_distribution<double> b(b_lo, b_hi), m(0.5, 3.0), l(-load_scale, load_scale), u(0.0, 1.0);
    std::vector<Bus> buses;
    for (std::size_t i = 0; i < n; ++i) buses.push_back({static_cast<int>(i + 1), m(rng), l(rng)});
    std::vector<Line> lines;
    std::vector<std::vector<bool>> used(n, std::vector<bool>(n, false));
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t parent = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        lines.push_back({static_cast<int>(parent + 1), static_cast<int>(i + 1), b(rng)});
        used[parent][i] = used[i][parent] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            if (!used[i][k] && u(rng) < 0.25) {
                lines.push_back({static_cast<int>(i + 1), static_cast<int>(k + 1), b(rng)});
                used[i][k] = used[k][i] = true;
            }
        }
    }
    RandomNetwork r;
    r.network = Network::build(buses, lines);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || u(rng) < 0.3) {
            r.supplies.push_back(PILag{1.0, 0.5, 1.0, 0.5});
        } else {
            r.supplies.push_back(StaticDamping{1.0});
        }
    }
    r.load = r.network.base_loads();
    return r;
}

/// Net injection at rest: restoring buses share the total load equally, the
/// others produce nothing.
inline std::vector<double> rest_injection(const RandomNetwork& r) {
    std::size_t restoring = 0;
    double total = 0.0;
    for (std::size_t j = 0; j < r.supplies.size(); ++j) {
        restoring += restores_frequency(r.supplies[j]) ? 1 : 0;
        total += r.load[j];
    }
    std::vector<double> inj(r.supplies.size());
    for (std::size_t j = 0; j < inj.size(); ++j) {
        inj[j] = (restores_frequency(r.supplies[j]) ? total / static_cast<double>(restoring) : 0.0) - r.load[j];
    }
    return inj;
}

/// Power balance mismatch at every bus for per-bus phases theta.
inline std::vector<double> balance_mismatch(const Network& net, const std::vector<double>& theta,
                                            const std::vector<double>& inj) {
    std::vector<double> f = inj;
    for (std::size_t k = 0; k < net.line_count(); ++k) {
        const std::size_t i = net.from_index(k), j = net.to_index(k);
        const double p = net.line(k).susceptance * std::sin(theta[i] - theta[j]);
        f[i] -= p;
        f[j] += p;
    }
    return f;
}

/// Brute-force equilibrium oracle: damped Gauss-Newton with a finite-difference
/// Jacobian from many uniform random phase starts. Returns the per-line angles
/// of the converged solution with the smallest max |eta| (wrapped to (-pi, pi]).
inline std::optional<std::vector<double>> brute_force_equilibrium(const Network& net, const std::vector<double>& inj,
                                                                  int starts = 200, std::uint64_t seed = 99) {
    const std::size_t n = net.bus_count();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    std::optional<std::vector<double>> best;
    double best_max = INFINITY;
    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s = std::max(s, std::abs(x));
        return s;
    };
    for (int s = 0; s < starts; ++s) {
        std::vector<double> th(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) th[i] = s == 0 ? 0.0 : d(rng);
        for (int it = 0; it < 200; ++it) {
            const auto f = balance_mismatch(net, th, inj);
            if (norm(f) < 1e-12) break;
            // reduced system: drop bus 0 equation and unknown
            const std::size_t m = n - 1;
            Eigen::MatrixXd jac(m, m);
            Eigen::VectorXd rhs(m);
            for (std::size_t c = 0; c < m; ++c) {
                auto tp = th;
                const double h = 1e-7;
                tp[c + 1] += h;
                const auto fp = balance_mismatch(net, tp, inj);
                for (std::size_t r = 0; r < m; ++r) jac(r, c) = (fp[r + 1] - f[r + 1]) / h;
            }
            for (std::size_t r = 0; r < m; ++r) rhs(r) = -f[r + 1];
            const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(rhs);
            double lambda = 1.0;
            const double f0 = norm(f);
            for (int ls = 0; ls < 30; ++ls) {
                auto tn = th;
                for (std::size_t c = 0; c < m; ++c) tn[c + 1] += lambda * step(c);
                if (norm(balance_mismatch(net, tn, inj)) < f0) {
                    th = tn;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if (norm(balance_mismatch(net, th, inj)) > 1e-10) continue;
        std::vector<double> eta(net.line_count());
        for (std::size_t k = 0; k < eta.size(); ++k) {
            eta[k] = std::remainder(th[net.from_index(k)] - th[net.to_index(k)], 2.0 * M_PI);
        }
        const double mx = norm(eta);
        if (mx < best_max - 1e-9) {
            best_max = mx;
            best = eta;
        }
    }
    return best;
}

/// Hybrid-semantics properties of a hysteresis trajectory. Returns an empty
/// string when every property holds, otherwise a description of the first failure.
inline std::string hybrid_invariant_failure(const Plant& plant, const Trajectory& traj) {
    const double tol = traj.config.event_tol;
    auto in_c = [&](const HystereticLoad& h, double w, int s) {
        if (s == 0) return std::abs(w) <= h.omega1 + tol;
        return s * w >= h.omega0 - tol;
    };
    std::size_t jumps = 0;
    for (const Event& e : traj.events) jumps += (e.kind == EventKind::JumpOn || e.kind == EventKind::JumpOff) ? 1 : 0;
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const HybridState& x = traj.samples[i].state;
        for (std::size_t j = 0; j < plant.loads.size(); ++j) {
            const auto* h = std::get_if<HystereticLoad>(&plant.loads[j]);
            if (!h) {
                if (x.sigma[j] != 0) return "sigma on a bus without hysteretic load";
                continue;
            }
            if (!in_c(*h, x.continuous.omega[j], x.sigma[j])) {
                return "sigma outside I(omega) at t = " + std::to_string(x.t);
            }
        }
        if (i == 0) continue;
        const HybridState& p = traj.samples[i - 1].state;
        if (x.t < p.t || x.ell < p.ell || (x.t == p.t && x.ell == p.ell)) {
            return "samples do not form a hybrid time domain at t = " + std::to_string(x.t);
        }
        if (x.t == p.t) {
            if (x.ell != p.ell + 1) return "jump counter skipped at t = " + std::to_string(x.t);
            if (!(x.continuous == p.continuous)) return "continuous state changed across a jump";
            std::size_t changed = 0;
            for (std::size_t j = 0; j < x.sigma.size(); ++j) {
                if (x.sigma[j] == p.sigma[j]) continue;
                ++changed;
                const auto& h = std::get<HystereticLoad>(plant.loads[j]);
                if (!hysteresis_jump_set(h, p.continuous.omega[j], p.sigma[j], 2 * tol + 1e-12)) {
                    return "jump from outside the jump set at t = " + std::to_string(x.t);
                }
                if (hysteresis_jump_set(h, x.continuous.omega[j], x.sigma[j])) {
                    return "jump map landed in D at t = " + std::to_string(x.t);
                }
            }
            if (changed != 1) return "a jump changed " + std::to_string(changed) + " sigmas";
        }
    }
    if (!traj.samples.empty() && traj.samples.back().state.ell - traj.samples.front().state.ell != jumps) {
        return "jump counter does not match the event log";
    }
    return {};
}

/// Random plant with hysteretic loads for property tests: 2-5 buses, bus 0
/// restoring, a random step, thresholds small enough to be crossed.
inline Plant random_hybrid_plant(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> nb(2, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto rn = random_network(rng, nb(rng), 0.0, 2.0, 8.0);
    Plant p;
    p.network = rn.network;
    p.supplies = rn.supplies;
    p.loads.assign(p.network.bus_count(), NoLoad{});
    bool any = false;
    for (std::size_t j = 0; j < p.loads.size(); ++j) {
        if (u(rng) < 0.6 || (!any && j + 1 == p.loads.size())) {
            const double w1 = 0.005 + 0.03 * u(rng);
            p.loads[j] = HystereticLoad{0.05 + 0.2 * u(rng), w1, (0.1 + 0.5 * u(rng)) * w1};
            any = true;
        }
    }
    const std::size_t bus = std::uniform_int_distribution<std::size_t>(0, p.loads.size() - 1)(rng);
    p.disturbances = {{bus, 0.5 + u(rng), (u(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + 0.3 * u(rng))}};
    return p;
}

}  // namespace gridswitch::testing
