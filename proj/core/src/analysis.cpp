#include "gridswitch/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "gridswitch/error.hpp"

namespace gridswitch {

namespace {

/// Net injection sum_out p - sum_in p at every bus for bus phases theta.
Eigen::VectorXd injections(const Network& net, const Eigen::VectorXd& theta) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.bus_count()));
    for (std::size_t k = 0; k < net.line_count(); ++k) {
        const auto a = static_cast<Eigen::Index>(net.from_index(k));
        const auto b = static_cast<Eigen::Index>(net.to_index(k));
        const double p = net.line(k).susceptance * std::sin(theta[a] - theta[b]);
        f[a] += p;
        f[b] -= p;
    }
    return f;
}

/// Jacobian of injections with the reference phase (bus 0) removed.
Eigen::MatrixXd reduced_jacobian(const Network& net, const Eigen::VectorXd& theta) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < net.line_count(); ++k) {
        const auto a = static_cast<Eigen::Index>(net.from_index(k));
        const auto b = static_cast<Eigen::Index>(net.to_index(k));
        const double c = net.line(k).susceptance * std::cos(theta[a] - theta[b]);
        j(a, a) += c;
        j(a, b) -= c;
        j(b, a) -= c;
        j(b, b) += c;
    }
    return j.bottomRightCorner(n - 1, n - 1);
}

double wrap_angle(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    x = std::remainder(x, two_pi);
    return x <= -std::numbers::pi ? x + two_pi : x;
}

std::optional<Eigen::VectorXd> newton(const Network& net, const Eigen::VectorXd& target, Eigen::VectorXd theta,
                                      const EquilibriumOptions& opt) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    theta[0] = 0.0;
    auto resid = [&](const Eigen::VectorXd& th) { return Eigen::VectorXd(injections(net, th) - target); };
    Eigen::VectorXd r = resid(theta);
    double norm = r.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_iterations && norm > opt.tolerance; ++it) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(reduced_jacobian(net, theta));
        if (std::abs(lu.determinant()) < 1e-14) return std::nullopt;
        const Eigen::VectorXd step = lu.solve(r.tail(n - 1));
        if (!step.allFinite()) return std::nullopt;
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            Eigen::VectorXd trial = theta;
            trial.tail(n - 1) -= lambda * step;
            const Eigen::VectorXd rt = resid(trial);
            const double nt = rt.lpNorm<Eigen::Infinity>();
            if (nt < norm) {
                theta = trial;
                r = rt;
                norm = nt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) return std::nullopt;
    }
    if (norm > opt.tolerance) return std::nullopt;
    return theta;
}

}  // namespace

EquilibriumPoint solve_equilibrium(const Network& net, std::span<const SupplyModel> supplies,
                                   std::span<const double> load, const EquilibriumOptions& opt) {
    const std::size_t n = net.bus_count();
    if (supplies.size() != n || load.size() != n) {
        throw Error(Errc::DimensionMismatch, "equilibrium needs one supply and one load per bus");
    }
    std::vector<double> weight(n, 0.0);
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!restores_frequency(supplies[j])) continue;
        weight[j] = opt.participation.empty() ? 1.0 : opt.participation.at(j);
        if (!(weight[j] >= 0.0)) throw Error(Errc::InvalidArgument, "participation weights must be >= 0");
        weight_sum += weight[j];
    }
    if (!(weight_sum > 0.0)) {
        throw Error(Errc::NonzeroFrequencyRequired,
                    "no frequency-restoring supply with positive participation; equilibria need omega != 0");
    }

    double total = 0.0;
    for (double p : load) total += p;
    EquilibriumPoint eq;
    eq.load.assign(load.begin(), load.end());
    eq.omega_star.assign(n, 0.0);
    eq.s_star.resize(n);
    Eigen::VectorXd target(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        eq.s_star[j] = total * weight[j] / weight_sum;
        target[static_cast<Eigen::Index>(j)] = eq.s_star[j] - load[j];
    }

    std::optional<Eigen::VectorXd> best;
    double best_angle = std::numeric_limits<double>::infinity();
    auto consider = [&](const Eigen::VectorXd& seed) {
        auto theta = newton(net, target, seed, opt);
        if (!theta) return;
        double worst = 0.0;
        for (std::size_t k = 0; k < net.line_count(); ++k) {
            const double eta = wrap_angle((*theta)[static_cast<Eigen::Index>(net.from_index(k))] -
                                          (*theta)[static_cast<Eigen::Index>(net.to_index(k))]);
            worst = std::max(worst, std::abs(eta));
        }
        if (worst < best_angle) {
            best_angle = worst;
            best = theta;
        }
    };

    const auto nn = static_cast<Eigen::Index>(n);
    if (n == 1) {
        if (std::abs(target[0]) > opt.tolerance) throw Error(Errc::NoEquilibriumFound, "single bus is unbalanced");
        best = Eigen::VectorXd::Zero(1);
    } else {
        consider(Eigen::VectorXd::Zero(nn));
        // DC power flow: linearized injections L theta = P
        Eigen::MatrixXd lap = reduced_jacobian(net, Eigen::VectorXd::Zero(nn));
        Eigen::VectorXd dc = Eigen::VectorXd::Zero(nn);
        dc.tail(nn - 1) = lap.ldlt().solve(target.tail(nn - 1));
        consider(dc);
        std::mt19937_64 rng(opt.seed);
        std::uniform_real_distribution<double> uni(-std::numbers::pi / 2, std::numbers::pi / 2);
        for (std::size_t s = 0; s < opt.random_seeds; ++s) {
            Eigen::VectorXd th(nn);
            for (Eigen::Index i = 0; i < nn; ++i) th[i] = uni(rng);
            consider(th);
        }
    }
    if (!best) {
        throw Error(Errc::NoEquilibriumFound, "Newton failed from every seed; line capacities may be too small");
    }

    eq.eta_star.resize(net.line_count());
    eq.p_star.resize(net.line_count());
    for (std::size_t k = 0; k < net.line_count(); ++k) {
        eq.eta_star[k] = wrap_angle((*best)[static_cast<Eigen::Index>(net.from_index(k))] -
                                    (*best)[static_cast<Eigen::Index>(net.to_index(k))]);
        eq.p_star[k] = net.line(k).susceptance * std::sin(eq.eta_star[k]);
    }
    eq.x_s_star.resize(n);
    for (std::size_t j = 0; j < n; ++j) eq.x_s_star[j] = rest_state(supplies[j], eq.s_star[j]);

    // residual of the full dynamics at the point
    ContinuousState cs{eq.eta_star, eq.omega_star, eq.x_s_star};
    std::vector<double> s(n), d(n, 0.0);
    double res = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const SupplyFlow f = supply_flow(supplies[j], eq.x_s_star[j], 0.0);
        s[j] = f.s;
        for (double v : f.x_dot) res = std::max(res, std::abs(v));
        res = std::max(res, std::abs(f.s - eq.s_star[j]));
    }
    const SwingDerivative sd = swing_rhs(net, cs, load, s, d);
    for (double v : sd.omega_dot) res = std::max(res, std::abs(v));
    for (double v : sd.eta_dot) res = std::max(res, std::abs(v));
    eq.residual = res;
    return eq;
}

EquilibriumPoint solve_equilibrium(const Plant& plant, const EquilibriumOptions& options) {
    const auto load = plant.final_load();
    return solve_equilibrium(plant.network, plant.supplies, load, options);
}

HybridState equilibrium_state(const EquilibriumPoint& eq, double t) {
    HybridState s;
    s.t = t;
    s.continuous = {eq.eta_star, eq.omega_star, eq.x_s_star};
    s.sigma.assign(eq.omega_star.size(), 0);
    return s;
}

std::vector<bool> security_check(const EquilibriumPoint& eq) {
    std::vector<bool> ok;
    ok.reserve(eq.eta_star.size());
    for (double eta : eq.eta_star) ok.push_back(std::abs(eta) < std::numbers::pi / 2);
    return ok;
}

StorageSet derive_storages(std::span<const SupplyModel> supplies, const EquilibriumPoint& eq, double epsilon) {
    StorageSet out(supplies.size());
    for (std::size_t j = 0; j < supplies.size(); ++j) {
        if (!is_linear(supplies[j])) continue;
        try {
            StorageFunction s = derive_storage(supplies[j], epsilon);
            const auto& c = eq.x_s_star.at(j);
            s.center = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
            out[j] = std::move(s);
        } catch (const Error& e) {
            if (e.code() != Errc::StorageSearchFailed) throw;
        }
    }
    return out;
}

bool complete(const StorageSet& storages) noexcept {
    return std::all_of(storages.begin(), storages.end(), [](const auto& s) { return s.has_value(); });
}

LyapunovValue lyapunov_value(const Network& net, const HybridState& state,
                             const std::optional<EquilibriumPoint>& eq, const StorageSet* storages) {
    if (!eq) throw Error(Errc::MissingEquilibrium, "Lyapunov value needs an equilibrium");
    const ContinuousState& c = state.continuous;
    if (c.omega.size() != net.bus_count() || c.eta.size() != net.line_count() ||
        eq->eta_star.size() != net.line_count()) {
        throw Error(Errc::DimensionMismatch, "state or equilibrium does not match the network");
    }
    LyapunovValue v;
    for (std::size_t j = 0; j < net.bus_count(); ++j) v.v_f += 0.5 * net.bus(j).inertia * c.omega[j] * c.omega[j];
    for (std::size_t k = 0; k < net.line_count(); ++k) {
        const double e = c.eta[k], es = eq->eta_star[k];
        v.v_p += net.line(k).susceptance * ((std::cos(es) - std::cos(e)) - std::sin(es) * (e - es));
    }
    v.total = v.v_f + v.v_p;
    if (storages) {
        v.v_s.assign(net.bus_count(), 0.0);
        for (std::size_t j = 0; j < storages->size() && j < net.bus_count(); ++j) {
            if ((*storages)[j]) v.v_s[j] = (*(*storages)[j])(c.x_s.at(j));
            v.total += v.v_s[j];
        }
    }
    return v;
}

std::vector<LyapunovValue> lyapunov_series(const Network& net, const Trajectory& traj, const EquilibriumPoint& eq,
                                           const StorageSet* storages) {
    std::vector<LyapunovValue> out;
    out.reserve(traj.samples.size());
    const std::optional<EquilibriumPoint> e = eq;
    for (const Sample& s : traj.samples) out.push_back(lyapunov_value(net, s.state, e, storages));
    return out;
}

const char* to_string(MonitorMode mode) noexcept {
    return mode == MonitorMode::Storage ? "storage" : "supply-rate";
}

DissipationReport verify_dissipation(const Network& net, const Trajectory& traj, const EquilibriumPoint& eq,
                                     const StorageSet* storages) {
    DissipationReport rep;
    const bool full = storages && storages->size() == net.bus_count() && complete(*storages);
    rep.mode = full ? MonitorMode::Storage : MonitorMode::SupplyRate;
    const auto values = lyapunov_series(net, traj, eq, full ? storages : nullptr);
    const std::size_t n = net.bus_count();

    auto supply_work = [&](const Sample& s) {
        double w = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            w += s.work_supply[j] - eq.s_star[j] * s.work_omega[j] - s.work_demand[j];
        }
        return w;
    };

    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        const HybridState& a = traj.samples[i - 1].state;
        const HybridState& b = traj.samples[i].state;
        const double dv = values[i].total - values[i - 1].total;
        if (b.ell != a.ell) {
            ++rep.jumps;
            rep.max_jump_change = std::max(rep.max_jump_change, std::abs(dv));
            continue;
        }
        if (!(b.t > a.t)) continue;
        ++rep.flow_intervals;
        double increase = dv;
        if (!full) increase -= supply_work(traj.samples[i]) - supply_work(traj.samples[i - 1]);
        const double tol = 1e-8 + 1e-6 * (b.t - a.t);
        if (increase > rep.max_flow_increase) {
            rep.max_flow_increase = increase;
            rep.worst_time = b.t;
        }
        if (increase > tol) ++rep.flow_violations;
    }
    return rep;
}

std::vector<OvershootMetrics> overshoot_metrics(const Trajectory& traj, double band) {
    std::vector<OvershootMetrics> out;
    if (traj.samples.empty()) return out;
    const std::size_t n = traj.samples.front().state.continuous.omega.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < n; ++j) {
        OvershootMetrics m;
        m.bus = j;
        m.settling_time = traj.samples.front().state.t;
        m.last_load_activity = nan;
        bool inside = true;
        for (const Sample& s : traj.samples) {
            const double w = std::abs(s.state.continuous.omega[j]);
            if (w > m.peak_abs_omega) {
                m.peak_abs_omega = w;
                m.peak_time = s.state.t;
            }
            if (w > band) {
                inside = false;
            } else if (!inside) {
                inside = true;
                m.settling_time = s.state.t;
            }
            if (s.demand[j] != 0.0) m.last_load_activity = s.state.t;
        }
        if (!inside) m.settling_time = nan;
        m.load_off_at_end = traj.samples.back().demand[j] == 0.0;
        out.push_back(m);
    }
    return out;
}

}  // namespace gridswitch
