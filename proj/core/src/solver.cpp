#include "gridswitch/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "gridswitch/error.hpp"

namespace gridswitch {

std::vector<double> Plant::load_at(double t) const {
    std::vector<double> load = network.base_loads();
    for (const Disturbance& d : disturbances) {
        if (d.time <= t) load.at(d.bus) += d.magnitude;
    }
    return load;
}

std::vector<double> Plant::final_load() const {
    std::vector<double> load = network.base_loads();
    for (const Disturbance& d : disturbances) load.at(d.bus) += d.magnitude;
    return load;
}

void validate(const Plant& plant) {
    const std::size_t n = plant.network.bus_count();
    if (plant.supplies.size() != n || plant.loads.size() != n) {
        throw Error(Errc::DimensionMismatch, "plant needs one supply and one load entry per bus");
    }
    for (const SupplyModel& s : plant.supplies) validate(s);
    for (const LoadControl& l : plant.loads) validate(l);
    for (const Disturbance& d : plant.disturbances) {
        if (d.bus >= n) throw Error(Errc::DanglingReference, "disturbance on a missing bus");
        if (!(d.time >= 0.0) || !std::isfinite(d.time) || !std::isfinite(d.magnitude)) {
            throw Error(Errc::InvalidArgument, "disturbance needs a finite time >= 0 and finite magnitude");
        }
    }
}

void SolverConfig::validate() const {
    if (!(dt > 0.0) || !(event_tol > 0.0) || !(t_end > 0.0) || !(output_dt > 0.0) ||
        !(chatter_window > 0.0) || !(max_angle > 0.0) || !(max_state_norm > 0.0)) {
        throw Error(Errc::InvalidArgument, "dt, event_tol, t_end, output_dt and guards must be positive");
    }
    if (!std::isfinite(dt) || !std::isfinite(t_end)) {
        throw Error(Errc::InvalidArgument, "dt and t_end must be finite");
    }
}

const char* to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::JumpOn: return "jump-on";
        case EventKind::JumpOff: return "jump-off";
        case EventKind::FilippovCross: return "filippov-cross";
        case EventKind::SlidingEnter: return "sliding-enter";
        case EventKind::SlidingExit: return "sliding-exit";
    }
    return "unknown";
}

EventLocation locate_event(const std::function<double(double)>& margin, double h, double tol,
                           double time_resolution, int max_iterations) {
    double a = 0.0, b = h;
    double fa = margin(a), fb = margin(b);
    if (!(fa >= 0.0) || !(fb < 0.0)) {
        throw Error(Errc::NoSignChange, "margin does not change sign over the step");
    }
    // weighted copies drive the interpolation, true values the stopping test
    double wa = fa, wb = fb;
    int side = 0;
    for (int it = 0; it < max_iterations; ++it) {
        if ((fa <= tol && -fb <= tol) || b - a <= time_resolution) {
            return {a, b, fa, fb, it};
        }
        double c = b - wb * (b - a) / (wb - wa);
        if (!(c > a && c < b) || it % 8 == 7) c = 0.5 * (a + b);
        const double fc = margin(c);
        if (fc >= 0.0) {
            a = c;
            fa = wa = fc;
            if (side == 1) wb *= 0.5;
            side = 1;
        } else {
            b = c;
            fb = wb = fc;
            if (side == -1) wa *= 0.5;
            side = -1;
        }
    }
    if ((fa <= tol && -fb <= tol) || b - a <= time_resolution) {
        return {a, b, fa, fb, max_iterations};
    }
    throw Error(Errc::MaxBisectionsExceeded, "event localization did not converge");
}

double equivalent_control(const SwitchingLoad& load, Surface surface, double free_power) {
    const bool attracting = surface == Surface::Upper ? (free_power > 0.0 && free_power < load.d_up)
                                                      : (free_power < 0.0 && free_power > load.d_down);
    if (!attracting) {
        throw Error(Errc::NotAttracting, "vector fields on both sides do not point toward the surface");
    }
    return free_power;
}

namespace {

enum class Slide { None, Upper, Lower };

/// Discrete configuration held constant over a step.
struct Discrete {
    std::vector<int> sigma;
    std::vector<int> branch;
    std::vector<Slide> slide;
};

int branch_of(const SwitchingLoad& l, double omega) {
    if (omega > l.omega_up) return 1;
    if (omega > l.omega_down) return 0;
    return -1;
}

enum class MarginKind { HystOnPos, HystOnNeg, HystOff, UpFromBelow, LowFromAbove, UpFromAbove,
                        LowFromBelow, SlideToOff, SlideToOn };

struct Margin {
    std::size_t bus;
    MarginKind kind;
    double value;
};

bool is_jump(MarginKind k) {
    return k == MarginKind::HystOnPos || k == MarginKind::HystOnNeg || k == MarginKind::HystOff;
}

/// Flat state y = [eta, omega, x_s..., work_supply, work_omega, work_demand].
class System {
public:
    System(const Plant& plant, const SolverConfig& cfg) : plant_(plant), cfg_(cfg) {
        n_ = plant.network.bus_count();
        l_ = plant.network.line_count();
        supplies_.reserve(n_);
        std::size_t off = l_ + n_;
        for (const SupplyModel& s : plant.supplies) {
            supplies_.push_back(simulation_form(s));
            xoff_.push_back(off);
            off += order(supplies_.back());
        }
        xend_ = off;
        dim_ = off + 3 * n_;
        demand_.assign(n_, 0.0);
        supply_.assign(n_, 0.0);
        for (int i = 0; i < 4; ++i) k_[i].resize(static_cast<Eigen::Index>(dim_));
        tmp_.resize(static_cast<Eigen::Index>(dim_));
        tmp_dy_.resize(static_cast<Eigen::Index>(dim_));
        inertia_.reserve(n_);
        for (const Bus& b : plant.network.buses()) inertia_.push_back(b.inertia);
    }

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t buses() const { return n_; }
    [[nodiscard]] std::size_t lines() const { return l_; }
    [[nodiscard]] std::size_t omega_index(std::size_t j) const { return l_ + j; }
    [[nodiscard]] const std::vector<double>& demand() const { return demand_; }
    [[nodiscard]] const std::vector<double>& supply() const { return supply_; }

    Eigen::VectorXd pack(const HybridState& s) const {
        const ContinuousState& c = s.continuous;
        if (c.eta.size() != l_ || c.omega.size() != n_ || c.x_s.size() != n_) {
            throw Error(Errc::DimensionMismatch, "initial state does not match the plant");
        }
        Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
        for (std::size_t k = 0; k < l_; ++k) y[idx(k)] = c.eta[k];
        for (std::size_t j = 0; j < n_; ++j) {
            y[idx(l_ + j)] = c.omega[j];
            if (c.x_s[j].size() != order(supplies_[j])) {
                throw Error(Errc::DimensionMismatch, "supply state of bus " + std::to_string(j) +
                                                         " has the wrong dimension");
            }
            for (std::size_t i = 0; i < c.x_s[j].size(); ++i) y[idx(xoff_[j] + i)] = c.x_s[j][i];
        }
        return y;
    }

    ContinuousState unpack(const Eigen::VectorXd& y) const {
        ContinuousState c;
        c.eta.assign(y.data(), y.data() + l_);
        c.omega.assign(y.data() + l_, y.data() + l_ + n_);
        c.x_s.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            const std::size_t end = j + 1 < n_ ? xoff_[j + 1] : xend_;
            c.x_s[j].assign(y.data() + xoff_[j], y.data() + end);
        }
        return c;
    }

    /// Vector field; leaves demand and supply of the evaluation point in the workspace.
    void rhs(const Eigen::VectorXd& y, const std::vector<double>& load, const Discrete& d,
             Eigen::VectorXd& dy) {
        const double* py = y.data();
        double* pd = dy.data();
        for (std::size_t j = 0; j < n_; ++j) {
            const std::size_t ord = order(supplies_[j]);
            supply_[j] = supply_flow_into(supplies_[j], std::span<const double>(py + xoff_[j], ord),
                                          py[l_ + j], std::span<double>(pd + xoff_[j], ord));
            demand_[j] = 0.0;
            if (d.slide[j] != Slide::None) continue;
            if (const auto* h = std::get_if<HystereticLoad>(&plant_.loads[j])) {
                demand_[j] = hysteretic_demand(*h, d.sigma[j]);
            } else if (const auto* s = std::get_if<SwitchingLoad>(&plant_.loads[j])) {
                demand_[j] = d.branch[j] > 0 ? s->d_up : (d.branch[j] < 0 ? s->d_down : 0.0);
            }
        }
        swing_rhs_into(plant_.network, std::span<const double>(py, l_), std::span<const double>(py + l_, n_),
                       load, supply_, demand_, std::span<double>(pd, l_), std::span<double>(pd + l_, n_));
        const std::size_t q = xend_;
        for (std::size_t j = 0; j < n_; ++j) {
            if (d.slide[j] != Slide::None) {
                demand_[j] = inertia_[j] * pd[l_ + j];
                pd[l_ + j] = 0.0;
            }
            const double w = py[l_ + j];
            pd[q + j] = w * supply_[j];
            pd[q + n_ + j] = w;
            pd[q + 2 * n_ + j] = w * demand_[j];
        }
    }

    /// Classical RK4; `acc` receives max |omega_dot| over the four stages.
    void step(const Eigen::VectorXd& y, double h, const std::vector<double>& load, const Discrete& d,
              Eigen::VectorXd& out, std::vector<double>& acc) {
        std::fill(acc.begin(), acc.end(), 0.0);
        rhs(y, load, d, k_[0]);
        tmp_ = y + 0.5 * h * k_[0];
        rhs(tmp_, load, d, k_[1]);
        tmp_ = y + 0.5 * h * k_[1];
        rhs(tmp_, load, d, k_[2]);
        tmp_ = y + h * k_[2];
        rhs(tmp_, load, d, k_[3]);
        out = y + (h / 6.0) * (k_[0] + 2.0 * k_[1] + 2.0 * k_[2] + k_[3]);
        for (std::size_t j = 0; j < n_; ++j) {
            const auto i = idx(l_ + j);
            for (const auto& k : k_) acc[j] = std::max(acc[j], std::abs(k[i]));
        }
    }

    void margins(const Eigen::VectorXd& y, const std::vector<double>& load, const Discrete& d,
                 bool localize_switching, std::vector<Margin>& out) {
        out.clear();
        bool need_rhs = false;
        for (std::size_t j = 0; j < n_; ++j) {
            if (d.slide[j] != Slide::None) need_rhs = true;
        }
        if (need_rhs) rhs(y, load, d, tmp_dy_);
        for (std::size_t j = 0; j < n_; ++j) {
            const double w = y[idx(l_ + j)];
            if (const auto* h = std::get_if<HystereticLoad>(&plant_.loads[j])) {
                if (d.sigma[j] == 0) {
                    out.push_back({j, MarginKind::HystOnPos, h->omega1 - w});
                    out.push_back({j, MarginKind::HystOnNeg, h->omega1 + w});
                } else if (d.sigma[j] > 0) {
                    out.push_back({j, MarginKind::HystOff, w - h->omega0});
                } else {
                    out.push_back({j, MarginKind::HystOff, -h->omega0 - w});
                }
            } else if (const auto* s = std::get_if<SwitchingLoad>(&plant_.loads[j])) {
                if (!localize_switching) continue;
                if (d.slide[j] == Slide::Upper) {
                    out.push_back({j, MarginKind::SlideToOff, demand_[j]});
                    out.push_back({j, MarginKind::SlideToOn, s->d_up - demand_[j]});
                } else if (d.slide[j] == Slide::Lower) {
                    out.push_back({j, MarginKind::SlideToOff, -demand_[j]});
                    out.push_back({j, MarginKind::SlideToOn, demand_[j] - s->d_down});
                } else if (d.branch[j] == 0) {
                    out.push_back({j, MarginKind::UpFromBelow, s->omega_up - w});
                    out.push_back({j, MarginKind::LowFromAbove, w - s->omega_down});
                } else if (d.branch[j] > 0) {
                    out.push_back({j, MarginKind::UpFromAbove, w - s->omega_up});
                } else {
                    out.push_back({j, MarginKind::LowFromBelow, s->omega_down - w});
                }
            }
        }
    }

    /// M_j omega_dot_j at y with zero controllable demand on bus j.
    double free_power(const Eigen::VectorXd& y, const std::vector<double>& load, const Discrete& d,
                      std::size_t j) {
        Discrete probe = d;
        probe.slide[j] = Slide::Upper;
        rhs(y, load, probe, tmp_dy_);
        return demand_[j];
    }

    [[nodiscard]] bool out_of_bounds(const Eigen::VectorXd& y) const {
        for (std::size_t k = 0; k < xend_; ++k) {
            const double v = y[idx(k)];
            if (!std::isfinite(v) || std::abs(v) > cfg_.max_state_norm) return true;
        }
        for (std::size_t k = 0; k < l_; ++k) {
            if (std::abs(y[idx(k)]) > cfg_.max_angle) return true;
        }
        return false;
    }

    Sample sample(const Eigen::VectorXd& y, double t, std::size_t ell, const std::vector<double>& load,
                  const Discrete& d) {
        rhs(y, load, d, tmp_dy_);
        Sample s;
        s.state.t = t;
        s.state.ell = ell;
        s.state.continuous = unpack(y);
        s.state.sigma = d.sigma;
        s.demand = demand_;
        s.supply = supply_;
        const double* q = y.data() + xend_;
        s.work_supply.assign(q, q + n_);
        s.work_omega.assign(q + n_, q + 2 * n_);
        s.work_demand.assign(q + 2 * n_, q + 3 * n_);
        return s;
    }

private:
    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

    const Plant& plant_;
    const SolverConfig& cfg_;
    std::vector<SupplyModel> supplies_;
    std::vector<std::size_t> xoff_;
    std::vector<double> inertia_;
    std::size_t n_ = 0, l_ = 0, xend_ = 0, dim_ = 0;
    std::vector<double> demand_, supply_;
    Eigen::VectorXd k_[4], tmp_, tmp_dy_;
};

Discrete initial_discrete(const Plant& plant, const HybridState& s) {
    const std::size_t n = plant.network.bus_count();
    Discrete d;
    d.sigma.assign(n, 0);
    d.branch.assign(n, 0);
    d.slide.assign(n, Slide::None);
    if (!s.sigma.empty() && s.sigma.size() != n) {
        throw Error(Errc::DimensionMismatch, "sigma needs one entry per bus");
    }
    for (std::size_t j = 0; j < n; ++j) {
        const int sig = s.sigma.empty() ? 0 : s.sigma[j];
        const double w = s.continuous.omega.at(j);
        if (const auto* h = std::get_if<HystereticLoad>(&plant.loads[j])) {
            if (!in_flow_set(*h, w, sig)) {
                throw Error(Errc::InvalidInitialSigma,
                            "sigma(0) = " + std::to_string(sig) + " is outside I(omega(0)) on bus " +
                                std::to_string(plant.network.bus(j).id));
            }
            d.sigma[j] = sig;
        } else if (sig != 0) {
            throw Error(Errc::InvalidInitialSigma, "sigma must be 0 on buses without a hysteretic load");
        }
        if (const auto* sw = std::get_if<SwitchingLoad>(&plant.loads[j])) d.branch[j] = branch_of(*sw, w);
    }
    return d;
}

}  // namespace

ContinuousState integrate_flow(const Plant& plant, const HybridState& state, double dt) {
    validate(plant);
    if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
    SolverConfig cfg;
    System sys(plant, cfg);
    const Discrete d = initial_discrete(plant, state);
    const Eigen::VectorXd y = sys.pack(state);
    const auto load = plant.load_at(state.t);
    Eigen::VectorXd y1(y.size());
    std::vector<double> acc(sys.buses());
    sys.step(y, dt, load, d, y1, acc);
    std::vector<Margin> ms;
    sys.margins(y1, load, d, true, ms);
    for (const Margin& m : ms) {
        if (m.value < 0.0) {
            throw Error(Errc::StepRejected, "threshold crossed on bus " +
                                                std::to_string(plant.network.bus(m.bus).id) + " inside the step");
        }
    }
    return sys.unpack(y1);
}

Trajectory simulate(const Plant& plant, const SolverConfig& cfg, const HybridState& initial) {
    validate(plant);
    cfg.validate();
    for (const LoadControl& l : plant.loads) {
        if (cfg.mode == SolverMode::Filippov && std::holds_alternative<HystereticLoad>(l)) {
            throw Error(Errc::InvalidArgument, "hysteretic loads need hybrid mode");
        }
        if (cfg.mode == SolverMode::Hybrid && std::holds_alternative<SwitchingLoad>(l)) {
            throw Error(Errc::InvalidArgument, "switching loads need filippov mode");
        }
    }

    System sys(plant, cfg);
    const std::size_t n = sys.buses();
    Discrete d = initial_discrete(plant, initial);
    Eigen::VectorXd y = sys.pack(initial);
    Eigen::VectorXd y1(y.size()), y_lo(y.size()), y_hi(y.size());

    Trajectory traj;
    traj.config = cfg;
    traj.max_abs_omega_dot.assign(n, 0.0);
    std::vector<double> acc(n), scratch(n);
    auto merge_acc = [&] {
        for (std::size_t j = 0; j < n; ++j) {
            traj.max_abs_omega_dot[j] = std::max(traj.max_abs_omega_dot[j], acc[j]);
        }
    };

    double t = initial.t;
    std::size_t ell = initial.ell;
    const bool strict = cfg.mode == SolverMode::Filippov && cfg.sliding == SlidingMode::StrictEvent;

    auto push_sample = [&](Sample s) {
        if (!traj.samples.empty()) {
            const HybridState& last = traj.samples.back().state;
            if (last.t == s.state.t && last.ell == s.state.ell) {
                traj.samples.back() = std::move(s);
                return;
            }
        }
        traj.samples.push_back(std::move(s));
    };
    auto log_event = [&](std::size_t bus, EventKind kind, double omega, std::string detail) {
        traj.events.push_back({t, ell, bus, kind, omega, std::move(detail)});
    };

    std::vector<double> load = plant.load_at(t);
    push_sample(sys.sample(y, t, ell, load, d));

    // initial states sitting exactly on a jump threshold jump before flowing
    for (std::size_t j = 0; j < n; ++j) {
        const auto* h = std::get_if<HystereticLoad>(&plant.loads[j]);
        if (!h) continue;
        const double w = y[static_cast<Eigen::Index>(sys.omega_index(j))];
        if (hysteresis_jump_set(*h, w, d.sigma[j])) {
            const int next = hysteresis_jump(*h, w, d.sigma[j]);
            const EventKind kind = next != 0 ? EventKind::JumpOn : EventKind::JumpOff;
            d.sigma[j] = next;
            ++ell;
            log_event(j, kind, w, "initial state in jump set");
            push_sample(sys.sample(y, t, ell, load, d));
        }
    }

    std::vector<double> dist_times;
    for (const Disturbance& dist : plant.disturbances) {
        if (dist.time > t) dist_times.push_back(dist.time);
    }
    std::sort(dist_times.begin(), dist_times.end());
    dist_times.erase(std::unique(dist_times.begin(), dist_times.end()), dist_times.end());

    const double t0 = t;
    const auto total_steps = static_cast<std::size_t>(std::ceil((cfg.t_end - t0) / cfg.dt - 1e-9));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.output_dt / cfg.dt)));
    std::vector<Margin> ms, ms_start;

    auto blowup = [&](const char* where) {
        traj.status = RunStatus::Blowup;
        traj.status_detail = std::string("state left the guard region ") + where + " at t = " + std::to_string(t);
        push_sample(sys.sample(y, t, ell, load, d));
    };

    for (std::size_t k = 0; k < total_steps; ++k) {
        const double t_target = std::min(t0 + static_cast<double>(k + 1) * cfg.dt, cfg.t_end);

        if (strict) {
            // sampled relay: the branch follows the switching map at the step start
            for (std::size_t j = 0; j < n; ++j) {
                const auto* sw = std::get_if<SwitchingLoad>(&plant.loads[j]);
                if (!sw) continue;
                const double w = y[static_cast<Eigen::Index>(sys.omega_index(j))];
                const int b = branch_of(*sw, w);
                if (b != d.branch[j]) {
                    d.branch[j] = b;
                    log_event(j, EventKind::FilippovCross, w, "branch " + std::to_string(b));
                    push_sample(sys.sample(y, t, ell, load, d));
                }
            }
        }

        int guard = 0;
        while (t < t_target) {
            if (++guard > 100000) {
                throw Error(Errc::MaxBisectionsExceeded, "too many events inside one step near t = " +
                                                             std::to_string(t));
            }
            double seg_end = t_target;
            for (double td : dist_times) {
                if (td > t && td < seg_end) {
                    seg_end = td;
                    break;
                }
            }
            load = plant.load_at(t);
            const double h = seg_end - t;
            sys.step(y, h, load, d, y1, acc);
            sys.margins(y1, load, d, !strict, ms);

            bool any = false;
            for (const Margin& m : ms) any = any || m.value < 0.0;
            if (!any) {
                merge_acc();
                y = y1;
                t = seg_end;
                if (sys.out_of_bounds(y)) {
                    blowup("during flow");
                    return traj;
                }
                continue;
            }

            // earliest crossing; ties go to the lower bus, then margin order
            sys.margins(y, load, d, !strict, ms_start);
            const double res = 1e-14 * std::max(1.0, std::abs(t));
            std::size_t best = ms.size();
            EventLocation best_loc;
            for (std::size_t i = 0; i < ms.size(); ++i) {
                if (!(ms[i].value < 0.0)) continue;
                EventLocation loc;
                if (!(ms_start[i].value >= 0.0)) {
                    loc = {0.0, 0.0, ms_start[i].value, ms_start[i].value, 0};
                } else {
                    auto fn = [&, i](double hh) {
                        if (hh == 0.0) return ms_start[i].value;
                        std::vector<Margin> tmp;
                        sys.step(y, hh, load, d, y_lo, scratch);
                        sys.margins(y_lo, load, d, !strict, tmp);
                        return tmp[i].value;
                    };
                    loc = locate_event(fn, h, cfg.event_tol, res);
                }
                const double when = is_jump(ms[i].kind) ? loc.h_lo : loc.h_hi;
                const double best_when =
                    best == ms.size() ? 0.0 : (is_jump(ms[best].kind) ? best_loc.h_lo : best_loc.h_hi);
                if (best == ms.size() || when < best_when ||
                    (when == best_when && ms[i].bus < ms[best].bus)) {
                    best = i;
                    best_loc = loc;
                }
            }

            const Margin ev = ms[best];
            const bool jump = is_jump(ev.kind);
            const bool may_slide = ev.kind == MarginKind::UpFromBelow || ev.kind == MarginKind::LowFromAbove ||
                                   ev.kind == MarginKind::UpFromAbove || ev.kind == MarginKind::LowFromBelow;

            // advance to the event point (lo side for jumps and sliding entry, hi otherwise)
            auto advance_to = [&](double hh) {
                if (hh > 0.0) {
                    sys.step(y, hh, load, d, y1, acc);
                    merge_acc();
                    y = y1;
                    t = t + hh;
                }
            };

            const std::size_t j = ev.bus;
            const auto wi = static_cast<Eigen::Index>(sys.omega_index(j));
            if (jump) {
                advance_to(best_loc.h_lo);
                const auto& hl = std::get<HystereticLoad>(plant.loads[j]);
                const double w = y[wi];
                const double tol = std::max(cfg.event_tol, 2.0 * std::abs(best_loc.margin_lo));
                push_sample(sys.sample(y, t, ell, load, d));
                const int next = hysteresis_jump(hl, w, d.sigma[j], tol);
                d.sigma[j] = next;
                ++ell;
                log_event(j, next != 0 ? EventKind::JumpOn : EventKind::JumpOff, w,
                          "sigma " + std::to_string(next));
                push_sample(sys.sample(y, t, ell, load, d));
            } else if (may_slide) {
                const auto& sw = std::get<SwitchingLoad>(plant.loads[j]);
                const bool upper = ev.kind == MarginKind::UpFromBelow || ev.kind == MarginKind::UpFromAbove;
                bool slid = false;
                if (cfg.sliding == SlidingMode::EquivalentControl) {
                    // test attractivity at the lo point snapped onto the surface
                    sys.step(y, best_loc.h_lo, load, d, y_lo, scratch);
                    y_lo[wi] = upper ? sw.omega_up : sw.omega_down;
                    const double v = sys.free_power(y_lo, load, d, j);
                    try {
                        (void)equivalent_control(sw, upper ? Surface::Upper : Surface::Lower, v);
                        advance_to(best_loc.h_lo);
                        y[wi] = upper ? sw.omega_up : sw.omega_down;
                        d.slide[j] = upper ? Slide::Upper : Slide::Lower;
                        log_event(j, EventKind::SlidingEnter, y[wi], "v " + std::to_string(v));
                        push_sample(sys.sample(y, t, ell, load, d));
                        slid = true;
                    } catch (const Error& e) {
                        if (e.code() != Errc::NotAttracting) throw;
                    }
                }
                if (!slid) {
                    advance_to(best_loc.h_hi);
                    const int b = branch_of(sw, y[wi]);
                    d.branch[j] = b;
                    log_event(j, EventKind::FilippovCross, y[wi], "branch " + std::to_string(b));
                    push_sample(sys.sample(y, t, ell, load, d));
                }
            } else {
                advance_to(best_loc.h_hi);
                const auto& sw = std::get<SwitchingLoad>(plant.loads[j]);
                const bool upper = d.slide[j] == Slide::Upper;
                d.slide[j] = Slide::None;
                const int on = upper ? 1 : -1;
                d.branch[j] = ev.kind == MarginKind::SlideToOn ? on : 0;
                y[wi] = upper ? sw.omega_up : sw.omega_down;
                log_event(j, EventKind::SlidingExit, y[wi], "branch " + std::to_string(d.branch[j]));
                push_sample(sys.sample(y, t, ell, load, d));
            }
            if (sys.out_of_bounds(y)) {
                blowup("at an event");
                return traj;
            }
        }

        ++traj.steps;
        if ((k + 1) % stride == 0 || k + 1 == total_steps) {
            load = plant.load_at(t);
            push_sample(sys.sample(y, t, ell, load, d));
        }
    }
    return traj;
}

std::vector<ChatterStats> chattering_report(const Trajectory& traj, const Plant& plant, double window,
                                            std::size_t count) {
    std::vector<ChatterStats> out;
    const double t_last = traj.samples.empty() ? 0.0 : traj.samples.back().state.t;
    for (std::size_t j = 0; j < plant.loads.size(); ++j) {
        if (std::holds_alternative<NoLoad>(plant.loads[j])) continue;
        ChatterStats s;
        s.bus = j;
        std::vector<double> times;
        double enter = -1.0;
        for (const Event& e : traj.events) {
            if (e.bus != j) continue;
            switch (e.kind) {
                case EventKind::JumpOn:
                case EventKind::JumpOff:
                case EventKind::FilippovCross: times.push_back(e.t); break;
                case EventKind::SlidingEnter:
                    ++s.sliding_intervals;
                    enter = e.t;
                    break;
                case EventKind::SlidingExit:
                    if (enter >= 0.0) s.sliding_time += e.t - enter;
                    enter = -1.0;
                    break;
            }
        }
        if (enter >= 0.0) s.sliding_time += t_last - enter;
        s.switches = times.size();
        std::size_t hi = 0;
        for (std::size_t lo = 0; lo < times.size(); ++lo) {
            hi = std::max(hi, lo);
            while (hi < times.size() && times[hi] - times[lo] <= window) ++hi;
            s.max_switches_in_window = std::max(s.max_switches_in_window, hi - lo);
        }
        s.flagged = s.sliding_intervals > 0 || s.max_switches_in_window > count;
        out.push_back(s);
    }
    return out;
}

namespace {

std::vector<double> switch_times(const Trajectory& traj, std::size_t bus) {
    std::vector<double> times;
    const double t0 = traj.samples.front().state.t;
    for (const Event& e : traj.events) {
        if (e.bus == bus && e.t > t0 && (e.kind == EventKind::JumpOn || e.kind == EventKind::JumpOff)) {
            times.push_back(e.t);
        }
    }
    return times;
}

DwellStats dwell_stats(const Trajectory& traj, const HystereticLoad& h, std::size_t bus,
                       const std::vector<double>& times) {
    DwellStats s;
    s.bus = bus;
    s.switches = times.size();
    s.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < times.size(); ++i) s.min_gap = std::min(s.min_gap, times[i] - times[i - 1]);
    const double rate = traj.max_abs_omega_dot.at(bus);
    const double travel = h.omega1 - h.omega0 - 2.0 * traj.config.event_tol;
    s.bound = rate > 0.0 ? travel / rate : std::numeric_limits<double>::infinity();
    s.satisfied = s.min_gap >= s.bound;
    return s;
}

}  // namespace

std::vector<DwellStats> min_dwell_time(const Trajectory& traj, const Plant& plant) {
    std::vector<DwellStats> out;
    if (traj.status != RunStatus::Completed || traj.samples.empty()) return out;
    for (std::size_t j = 0; j < plant.loads.size(); ++j) {
        const auto* h = std::get_if<HystereticLoad>(&plant.loads[j]);
        if (!h) continue;
        const auto times = switch_times(traj, j);
        if (times.size() >= 2) out.push_back(dwell_stats(traj, *h, j, times));
    }
    return out;
}

DwellStats min_dwell_time(const Trajectory& traj, const Plant& plant, std::size_t bus) {
    const auto* h = std::get_if<HystereticLoad>(&plant.loads.at(bus));
    if (!h) throw Error(Errc::InvalidArgument, "bus " + std::to_string(bus) + " has no hysteretic load");
    if (traj.status != RunStatus::Completed) throw Error(Errc::NumericalBlowup, traj.status_detail);
    const auto times = traj.samples.empty() ? std::vector<double>{} : switch_times(traj, bus);
    if (times.size() < 2) {
        throw Error(Errc::InsufficientSwitches,
                    "bus " + std::to_string(bus) + " switched " + std::to_string(times.size()) + " time(s)");
    }
    return dwell_stats(traj, *h, bus, times);
}

}  // namespace gridswitch
