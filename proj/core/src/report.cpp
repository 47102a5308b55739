#include "gridswitch/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gridswitch/error.hpp"

namespace gridswitch {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{:.12g}", v);
}

double to_hz(double w) { return w / (2.0 * std::numbers::pi); }

}  // namespace

RunResult run_scenario(const Scenario& scenario) {
    const auto start = std::chrono::steady_clock::now();
    RunResult r;
    r.scenario = scenario;
    r.plant = build_plant(scenario);
    const EquilibriumOptions opts = equilibrium_options(scenario);
    const auto base = r.plant.network.base_loads();
    r.initial_equilibrium = solve_equilibrium(r.plant.network, r.plant.supplies, base, opts);
    r.final_equilibrium = solve_equilibrium(r.plant, opts);

    r.trajectory = simulate(r.plant, scenario.solver, equilibrium_state(r.initial_equilibrium));

    if (scenario.monitor.lyapunov) {
        r.storages = derive_storages(r.plant.supplies, r.final_equilibrium, scenario.monitor.storage_epsilon);
        const bool full = complete(r.storages);
        r.lyapunov = lyapunov_series(r.plant.network, r.trajectory, r.final_equilibrium, full ? &r.storages : nullptr);
        r.dissipation = verify_dissipation(r.plant.network, r.trajectory, r.final_equilibrium, &r.storages);
    }
    r.chatter = chattering_report(r.trajectory, r.plant, scenario.solver.chatter_window, scenario.solver.chatter_count);
    r.dwell = min_dwell_time(r.trajectory, r.plant);
    r.overshoot = overshoot_metrics(r.trajectory, scenario.monitor.settling_band);
    r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<std::string> check_run(const RunResult& r) {
    std::vector<std::string> fails;
    if (r.trajectory.status == RunStatus::Blowup) fails.push_back("numerical blowup: " + r.trajectory.status_detail);
    if (r.dissipation && !r.dissipation->ok()) {
        fails.push_back(fmt::format("Lyapunov monitor ({}): {} flow violations, max increase {:.3g}, max jump change "
                                    "{:.3g}",
                                    to_string(r.dissipation->mode), r.dissipation->flow_violations,
                                    r.dissipation->max_flow_increase, r.dissipation->max_jump_change));
    }
    for (const DwellStats& d : r.dwell) {
        if (!d.satisfied) {
            fails.push_back(fmt::format("bus {}: dwell gap {:.6g} s below bound {:.6g} s",
                                        r.plant.network.bus(d.bus).id, d.min_gap, d.bound));
        }
    }
    if (r.scenario.monitor.assert_convergence && !r.trajectory.samples.empty()) {
        const auto& omega = r.trajectory.samples.back().state.continuous.omega;
        for (std::size_t j = 0; j < omega.size(); ++j) {
            if (std::abs(omega[j]) > r.scenario.monitor.convergence_tol) {
                fails.push_back(fmt::format("bus {}: terminal |omega| = {:.3g} rad/s exceeds {:.3g}",
                                            r.plant.network.bus(j).id, std::abs(omega[j]),
                                            r.scenario.monitor.convergence_tol));
            }
        }
    }
    return fails;
}

void write_trajectory_csv(std::ostream& out, const RunResult& r) {
    const Network& net = r.plant.network;
    std::vector<std::size_t> hyst;
    for (std::size_t j = 0; j < r.plant.loads.size(); ++j) {
        if (std::holds_alternative<HystereticLoad>(r.plant.loads[j])) hyst.push_back(j);
    }
    const bool with_v = !r.lyapunov.empty();
    std::string line = "t,ell";
    for (const Bus& b : net.buses()) line += fmt::format(",omega_{}", b.id);
    for (const Line& l : net.lines()) line += fmt::format(",eta_{}_{}", l.from, l.to);
    for (const Bus& b : net.buses()) line += fmt::format(",d_c_{}", b.id);
    for (std::size_t j : hyst) line += fmt::format(",sigma_{}", net.bus(j).id);
    if (with_v) line += ",V";
    out << line << '\n';
    for (std::size_t i = 0; i < r.trajectory.samples.size(); ++i) {
        const Sample& s = r.trajectory.samples[i];
        line = num(s.state.t) + "," + std::to_string(s.state.ell);
        for (double w : s.state.continuous.omega) line += "," + num(w);
        for (double e : s.state.continuous.eta) line += "," + num(e);
        for (double d : s.demand) line += "," + num(d);
        for (std::size_t j : hyst) line += "," + std::to_string(s.state.sigma[j]);
        if (with_v) line += "," + num(r.lyapunov[i].total);
        out << line << '\n';
    }
}

void write_events_csv(std::ostream& out, const RunResult& r) {
    out << "t,ell,bus,kind\n";
    for (const Event& e : r.trajectory.events) {
        out << num(e.t) << ',' << e.ell << ',' << r.plant.network.bus(e.bus).id << ',' << to_string(e.kind) << '\n';
    }
}

void write_metrics_csv(std::ostream& out, const RunResult& r) {
    out << "bus,peak_abs_omega,peak_abs_omega_hz,peak_time,settling_time,terminal_omega,last_load_activity,"
           "load_off_at_end,switches,max_switches_in_window,sliding_intervals,chatter_flag,dwell_min_gap,"
           "dwell_bound,dwell_ok\n";
    const auto& last = r.trajectory.samples.back().state.continuous.omega;
    for (const OvershootMetrics& m : r.overshoot) {
        const auto chat = std::find_if(r.chatter.begin(), r.chatter.end(),
                                       [&](const ChatterStats& c) { return c.bus == m.bus; });
        const auto dw = std::find_if(r.dwell.begin(), r.dwell.end(), [&](const DwellStats& d) { return d.bus == m.bus; });
        out << r.plant.network.bus(m.bus).id << ',' << num(m.peak_abs_omega) << ',' << num(to_hz(m.peak_abs_omega))
            << ',' << num(m.peak_time) << ',' << num(m.settling_time) << ',' << num(last[m.bus]) << ','
            << num(m.last_load_activity) << ',' << (m.load_off_at_end ? 1 : 0) << ',';
        if (chat != r.chatter.end()) {
            out << chat->switches << ',' << chat->max_switches_in_window << ',' << chat->sliding_intervals << ','
                << (chat->flagged ? 1 : 0) << ',';
        } else {
            out << "0,0,0,0,";
        }
        if (dw != r.dwell.end()) {
            out << num(dw->min_gap) << ',' << num(dw->bound) << ',' << (dw->satisfied ? 1 : 0) << '\n';
        } else {
            out << ",,\n";
        }
    }
}

void write_omega_svg(std::ostream& out, const RunResult& r) {
    constexpr double width = 900, height = 420, left = 70, right = 150, top = 30, bottom = 50;
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const auto& samples = r.trajectory.samples;
    const double t0 = samples.front().state.t, t1 = std::max(samples.back().state.t, t0 + 1e-12);
    double lo = 0.0, hi = 0.0;
    for (const Sample& s : samples) {
        for (double w : s.state.continuous.omega) {
            lo = std::min(lo, to_hz(w));
            hi = std::max(hi, to_hz(w));
        }
    }
    if (hi - lo < 1e-12) {
        hi += 1e-3;
        lo -= 1e-3;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double pw = width - left - right, ph = height - top - bottom;
    auto x_of = [&](double t) { return left + (t - t0) / (t1 - t0) * pw; };
    auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * ph; };

    fmt::print(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
                    "font-size=\"12\">\n",
               width, height);
    fmt::print(out, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    fmt::print(out, "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}: frequency deviation</text>\n",
               left + pw / 2, r.scenario.name);
    fmt::print(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top,
               pw, ph);
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        const double t = t0 + (t1 - t0) * i / 4.0;
        fmt::print(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n", left - 6, y_of(v) + 4,
                   v);
        fmt::print(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", x_of(t),
                   top + ph + 18, t);
    }
    if (lo < 0.0 && hi > 0.0) {
        fmt::print(out, "<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#bbb\" stroke-dasharray=\"4\"/>\n",
                   left, y_of(0.0), left + pw, y_of(0.0));
    }
    fmt::print(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">t (s)</text>\n", left + pw / 2,
               height - 12);
    fmt::print(out, "<text x=\"16\" y=\"{:.1f}\" transform=\"rotate(-90 16 {:.1f})\" text-anchor=\"middle\">omega "
                    "(Hz)</text>\n",
               top + ph / 2, top + ph / 2);

    const std::size_t n = r.plant.network.bus_count();
    const std::size_t stride = std::max<std::size_t>(1, samples.size() / 3000);
    for (std::size_t j = 0; j < n; ++j) {
        std::string pts;
        for (std::size_t i = 0; i < samples.size(); i += stride) {
            const Sample& s = samples[i];
            pts += fmt::format("{:.2f},{:.2f} ", x_of(s.state.t), y_of(to_hz(s.state.continuous.omega[j])));
        }
        const char* color = palette[j % std::size(palette)];
        fmt::print(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n", color, pts);
        const double ly = top + 14.0 * static_cast<double>(j) + 8;
        fmt::print(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                   left + pw + 12, ly, left + pw + 32, ly, color);
        fmt::print(out, "<text x=\"{}\" y=\"{}\">bus {}</text>\n", left + pw + 38, ly + 4, r.plant.network.bus(j).id);
    }
    out << "</svg>\n";
}

std::vector<std::string> write_outputs(const RunResult& r, const std::string& dir, bool svg) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::vector<std::string> paths;
    auto emit = [&](const char* name, auto&& writer) {
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(Errc::InvalidArgument, "cannot write '" + path + "'");
        writer(f, r);
        paths.push_back(path);
    };
    emit("trajectory.csv", write_trajectory_csv);
    emit("events.csv", write_events_csv);
    emit("metrics.csv", write_metrics_csv);
    if (svg) emit("omega.svg", write_omega_svg);
    return paths;
}

std::vector<RunResult> compare_load_modes(const Scenario& scenario, unsigned threads) {
    const LoadMode modes[] = {LoadMode::None, LoadMode::Switching, LoadMode::Hysteresis};
    std::vector<Scenario> variants;
    for (LoadMode m : modes) variants.push_back(with_load_mode(scenario, m));
    std::vector<RunResult> out(3);
    std::vector<std::exception_ptr> errors(3);
    auto run = [&](std::size_t i) {
        try {
            out[i] = run_scenario(variants[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (threads <= 1) {
        for (std::size_t i = 0; i < 3; ++i) run(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        while (next < 3) {
            for (unsigned k = 0; k < threads && next < 3; ++k) pool.emplace_back(run, next++);
            for (auto& t : pool) t.join();
            pool.clear();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

void write_compare_table(std::ostream& out, const std::vector<RunResult>& runs) {
    const RunResult& base = runs.front();
    fmt::print(out, "{:>5} | {:>14} {:>14} {:>14} | {:>8} {:>8} | {:>10} {:>10}\n", "bus", "peak_none_hz",
               "peak_switch_hz", "peak_hyst_hz", "chat_sw", "chat_hy", "dwell_min", "dwell_bnd");
    for (std::size_t j = 0; j < base.plant.network.bus_count(); ++j) {
        double peaks[3];
        for (std::size_t k = 0; k < 3; ++k) peaks[k] = to_hz(runs[k].overshoot[j].peak_abs_omega);
        auto chat = [&](const RunResult& r) -> std::string {
            for (const ChatterStats& c : r.chatter) {
                if (c.bus == j) return c.flagged ? "yes" : "no";
            }
            return "-";
        };
        std::string dmin = "-", dbound = "-";
        for (const DwellStats& d : runs[2].dwell) {
            if (d.bus == j) {
                dmin = fmt::format("{:.4g}", d.min_gap);
                dbound = fmt::format("{:.4g}", d.bound);
            }
        }
        fmt::print(out, "{:>5} | {:>14.6g} {:>14.6g} {:>14.6g} | {:>8} {:>8} | {:>10} {:>10}\n",
                   base.plant.network.bus(j).id, peaks[0], peaks[1], peaks[2], chat(runs[1]), chat(runs[2]), dmin,
                   dbound);
    }
}

unsigned thread_count_from_env() {
    const char* v = std::getenv("GRIDSWITCH_THREADS");
    if (!v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) return 1;
    return static_cast<unsigned>(std::min<long>(n, 64));
}

}  // namespace gridswitch
