#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gridswitch/analysis.hpp"
#include "gridswitch/error.hpp"
#include "gridswitch/passivity.hpp"
#include "gridswitch/report.hpp"
#include "gridswitch/scenario.hpp"

namespace gridswitch {

namespace {

struct Overrides {
    std::optional<double> dt;
    std::optional<double> t_end;
    std::string mode;
    std::string sliding;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--dt", o.dt, "Base step in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--t-end", o.t_end, "Horizon in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", o.mode, "Load mode: filippov (switching loads), hybrid (hysteretic loads), none")
        ->check(CLI::IsMember({"filippov", "hybrid", "none"}));
    cmd->add_option("--sliding", o.sliding, "Filippov treatment: equivalent-control or strict-event")
        ->check(CLI::IsMember({"equivalent-control", "strict-event"}));
}

Scenario apply(Scenario s, const Overrides& o) {
    if (o.mode == "filippov") s = with_load_mode(s, LoadMode::Switching);
    if (o.mode == "hybrid") s = with_load_mode(s, LoadMode::Hysteresis);
    if (o.mode == "none") s = with_load_mode(s, LoadMode::None);
    if (o.sliding == "equivalent-control") s.solver.sliding = SlidingMode::EquivalentControl;
    if (o.sliding == "strict-event") s.solver.sliding = SlidingMode::StrictEvent;
    if (o.dt) s.solver.dt = *o.dt;
    if (o.t_end) s.solver.t_end = *o.t_end;
    s.solver.validate();
    return s;
}

int exit_code(Errc code) {
    switch (code) {
        case Errc::NoEquilibriumFound:
        case Errc::NumericalBlowup:
        case Errc::MaxBisectionsExceeded:
        case Errc::StepRejected:
            return 2;
        default:
            return 1;
    }
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt::format("{:.10g}", v[i]);
    return s + "]";
}

void print_equilibrium(std::ostream& out, const Plant& plant, const EquilibriumPoint& eq, const char* which) {
    fmt::print(out, "equilibrium: {}\nresidual: {:.3e}\nbuses:\n", which, eq.residual);
    for (std::size_t j = 0; j < plant.network.bus_count(); ++j) {
        fmt::print(out, "  - id: {}\n    load: {:.10g}\n    omega: {:.10g}\n    s: {:.10g}\n    x_s: {}\n",
                   plant.network.bus(j).id, eq.load[j], eq.omega_star[j], eq.s_star[j], list(eq.x_s_star[j]));
    }
    const auto secure = security_check(eq);
    fmt::print(out, "lines:\n");
    for (std::size_t k = 0; k < plant.network.line_count(); ++k) {
        const Line& l = plant.network.line(k);
        fmt::print(out, "  - from: {}\n    to: {}\n    eta: {:.10g}\n    p: {:.10g}\n    secure: {}\n", l.from, l.to,
                   eq.eta_star[k], eq.p_star[k], secure[k] ? "true" : "false");
    }
}

int cmd_passivity(std::ostream& out, const Scenario& s, double epsilon, std::size_t points) {
    const auto grid = log_frequency_grid(1e-3, 1e3, points);
    for (const BusSpec& b : s.buses) {
        const SupplyModel& m = b.supply.model;
        fmt::print(out, "bus {}: {}{}\n", b.id, b.supply.governor ? "turbine_governor -> " : "", variant_name(m));
        if (!is_linear(m)) {
            fmt::print(out, "  certificate: unavailable for nonlinear supplies\n");
            continue;
        }
        const PassivityCertificate c = check_passivity(m, epsilon, grid);
        const bool marginal = c.pass && c.min_real_part - epsilon <= 1e-6;
        fmt::print(out, "  certificate: epsilon={:.6g} min_re={:.6g} at w={:.6g} rad/s over {} points -> {}\n",
                   c.epsilon, c.min_real_part, c.argmin_frequency, c.freq_grid.size(),
                   c.pass ? (marginal ? "pass (boundary)" : "pass") : "fail");
        try {
            const bool g = gain_condition(m);
            fmt::print(out, "  gain_condition: {}\n", g ? "satisfied" : "violated");
        } catch (const Error&) {
            fmt::print(out, "  gain_condition: n/a\n");
        }
        try {
            const StorageFunction st = derive_storage(m, epsilon);
            fmt::print(out, "  storage: found, order {}, dissipation residual {:.3e}\n", st.order(),
                       st.dissipation_residual);
        } catch (const Error& e) {
            if (e.code() != Errc::StorageSearchFailed) throw;
            fmt::print(out, "  storage: not found ({})\n", e.what());
        }
        fmt::print(out, "  restores_frequency: {}\n  note: {}\n", restores_frequency(m) ? "true" : "false",
                   c.validity_note);
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"gridswitch: frequency control with switching and hysteretic loads"};
    app.require_subcommand(1);

    std::string path;
    Overrides ov;
    bool check = false, svg = false, pre = false;
    std::string out_dir = ".";
    double epsilon = 0.0;
    std::size_t points = 10000;

    auto* sim = app.add_subcommand("simulate", "Integrate a scenario and write trajectory/events/metrics CSV");
    sim->add_option("scenario", path, "Scenario file")->required();
    add_overrides(sim, ov);
    sim->add_flag("--check", check, "Assert convergence, Lyapunov monotonicity and dwell bounds");
    sim->add_flag("--svg", svg, "Also write omega.svg");
    sim->add_option("--out-dir", out_dir, "Output directory");

    auto* eqc = app.add_subcommand("equilibrium", "Solve the equilibrium equations");
    eqc->add_option("scenario", path, "Scenario file")->required();
    eqc->add_flag("--pre", pre, "Use base loads instead of post-disturbance loads");

    auto* pas = app.add_subcommand("passivity", "Per-bus passivity certificates and gain conditions");
    pas->add_option("scenario", path, "Scenario file")->required();
    pas->add_option("--epsilon", epsilon, "Strict passivity margin")->check(CLI::NonNegativeNumber);
    pas->add_option("--points", points, "Frequency grid size")->check(CLI::PositiveNumber);

    auto* rep = app.add_subcommand("report", "Simulate and print the metrics CSV");
    rep->add_option("scenario", path, "Scenario file")->required();
    add_overrides(rep, ov);
    rep->add_option("--out-dir", out_dir, "Also write all outputs here");

    auto* cmp = app.add_subcommand("compare", "Run under load modes none, switching and hysteresis");
    cmp->add_option("scenario", path, "Scenario file")->required();
    add_overrides(cmp, ov);
    cmp->add_option("--out-dir", out_dir, "Also write each run's outputs under <dir>/<mode>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        const Scenario scenario = load_scenario(path);
        if (*sim) {
            const RunResult r = run_scenario(apply(scenario, ov));
            for (const std::string& f : write_outputs(r, out_dir, svg)) fmt::print(out, "wrote {}\n", f);
            fmt::print(out, "status: {} ({} samples, {} events, {:.3f} s)\n",
                       r.trajectory.status == RunStatus::Completed ? "completed" : "blowup", r.trajectory.samples.size(),
                       r.trajectory.events.size(), r.elapsed_seconds);
            if (r.dissipation) {
                fmt::print(out, "lyapunov: mode {} max flow increase {:.3e}, max jump change {:.3e}\n",
                           to_string(r.dissipation->mode), r.dissipation->max_flow_increase,
                           r.dissipation->max_jump_change);
            }
            if (r.trajectory.status == RunStatus::Blowup) {
                fmt::print(err, "numerical blowup: {}\n", r.trajectory.status_detail);
                return 2;
            }
            if (check) {
                const auto fails = check_run(r);
                for (const std::string& f : fails) fmt::print(err, "check failed: {}\n", f);
                if (!fails.empty()) return 3;
                fmt::print(out, "check: all assertions passed\n");
            }
            return 0;
        }
        if (*eqc) {
            const Plant plant = build_plant(scenario);
            const auto opts = equilibrium_options(scenario);
            if (pre) {
                const auto base = plant.network.base_loads();
                print_equilibrium(out, plant, solve_equilibrium(plant.network, plant.supplies, base, opts), "base loads");
            } else {
                print_equilibrium(out, plant, solve_equilibrium(plant, opts), "post-disturbance loads");
            }
            return 0;
        }
        if (*pas) return cmd_passivity(out, scenario, epsilon, points);
        if (*rep) {
            const RunResult r = run_scenario(apply(scenario, ov));
            write_metrics_csv(out, r);
            if (rep->count("--out-dir")) write_outputs(r, out_dir, false);
            return r.trajectory.status == RunStatus::Blowup ? 2 : 0;
        }
        if (*cmp) {
            Overrides base = ov;
            base.mode.clear();
            const auto runs = compare_load_modes(apply(scenario, base), thread_count_from_env());
            write_compare_table(out, runs);
            if (cmp->count("--out-dir")) {
                for (const RunResult& r : runs) {
                    const std::string sub = out_dir + "/" + to_string(declared_load_mode(r.scenario));
                    write_outputs(r, sub, false);
                }
            }
            for (const RunResult& r : runs) {
                if (r.trajectory.status == RunStatus::Blowup) return 2;
            }
            return 0;
        }
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return exit_code(e.code());
    }
    return 1;
}

}  // namespace gridswitch
