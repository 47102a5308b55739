#include <doctest.h>

#include <cmath>
#include <random>

#include "gridswitch/analysis.hpp"
#include "gridswitch/error.hpp"
#include "support.hpp"

using namespace gridswitch;
using gridswitch::testing::two_bus_plant;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::InvalidArgument;
}

double simpson(auto&& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("two-bus equilibrium with opposite loads") {
    const Network n = Network::build({{1, 1.0, 0.5}, {2, 1.0, -0.5}}, {{1, 2, 5.0}});
    const std::vector<SupplyModel> sup{PILag{1.0, 0.3, 0.3, 0.5}, StaticDamping{1.0}};
    const std::vector<double> load{0.5, -0.5};
    const auto eq = solve_equilibrium(n, sup, load);
    CHECK(std::abs(eq.eta_star[0] - std::asin(-0.1)) < 1e-10);
    CHECK(eq.p_star[0] == doctest::Approx(-0.5));
    CHECK(eq.s_star[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eq.residual < 1e-10);
    CHECK(eq.omega_star == std::vector<double>{0.0, 0.0});

    const Network weak = Network::build({{1, 1.0, 0.5}, {2, 1.0, -0.5}}, {{1, 2, 0.4}});
    CHECK(code_of([&] { solve_equilibrium(weak, sup, load); }) == Errc::NoEquilibriumFound);
}

TEST_CASE("balanced network has the trivial equilibrium") {
    const Plant p = two_bus_plant(NoLoad{}, 0.0);
    const auto eq = solve_equilibrium(p);
    CHECK(eq.eta_star[0] == 0.0);
    CHECK(eq.p_star[0] == 0.0);
}

TEST_CASE("equilibrium needs a restoring bus") {
    const Network n = Network::build({{1, 1.0, 0.1}, {2, 1.0, 0.0}}, {{1, 2, 5.0}});
    const std::vector<SupplyModel> sup{StaticDamping{1.0}, StaticDamping{1.0}};
    CHECK(code_of([&] { solve_equilibrium(n, sup, n.base_loads()); }) == Errc::NonzeroFrequencyRequired);
}

TEST_CASE("participation splits the load") {
    const Network n = Network::build({{1, 1.0, 0.0}, {2, 1.0, 0.3}, {3, 1.0, 0.0}}, {{1, 2, 5.0}, {2, 3, 5.0}});
    const std::vector<SupplyModel> sup{PILag{}, StaticDamping{1.0}, PILag{}};
    EquilibriumOptions o;
    o.participation = {1.0, 0.0, 2.0};
    const auto eq = solve_equilibrium(n, sup, n.base_loads(), o);
    CHECK(eq.s_star[0] == doctest::Approx(0.1));
    CHECK(eq.s_star[2] == doctest::Approx(0.2));
}

TEST_CASE("equilibrium agrees with the brute-force oracle") {
    std::mt19937_64 rng(77);
    int feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3 + trial % 4;
        auto rn = testing::random_network(rng, n, trial % 5 == 4 ? 6.0 : 1.0);
        const auto inj = testing::rest_injection(rn);
        const auto oracle = testing::brute_force_equilibrium(rn.network, inj);
        std::optional<EquilibriumPoint> eq;
        try {
            eq = solve_equilibrium(rn.network, rn.supplies, rn.load);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NoEquilibriumFound);
        }
        CHECK(oracle.has_value() == eq.has_value());
        if (!oracle || !eq) {
            ++infeasible;
            continue;
        }
        ++feasible;
        for (std::size_t k = 0; k < rn.network.line_count(); ++k) {
            CHECK(std::abs(eq->eta_star[k] - (*oracle)[k]) < 1e-8);
        }
        CHECK(eq->residual < 1e-8);
    }
    CHECK(feasible > 0);
}

TEST_CASE("security check is strict at pi/2") {
    EquilibriumPoint eq;
    eq.eta_star = {0.3, 1.6, M_PI / 2, -0.3};
    CHECK(security_check(eq) == std::vector<bool>{true, false, false, true});
}

TEST_CASE("Lyapunov function values") {
    const Plant p = two_bus_plant(NoLoad{}, 0.0);
    const auto eq = solve_equilibrium(p);
    const auto st = derive_storages(p.supplies, eq);
    HybridState x = equilibrium_state(eq);
    CHECK(lyapunov_value(p.network, x, eq, &st).total == doctest::Approx(0.0));

    x.continuous.omega = {0.1, 0.0};
    const auto v = lyapunov_value(p.network, x, eq);
    CHECK(v.v_f == doctest::Approx(0.01));
    CHECK(v.v_p == doctest::Approx(0.0));

    CHECK(code_of([&] { lyapunov_value(p.network, x, std::nullopt); }) == Errc::MissingEquilibrium);
}

TEST_CASE("potential energy matches quadrature") {
    const Network n = Network::build({{1, 1.0, 0.0}, {2, 1.0, 0.0}}, {{1, 2, 5.0}});
    EquilibriumPoint eq;
    eq.eta_star = {0.1};
    eq.omega_star = {0.0, 0.0};
    eq.x_s_star = {{}, {}};
    eq.p_star = {5.0 * std::sin(0.1)};
    HybridState x;
    x.continuous = {{0.3}, {0.0, 0.0}, {{}, {}}};
    x.sigma = {0, 0};
    const auto v = lyapunov_value(n, x, eq);
    const double ref = simpson([](double s) { return 5.0 * (std::sin(s) - std::sin(0.1)); }, 0.1, 0.3);
    CHECK(v.v_p == doctest::Approx(ref).epsilon(1e-10));
    CHECK(v.v_p == doctest::Approx(5.0 * ((std::cos(0.1) - std::cos(0.3)) - std::sin(0.1) * 0.2)));
}

TEST_CASE("dissipation monitor") {
    SUBCASE("equilibrium trajectory") {
        const Plant p = two_bus_plant(HystereticLoad{0.1, 0.05, 0.0075}, 0.0);
        const auto eq = solve_equilibrium(p);
        const auto st = derive_storages(p.supplies, eq);
        SolverConfig cfg;
        cfg.t_end = 2.0;
        const auto tr = simulate(p, cfg, equilibrium_state(eq));
        const auto rep = verify_dissipation(p.network, tr, eq, &st);
        CHECK(rep.max_flow_increase <= 0.0);
        CHECK(rep.max_jump_change == 0.0);
        CHECK(rep.ok());
    }
    SUBCASE("passive hysteresis run") {
        const Plant p = two_bus_plant(HystereticLoad{0.1, 0.05, 0.0075});
        const auto pre = solve_equilibrium(p.network, p.supplies, p.network.base_loads());
        const auto eq = solve_equilibrium(p);
        const auto st = derive_storages(p.supplies, eq);
        REQUIRE(complete(st));
        SolverConfig cfg;
        cfg.t_end = 20.0;
        const auto tr = simulate(p, cfg, equilibrium_state(pre));
        const auto rep = verify_dissipation(p.network, tr, eq, &st);
        CHECK(rep.mode == MonitorMode::Storage);
        CHECK(rep.jumps > 0);
        CHECK(rep.ok());
        CHECK(rep.max_jump_change == 0.0);
    }
    SUBCASE("non-passive supply is flagged") {
        Plant p = two_bus_plant(NoLoad{});
        p.supplies[0] = PILag{1.0, 0.3, 0.3, 1.0};
        CHECK_FALSE(gain_condition(p.supplies[0]));
        const auto pre = solve_equilibrium(p.network, p.supplies, p.network.base_loads());
        const auto eq = solve_equilibrium(p);
        CHECK_FALSE(complete(derive_storages(p.supplies, eq)));
        // the storage of a passive neighbour does not certify this supply
        const std::vector<SupplyModel> passive{PILag{1.0, 0.3, 0.3, 0.5}, p.supplies[1]};
        const auto borrowed = derive_storages(passive, eq);
        REQUIRE(complete(borrowed));
        SolverConfig cfg;
        cfg.t_end = 10.0;
        const auto tr = simulate(p, cfg, equilibrium_state(pre));
        const auto rep = verify_dissipation(p.network, tr, eq, &borrowed);
        CHECK(rep.mode == MonitorMode::Storage);
        CHECK(rep.flow_violations > 0);
        CHECK_FALSE(rep.ok());
    }
}

TEST_CASE("overshoot metrics") {
    const Plant quiet = two_bus_plant(NoLoad{}, 0.0);
    SolverConfig cfg;
    cfg.t_end = 2.0;
    const auto tq = simulate(quiet, cfg, equilibrium_state(solve_equilibrium(quiet)));
    for (const auto& m : overshoot_metrics(tq)) {
        CHECK(m.peak_abs_omega == 0.0);
        CHECK(std::isnan(m.last_load_activity));
    }

    cfg.t_end = 60.0;
    auto peak = [&](LoadControl l) {
        const Plant p = two_bus_plant(l);
        const auto tr = simulate(p, cfg, equilibrium_state(solve_equilibrium(p.network, p.supplies, p.network.base_loads())));
        return overshoot_metrics(tr)[1];
    };
    const auto none = peak(NoLoad{});
    const auto hyst = peak(HystereticLoad{0.1, 0.05, 0.0075});
    CHECK(hyst.peak_abs_omega < none.peak_abs_omega);
    CHECK(hyst.load_off_at_end);
    CHECK(std::isfinite(hyst.last_load_activity));
    CHECK(std::isfinite(none.settling_time));
}
