#include "dwc/case_study.hpp"
#include "dwc/errors.hpp"
#include "dwc/opf.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <chrono>
#include <cmath>

using namespace dwc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

energy::DemandProfile profile(std::vector<std::vector<double>> p, double dt_h = 1.0) {
    energy::DemandProfile d;
    d.dt_h = dt_h;
    d.power_factor = 1.0;
    d.q_mvar.assign(p.size(), std::vector<double>(p.front().size(), 0.0));
    d.p_mw = std::move(p);
    return d;
}

grid::GridSpec two_bus(double length_mi) {
    grid::GridSpec g;
    grid::BusSpec s;
    s.id = 0;
    s.kind = grid::BusKind::Slack;
    grid::BusSpec l;
    l.id = 1;
    l.kind = grid::BusKind::Junction;
    g.buses = {s, l};
    g.lines.push_back(grid::make_line(0, 1, length_mi));
    g.lines[0].ampacity_pu = 10.0;
    return g;
}

opf::OperationalProblem problem_on(const grid::GridSpec& g, const energy::DemandProfile& d) {
    opf::OperationalProblem p;
    p.grid = g;
    p.demand = d;
    p.solar_availability.assign(d.steps(), 0.0);
    p.solar_mw.assign(g.num_buses(), 0.0);
    p.es_units.assign(g.num_buses(), 0.0);
    return p;
}

using oracles::exact_two_bus;
using oracles::ExactFlow;

}  // namespace

TEST_CASE("2-bus 1-step counts match hand enumeration", "[opf]") {
    auto g = two_bus(5.0);
    g.lines[0].ampacity_pu = grid::kInf;
    const auto a = opf::assemble(problem_on(g, profile({{0.0}, {10.0}})));
    // p_g, q_g, (P, Q, l) on the line, v at bus 1
    CHECK(a.program.num_vars == 6);
    // 2 balances per bus, 1 voltage drop
    CHECK(a.program.num_eq() == 5);
    // P_g >= 0, l >= 0, v_min <= v <= v_max
    CHECK(a.program.cones.nonneg == 4);
    REQUIRE(a.program.cones.soc.size() == 1);
    CHECK(a.program.cones.soc[0] == 4);
}

TEST_CASE("zero demand costs only the fixed charge", "[opf]") {
    auto g = two_bus(5.0);
    g.costs.c_g = 7.0;
    const auto sol = opf::solve(problem_on(g, profile({{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}})));
    REQUIRE(sol.ok());
    CHECK_THAT(sol.operational_cost, WithinAbs(21.0, 1e-6));
    for (double p : sol.p_g) CHECK_THAT(p, WithinAbs(0.0, 1e-6));
}

TEST_CASE("motivating network prices the flat day at the direct sum", "[opf]") {
    const auto g = case_study::three_bus_grid();
    const auto c1 = case_study::motivating_case1();
    const auto sol = opf::solve(problem_on(g, c1));
    REQUIRE(sol.ok());
    // 24 h * (40 * 20 + 0.002 * 20^2)
    CHECK_THAT(sol.operational_cost, WithinAbs(19219.2, 1e-4));
    for (double p : sol.p_g) CHECK_THAT(p, WithinAbs(20.0, 1e-6));
    const auto c2 = opf::solve(problem_on(g, case_study::motivating_case2()));
    CHECK_THAT(1.0 - c2.operational_cost / sol.operational_cost, WithinAbs(0.233, 0.01));
}

TEST_CASE("storage charges in the cheap step and discharges in the dear one", "[opf]") {
    grid::GridSpec g;
    grid::BusSpec s;
    s.kind = grid::BusKind::Slack;
    g.buses = {s};
    g.costs.a_g = 1.0;  // marginal price 2 P_g
    g.costs.b_g = 0.0;
    g.costs.cycling_penalty = 0.0;
    auto p = problem_on(g, profile({{5.0, 25.0}}));
    p.es_units = {1.0};
    const auto sol = opf::solve(p);
    REQUIRE(sol.ok());
    // Unconstrained optimum charges 9.7 MW, so the 1.9 MW limit binds.
    CHECK_THAT(sol.p_ch[0][0], WithinAbs(1.9, 1e-6));
    CHECK_THAT(sol.p_dis[0][1], WithinAbs(1.9 * 0.95 * 0.95, 1e-6));
    CHECK_THAT(sol.p_g[0], WithinAbs(6.9, 1e-6));
    CHECK_THAT(sol.p_g[1], WithinAbs(25.0 - 1.71475, 1e-6));
    CHECK_THAT(sol.e_mwh[0][0], WithinAbs(sol.e_mwh[0][2], 1e-6));
}

TEST_CASE("brute-force AC oracle brackets the relaxation", "[opf]") {
    const auto t0 = std::chrono::steady_clock::now();
    auto g = two_bus(10.0);
    g.costs.a_g = 1.0;
    g.costs.b_g = 0.0;
    g.costs.cycling_penalty = 1.0;
    g.es.q_lim = 1e-6;  // the oracle dispatches real power only
    g.buses[1].es_units = 0;
    const std::vector<double> load = {12.0, 28.0};
    auto p = problem_on(g, profile({{0.0, 0.0}, load}));
    p.es_units = {0.0, 1.0};
    p.loss_penalty = 0.0;
    const auto sol = opf::solve(p);
    REQUIRE(sol.ok());

    const auto net = grid::build_network(g);
    const double r = net.r_pu[0];
    const double x = net.x_pu[0];
    const double base = g.base_mva;
    const auto oracle = oracles::brute_force_two_bus(g, r, x, load);
    const double best = oracle.best;
    const double slack = oracle.slack;
    CHECK(oracle.points == 39);
    REQUIRE(std::isfinite(best));
    CHECK(sol.operational_cost <= best + 1e-6);
    CHECK(sol.operational_cost >= best - slack);

    // The relaxed dispatch replayed through the exact equations.
    const auto cone = opf::cone_exactness_report(sol);
    CHECK(cone.max_residual <= 1e-5);
    for (int t = 0; t < 2; ++t) {
        const double injection = load[t] + sol.p_ch[1][t] - sol.p_dis[1][t];
        const ExactFlow f = exact_two_bus(injection / base, -sol.q_es[1][t] / base, r, x);
        CHECK_THAT(f.p01 * base, WithinAbs(sol.p_g[t], r * cone.max_residual * base + 1e-6));
        CHECK_THAT(f.v1, WithinAbs(sol.v_pu2[1][t], 1e-6));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 10.0);
}

TEST_CASE("bundled 12-bus day is tight, balanced and periodic", "[opf]") {
    auto cs = case_study::default_case_study();
    auto demand = energy::aggregate_time(case_study::baseline_demand(cs), 12);
    std::vector<double> gamma(24);
    for (int t = 0; t < 24; ++t) {
        for (int k = 0; k < 12; ++k) gamma[t] += cs.solar_availability[12 * t + k] / 12.0;
    }
    auto p = problem_on(cs.grid, demand);
    p.solar_availability = gamma;
    p.solar_mw[0] = 25.0;
    p.es_units[5] = 3.0;
    p.es_units[10] = 3.0;
    const auto sol = opf::solve(p);
    REQUIRE(sol.ok());
    CHECK(sol.balance_residual_pu <= 1e-6);
    CHECK(sol.max_cone_gap <= 1e-5);
    for (int b : {5, 10}) {
        CHECK_THAT(sol.e_mwh[b].front(), WithinAbs(sol.e_mwh[b].back(), 1e-6));
        for (std::size_t t = 0; t < sol.steps(); ++t) CHECK(std::min(sol.p_ch[b][t], sol.p_dis[b][t]) <= 1e-4);
    }

    // A tighter coupling cap cannot lower the optimum.
    auto capped = p;
    capped.coupling_mw = sol.peak_import_mw() * 0.9;
    const auto sc = opf::solve(capped);
    REQUIRE(sc.ok());
    CHECK(sc.program_objective >= sol.program_objective - 1e-6 * std::abs(sol.program_objective));
}

TEST_CASE("rewarding current makes the relaxation loose and the report flags it", "[opf]") {
    auto g = two_bus(5.0);
    g.lines[0].ampacity_pu = 0.5;
    auto a = opf::assemble(problem_on(g, profile({{0.0}, {10.0}})));
    const int l = a.layout.l_line[0][0];
    a.program.c[l] = -1e4;  // negative price on current
    const auto sol = opf::solve_assembly(a, g.costs);
    REQUIRE(sol.ok());
    const auto rep = opf::cone_exactness_report(sol);
    CHECK(rep.max_residual > 1e-3);
    REQUIRE(rep.flagged_lines.size() == 1);
    CHECK(rep.flagged_lines[0] == 0);
}

TEST_CASE("infeasible operation names the constraint family", "[opf]") {
    auto g = two_bus(5.0);
    auto p = problem_on(g, profile({{0.0}, {10.0}}));
    p.coupling_mw = 2.0;
    try {
        opf::solve(p);
        FAIL("infeasible problem solved");
    } catch (const InfeasibleError& e) {
        INFO(e.families());
        CHECK(e.families().find("grid_limits") != std::string::npos);
    }
    auto bad = problem_on(g, profile({{0.0}, {10.0}}));
    bad.solar_availability = {1.2};
    CHECK_THROWS_AS(opf::assemble(bad), ConfigError);
    bad = problem_on(g, profile({{0.0}, {10.0}}));
    bad.es_units = {0.0};
    CHECK_THROWS_AS(opf::assemble(bad), AssemblyError);
}
