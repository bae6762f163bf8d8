#include "dwc/case_study.hpp"
#include "dwc/corridor.hpp"
#include "dwc/errors.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

using namespace dwc::corridor;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

using dwc::oracles::three_cells;

TEST_CASE("fundamental diagram branches", "[corridor]") {
    CellParams c;
    c.length_mi = 0.5;
    c.v_ff = 60.0;
    c.w = 20.0;
    c.rho_crit = 40.0;
    c.rho_jam = 160.0;
    CHECK(fundamental_flow(0.0, c) == 0.0);
    CHECK(fundamental_flow(40.0, c) == 2400.0);
    CHECK(fundamental_flow(160.0, c) == 0.0);
    CHECK(fundamental_flow(100.0, c) == 1200.0);
    CHECK(cell_demand(100.0, c) == 2400.0);
    CHECK(cell_supply(20.0, c) == 2400.0);
    CHECK(cell_supply(100.0, c) == 1200.0);
    CHECK(cell_speed(0.0, c) == 60.0);
    CHECK_THAT(cell_speed(100.0, c), WithinRel(12.0, 1e-15));
    CHECK_THROWS_AS(fundamental_flow(-1.0, c), dwc::DomainError);
    CHECK_THROWS_AS(fundamental_flow(161.0, c), dwc::DomainError);
}

TEST_CASE("three cells over five steps match a hand-unrolled update", "[corridor]") {
    const CorridorConfig cfg = three_cells();
    const auto traj = simulate(cfg);

    const auto ref = dwc::oracles::unrolled_three_cells(cfg);
    for (int t = 0; t < 5; ++t) {
        const auto& s = traj.states[t + 1];
        for (int i = 0; i < 3; ++i) CHECK_THAT(s.rho[i], WithinAbs(ref[t].rho[i], 1e-12));
        CHECK_THAT(s.q[0], WithinAbs(ref[t].q_in, 1e-9));
        CHECK_THAT(s.q[3], WithinAbs(ref[t].q_out, 1e-9));
    }
    CHECK(traj.clamp_events == 0);
    CHECK(traj.conservation_error() < 1e-14);
}

TEST_CASE("synthetic corridor conserves vehicles", "[corridor]") {
    const auto cfg = dwc::case_study::synthetic_corridor();
    const auto t0 = std::chrono::steady_clock::now();
    const auto traj = simulate(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(traj.states.size() == 289);
    CHECK(traj.conservation_error() <= 1e-9);
    CHECK(traj.clamp_events == 0);
    CHECK(secs < 0.1);
    double max_ratio = 0.0;
    for (const auto& s : traj.states) {
        for (std::size_t i = 0; i < s.rho.size(); ++i) max_ratio = std::max(max_ratio, s.rho[i] / cfg.cells[i].rho_crit);
    }
    CHECK(max_ratio > 1.0);  // the lane drop congests
}

TEST_CASE("incident lowers capacity only inside its window", "[corridor]") {
    CorridorConfig cfg = three_cells();
    cfg.incidents.push_back({1, 1, 3, 0.5});
    CHECK(cfg.effective_cell(1, 0).rho_crit == 40.0);
    CHECK(cfg.effective_cell(1, 1).rho_crit == 20.0);
    CHECK(cfg.effective_cell(1, 2).rho_jam == 80.0);
    CHECK(cfg.effective_cell(1, 3).rho_jam == 160.0);
    CHECK(cfg.effective_cell(0, 1).rho_crit == 40.0);
    const auto traj = simulate(cfg);
    CHECK(traj.conservation_error() < 1e-12);
}

TEST_CASE("validation names the offending field", "[corridor]") {
    CorridorConfig cfg = three_cells();
    cfg.dt_h = 1.0 / 60.0;  // 60 mph over 0.5 mi needs dt <= 1/120 h
    try {
        cfg.validate();
        FAIL("CFL violation accepted");
    } catch (const dwc::ConfigError& e) {
        CHECK(e.path() == "/cells/0/length_mi");
    }
    cfg = three_cells();
    cfg.cells[2].rho_jam = 30.0;
    try {
        cfg.validate();
        FAIL("rho_jam below rho_crit accepted");
    } catch (const dwc::ConfigError& e) {
        CHECK(e.path() == "/cells/2/rho_jam_veh_per_mi");
    }
    cfg = three_cells();
    cfg.upstream_demand.pop_back();
    CHECK_THROWS_AS(cfg.validate(), dwc::ConfigError);
}

TEST_CASE("density above a reduced jam density drains without loss", "[corridor]") {
    CorridorConfig cfg = three_cells();
    cfg.incidents.push_back({2, 0, 5, 0.3});
    cfg.initial_rho = {30.0, 55.0, 150.0};  // above the reduced jam density of 48
    SimulationOptions opts;
    opts.strict = true;
    const auto traj = simulate(cfg, opts);
    CHECK(traj.conservation_error() < 1e-12);
    for (const auto& s : traj.states) CHECK(s.rho[2] <= 150.0 + 1e-12);
}
