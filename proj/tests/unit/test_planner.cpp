#include "dwc/case_study.hpp"
#include "dwc/errors.hpp"
#include "dwc/planner.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace dwc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

planner::PlanningInputs motivating_inputs() {
    planner::PlanningInputs in;
    in.grid = case_study::three_bus_grid();
    in.demand = case_study::motivating_case2();
    in.solar_availability.assign(in.demand.steps(), 0.0);
    return in;
}

}  // namespace

TEST_CASE("direct procurement cost of the flat day", "[planner]") {
    const std::vector<double> flat(24, 20.0);
    CHECK_THAT(planner::cost_eq1(flat, 40.0, 0.002), WithinAbs(19219.2, 1e-9));
    CHECK(planner::cost_eq1({}, 40.0, 0.002) == 0.0);
    const auto c2 = case_study::motivating_case2();
    std::vector<double> e = c2.total_p();
    CHECK_THAT(1.0 - planner::cost_eq1(e, 40.0, 0.002) / 19219.2, WithinAbs(0.233, 1e-9));
}

TEST_CASE("capital cost is linear in the capacities", "[planner]") {
    const grid::CostSpec c;
    CHECK_THAT(planner::capital_cost(c, {2.0, 0.0}, {0.0, 3.0}, 5.0),
               WithinRel(2.0 * 1.17e6 + 3.0 * 1.2e6 + 5.0 * 1.8e6, 1e-14));
}

TEST_CASE("sizing without solar or storage buys the peak as coupling", "[planner]") {
    const auto in = motivating_inputs();
    const auto r = planner::solve_sizing(in, {});
    const auto total = in.demand.total_p();
    const double peak = *std::max_element(total.begin(), total.end());
    CHECK_THAT(r.design.coupling_mw, WithinAbs(peak, 1e-4));
    CHECK(r.design.total_es_units() == 0);
    CHECK_THAT(r.design.total_solar_mw(), WithinAbs(0.0, 1e-6));
    const double expected = 1.8e6 * r.design.coupling_mw + 7300.0 * r.operation.operational_cost;
    CHECK_THAT(r.design.total_cost, WithinRel(expected, 1e-6));
    CHECK_THAT(r.design.daily_operational_cost, WithinRel(r.operation.operational_cost, 1e-9));

    // Re-pricing the fixed design reproduces the optimum.
    const auto e = planner::evaluate_design(r.design, in);
    CHECK_THAT(e.total_cost, WithinRel(r.design.total_cost, 1e-6));
}

TEST_CASE("integer storage sizing is bounded by its relaxation", "[planner]") {
    const auto in = motivating_inputs();
    const auto none = planner::solve_sizing(in, {});
    const auto r = planner::solve_sizing(in, {1});
    for (std::size_t b = 0; b < r.design.es_units.size(); ++b) {
        if (b != 1) CHECK(r.design.es_units[b] == 0);
    }
    CHECK(r.design.total_cost >= r.relaxation.total_cost * (1.0 - 1e-6));
    CHECK(r.root_gap >= -1e-9);
    // Zero units remains available, so the option cannot cost more.
    CHECK(r.design.total_cost <= none.design.total_cost * (1.0 + 1e-3));
    CHECK(r.nodes >= 1);
    CHECK(r.nodes <= 64);

    planner::SizingOptions relaxed;
    relaxed.integer = false;
    const auto c = planner::solve_sizing(in, {1}, relaxed);
    CHECK_THAT(c.relaxation.total_cost, WithinRel(r.relaxation.total_cost, 1e-5));
}

TEST_CASE("siting places exactly k units off the excluded buses", "[planner]") {
    auto in = motivating_inputs();
    in.grid.es_excluded = {0};
    const auto s = planner::solve_siting(in, 2.0);
    REQUIRE(s.placement.size() == 3);
    CHECK_THAT(std::accumulate(s.placement.begin(), s.placement.end(), 0.0), WithinAbs(2.0, 1e-6));
    CHECK_THAT(s.placement[0], WithinAbs(0.0, 1e-9));
    CHECK(s.k_batt == 2.0);

    const auto sweep = planner::siting_sweep(in, {0, 1, 2});
    REQUIRE(sweep.curve.size() == 3);
    for (const auto& p : sweep.curve) CHECK(sweep.best().total_cost <= p.total_cost);
    CHECK_THAT(sweep.curve[0].total_cost, WithinRel(planner::solve_sizing(in, {}).relaxation.total_cost, 1e-5));
}

TEST_CASE("selected buses apply the threshold with a fallback", "[planner]") {
    planner::SitingResult s;
    s.k_batt = 3.0;
    s.placement = {0.0, 0.7, 0.2, 2.1};
    CHECK(planner::selected_buses(s) == std::vector<int>{1, 3});
    s.placement = {0.0, 0.3, 0.4, 0.3};
    CHECK(planner::selected_buses(s) == std::vector<int>{2});
    s.k_batt = 0.0;
    s.placement = {0.0, 0.0, 0.0, 0.0};
    CHECK(planner::selected_buses(s).empty());
}

TEST_CASE("validation reports shortfall against the coupling cap", "[planner]") {
    const auto in = motivating_inputs();
    planner::PlanningDesign d;
    d.solar_mw.assign(3, 0.0);
    d.es_units.assign(3, 0);
    d.coupling_mw = 25.0;
    const planner::ScenarioDemand sc{"NV_000", scenarios::Kind::NV, in.demand};
    const auto ok = planner::validate_scenario(d, in.grid, sc, in.solar_availability);
    CHECK(ok.feasible);
    CHECK(ok.max_shortfall_mw <= 1e-3);

    d.coupling_mw = 15.0;
    const auto bad = planner::validate_scenario(d, in.grid, sc, in.solar_availability);
    CHECK_FALSE(bad.feasible);
    CHECK_THAT(bad.max_shortfall_mw, WithinAbs(5.0, 1e-3));

    const auto rep = planner::validate_design(d, in.grid, {sc, sc}, in.solar_availability);
    CHECK(rep.service_level_hat == 0.0);
    CHECK_FALSE(rep.meets_threshold());

    planner::ValidationOptions strict;
    strict.strict = true;
    d.coupling_mw = 25.0;
    CHECK(planner::validate_scenario(d, in.grid, sc, in.solar_availability, strict).feasible);
}

TEST_CASE("flat worst case needs at least the coupling of the varying day", "[planner]") {
    const auto in = motivating_inputs();
    const auto cmp = planner::compare_designs(in, {});
    CHECK_THAT(cmp.peak_mw, WithinAbs(20.0, 1e-9));
    CHECK(cmp.worst_case.coupling_mw >= cmp.traffic_aware.coupling_mw - 1e-6);
    CHECK(cmp.cost_gap_relative > 0.0);
    CHECK(cmp.dominates);

    const auto scaled = planner::compare_designs(in, {}, {}, 30.0);
    CHECK_THAT(scaled.peak_mw, WithinAbs(30.0, 1e-9));
    CHECK_THAT(scaled.traffic_aware.coupling_mw, WithinAbs(30.0, 1e-3));
}
