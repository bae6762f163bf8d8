#include "dwc/case_study.hpp"
#include "dwc/errors.hpp"
#include "dwc/grid.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace dwc::grid;
using Catch::Matchers::WithinRel;

namespace {

GridSpec chain(int n) {
    GridSpec g;
    for (int i = 0; i < n; ++i) {
        BusSpec b;
        b.id = i;
        b.kind = i == 0 ? BusKind::Slack : BusKind::Junction;
        g.buses.push_back(b);
    }
    for (int i = 0; i + 1 < n; ++i) g.lines.push_back(make_line(i, i + 1, 2.0));
    return g;
}

}  // namespace

TEST_CASE("per-unit conversion on the 69 kV base", "[grid]") {
    CHECK_THAT(ohm_to_pu(47.61, 69.0, 100.0), WithinRel(1.0, 1e-14));
    CHECK_THAT(pu_to_ohm(ohm_to_pu(3.2, 69.0, 100.0), 69.0, 100.0), WithinRel(3.2, 1e-14));
    const LineSpec l = make_line(0, 1, 2.0);
    CHECK_THAT(l.r_ohm, WithinRel(0.3358, 1e-12));
    CHECK_THAT(l.x_ohm, WithinRel(0.864, 1e-12));
}

TEST_CASE("radial network orientation", "[grid]") {
    const GridSpec g = dwc::case_study::twelve_bus_grid();
    const Network net = build_network(g);
    CHECK(net.num_buses == 12);
    CHECK(net.slack == 0);
    CHECK(net.num_lines() == 11);
    CHECK(net.parent[1] == 0);
    CHECK(net.parent[2] == 1);
    CHECK(net.parent[7] == 1);
    CHECK(net.parent[11] == 10);
    for (std::size_t k = 0; k < net.num_lines(); ++k) CHECK(net.parent[net.line_to[k]] == net.line_from[k]);
    CHECK(net.subtree(7).size() == 5);
    CHECK(net.subtree(1).size() == 11);
    CHECK(net.order.front() == 0);
}

TEST_CASE("lines given against the tree direction are reoriented", "[grid]") {
    GridSpec g = chain(3);
    std::swap(g.lines[1].from, g.lines[1].to);
    const Network net = build_network(g);
    CHECK(net.parent[2] == 1);
    CHECK(net.line_from[net.parent_line[2]] == 1);
}

TEST_CASE("topology errors", "[grid]") {
    GridSpec loop = chain(3);
    loop.lines.back() = make_line(0, 2, 1.0);
    loop.lines.push_back(make_line(1, 2, 1.0));
    CHECK_THROWS_AS(build_network(loop), dwc::TopologyError);

    GridSpec island = chain(4);
    island.lines[2] = make_line(1, 2, 1.0);  // bus 3 unreachable, 1-2 doubled
    CHECK_THROWS_AS(build_network(island), dwc::TopologyError);

    GridSpec self = chain(2);
    self.lines[0].to = 0;
    CHECK_THROWS_AS(build_network(self), dwc::TopologyError);

    GridSpec two_slack = chain(3);
    two_slack.buses[2].kind = BusKind::Slack;
    CHECK_THROWS_AS(build_network(two_slack), dwc::TopologyError);
}

TEST_CASE("ampacity sized from downstream peak", "[grid]") {
    GridSpec g = chain(3);
    // Bus 1 peaks at 6 MW, bus 2 at 8 MW, jointly 12 MW at t = 1.
    const std::vector<std::vector<double>> p = {{0, 0}, {6, 4}, {2, 8}};
    const std::vector<std::vector<double>> q = {{0, 0}, {0, 0}, {0, 0}};
    size_ampacity(g, p, q, 0.6);
    const double vmin_sq = 0.95 * 0.95;
    const double s01 = 12.0 / 0.6 / 100.0;
    const double s12 = 8.0 / 0.6 / 100.0;
    CHECK_THAT(g.lines[0].ampacity_pu, WithinRel(s01 * s01 / vmin_sq, 1e-12));
    CHECK_THAT(g.lines[1].ampacity_pu, WithinRel(s12 * s12 / vmin_sq, 1e-12));
    CHECK_THROWS_AS(size_ampacity(g, p, q, 1.5), dwc::ConfigError);
}

TEST_CASE("grid validation paths", "[grid]") {
    GridSpec g = chain(3);
    g.buses[1].id = 5;
    try {
        g.validate();
        FAIL("bad id accepted");
    } catch (const dwc::ConfigError& e) {
        CHECK(e.path() == "/buses/1/id");
    }
    g = chain(3);
    g.costs.b_g = -1.0;
    CHECK_THROWS_AS(g.validate(), dwc::ConfigError);
    CHECK(bus_kind_from_string("coupling") == BusKind::Slack);
}
