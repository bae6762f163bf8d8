#include "dwc/case_study.hpp"
#include "dwc/errors.hpp"
#include "dwc/scenarios.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace dwc::scenarios;

namespace {

EnsembleSpec reduced() {
    EnsembleSpec s;
    s.nv = 3;
    s.cw = 2;
    s.acc_mainline = 3;
    s.acc_ramp = 1;
    s.ff = 1;
    return s;
}

}  // namespace

TEST_CASE("ensemble is a pure function of the master seed", "[scenarios]") {
    const auto base = dwc::case_study::synthetic_corridor();
    const auto a = generate_ensemble(base, reduced());
    const auto b = generate_ensemble(base, reduced());
    REQUIRE(a.size() == 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].spec.seed == b[i].spec.seed);
        CHECK(a[i].spec.name() == b[i].spec.name());
        CHECK(a[i].config.upstream_demand == b[i].config.upstream_demand);
        CHECK(a[i].config.incidents.size() == b[i].config.incidents.size());
    }
    auto other = reduced();
    other.master_seed = 7;
    const auto c = generate_ensemble(base, other);
    CHECK(c[0].config.upstream_demand != a[0].config.upstream_demand);
}

TEST_CASE("ensemble order and kinds", "[scenarios]") {
    const auto base = dwc::case_study::synthetic_corridor();
    const auto e = generate_ensemble(base, reduced());
    const Kind expected[] = {Kind::NV, Kind::NV, Kind::NV, Kind::CW, Kind::CW, Kind::ACC_MAINLINE,
                             Kind::ACC_MAINLINE, Kind::ACC_MAINLINE, Kind::ACC_RAMP, Kind::FF};
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(e[i].spec.kind == expected[i]);
        CHECK(e[i].spec.index == static_cast<int>(i));
        CHECK(e[i].spec.seed == derive_seed(2024, i));
    }
}

TEST_CASE("scenario families perturb what they claim", "[scenarios]") {
    const auto base = dwc::case_study::synthetic_corridor();
    const ScenarioParams p;

    ScenarioSpec spec;
    const auto ff = sample_ff(base, 11, p, &spec);
    for (std::size_t t = 0; t < base.upstream_demand.size(); ++t) {
        CHECK(ff.upstream_demand[t] >= base.upstream_demand[t] - 1e-9);
    }

    const auto acc = sample_acc_mainline(base, 12, p, &spec);
    REQUIRE(acc.incidents.size() == 1);
    const auto& inc = acc.incidents[0];
    CHECK(inc.end_step > inc.start_step);
    const int lanes = base.cells[inc.cell].n_lanes;
    bool lane_fraction = false;
    for (int blocked = 1; blocked <= 3; ++blocked) {
        lane_fraction = lane_fraction || std::abs(inc.remaining_fraction - remaining_lane_fraction(lanes, blocked)) < 1e-12;
    }
    CHECK(lane_fraction);

    const auto cw = sample_cw(base, 13, p, &spec);
    CHECK(spec.kind == Kind::CW);
    double cap_ratio_min = 1.0;
    for (std::size_t i = 0; i < base.num_cells(); ++i) {
        for (std::size_t t = 0; t < base.upstream_demand.size(); ++t) {
            if (base.ramps[i].on_ramp_max[t] > 0.0) {
                cap_ratio_min = std::min(cap_ratio_min, cw.ramps[i].on_ramp_max[t] / base.ramps[i].on_ramp_max[t]);
            }
        }
    }
    CHECK(cap_ratio_min < 1.0);
    CHECK(cap_ratio_min >= p.cw_factor_min - 1e-12);
}

TEST_CASE("rng draws are reproducible and in range", "[scenarios]") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    Rng c(1);
    for (int i = 0; i < 100; ++i) CHECK(c.below(7) < 7);
    CHECK(remaining_lane_fraction(4, 1) == 0.75);
}

TEST_CASE("invalid ensemble parameters are rejected", "[scenarios]") {
    EnsembleSpec s;
    s.params.severity_prob[0] = 0.9;
    CHECK_THROWS_AS(s.validate(), dwc::ConfigError);
    s = EnsembleSpec{};
    s.nv = -1;
    CHECK_THROWS_AS(s.validate(), dwc::ConfigError);
    CHECK_THROWS_AS(kind_from_string("XX"), dwc::ConfigError);
}
