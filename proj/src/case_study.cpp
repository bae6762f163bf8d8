#include "dwc/case_study.hpp"

#include "dwc/errors.hpp"
#include "dwc/planner.hpp"

#include <cmath>
#include <numbers>

namespace dwc::case_study {

namespace {

double bump(double h, double center, double width) {
    const double z = (h - center) / width;
    return std::exp(-0.5 * z * z);
}

constexpr int kOnRamps[] = {3, 9, 15, 21, 27, 33};
constexpr int kOffRamps[] = {6, 12, 18, 24, 30, 37};
constexpr double kBlockLengths[] = {0.347, 0.412, 0.368, 0.390};  // sums to 1.517 mi

}  // namespace

corridor::CorridorConfig synthetic_corridor(int horizon_steps, int substeps) {
    corridor::CorridorConfig cfg;
    cfg.horizon_steps = horizon_steps;
    cfg.substeps = substeps;
    cfg.dt_h = 24.0 / horizon_steps / substeps;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
        corridor::CellParams c;
        c.length_mi = kBlockLengths[i % 4];
        c.v_ff = 65.0;
        // Lane drop to three lanes over cells 32-35.
        c.n_lanes = (i >= 32 && i <= 35) ? 3 : 4;
        c.rho_crit = 2000.0 / 65.0 * c.n_lanes;
        c.rho_jam = 180.0 * c.n_lanes;
        c.w = c.q_cap() / (c.rho_jam - c.rho_crit);
        cfg.cells.push_back(c);
    }
    for (int i : kOnRamps) cfg.cells[i].has_on_ramp = true;
    for (int i : kOffRamps) cfg.cells[i].has_off_ramp = true;

    const auto T = static_cast<std::size_t>(horizon_steps);
    const double step_h = 24.0 / horizon_steps;
    cfg.ramps.assign(n, {});
    for (int i = 0; i < n; ++i) {
        auto& r = cfg.ramps[i];
        r.on_ramp_demand.assign(T, 0.0);
        r.off_ramp_split.assign(T, 0.0);
        r.on_ramp_max.assign(T, cfg.cells[i].has_on_ramp ? 1500.0 : 0.0);
        r.off_ramp_max.assign(T, cfg.cells[i].has_off_ramp ? 1500.0 : 0.0);
    }
    cfg.upstream_demand.resize(T);
    cfg.downstream_supply.assign(T, std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < T; ++t) {
        const double h = (t + 0.5) * step_h;
        const double am = bump(h, 7.5, 1.4);
        const double pm = bump(h, 17.5, 1.8);
        cfg.upstream_demand[t] = 1500.0 + 3600.0 * am + 4100.0 * pm;
        for (int k = 0; k < 6; ++k) {
            const int on = kOnRamps[k];
            // Earlier ramps load the morning peak, later ones the evening peak.
            const double w_am = 1.0 - 0.1 * k;
            const double w_pm = 0.5 + 0.1 * k;
            cfg.ramps[on].on_ramp_demand[t] = 120.0 + 650.0 * w_am * am + 650.0 * w_pm * pm;
            cfg.ramps[kOffRamps[k]].off_ramp_split[t] = 0.07 + 0.03 * pm;
        }
    }
    cfg.initial_rho.assign(n, 0.0);
    for (int i = 0; i < n; ++i) cfg.initial_rho[i] = cfg.upstream_demand[0] / cfg.cells[i].v_ff;
    return cfg;
}

grid::GridSpec twelve_bus_grid() {
    grid::GridSpec g;
    for (int i = 0; i < 12; ++i) {
        grid::BusSpec b;
        b.id = i;
        b.kind = i == 0 ? grid::BusKind::Slack : (i == 1 ? grid::BusKind::Junction : grid::BusKind::Roadway);
        b.has_solar = i == 0;
        if (i >= 2) {
            for (int c = 0; c < 4; ++c) b.mapped_cells.push_back(4 * (i - 2) + c);
        }
        g.buses.push_back(b);
    }
    g.lines.push_back(grid::make_line(0, 1, 5.0));
    g.lines.push_back(grid::make_line(1, 2, 2.0));
    for (int i = 2; i < 6; ++i) g.lines.push_back(grid::make_line(i, i + 1, 1.5));
    g.lines.push_back(grid::make_line(1, 7, 2.0));
    for (int i = 7; i < 11; ++i) g.lines.push_back(grid::make_line(i, i + 1, 1.5));
    return g;
}

std::vector<int> twelve_bus_cell_map(std::size_t num_cells) {
    std::vector<int> m(num_cells);
    for (std::size_t i = 0; i < num_cells; ++i) m[i] = 2 + static_cast<int>(i / 4);
    return m;
}

std::vector<double> solar_profile(std::size_t steps, double dt_h, double peak) {
    std::vector<double> g(steps, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        const double h = std::fmod((t + 0.5) * dt_h, 24.0);
        if (h > 6.0 && h < 18.0) g[t] = peak * std::pow(std::sin(std::numbers::pi * (h - 6.0) / 12.0), 1.5);
    }
    return g;
}

energy::DemandProfile baseline_demand(const CaseStudy& cs) { return demand_for(cs, cs.corridor); }

energy::DemandProfile demand_for(const CaseStudy& cs, const corridor::CorridorConfig& corridor) {
    corridor::SimulationOptions opt;
    opt.strict = cs.strict;
    const auto traj = corridor::simulate(corridor, opt);
    std::vector<int> map(corridor.num_cells(), -1);
    for (const auto& b : cs.grid.buses) {
        for (int c : b.mapped_cells) {
            if (c < 0 || static_cast<std::size_t>(c) >= map.size()) {
                throw ConfigError("/grid/buses/" + std::to_string(b.id) + "/mapped_cells", "unknown cell");
            }
            map[c] = b.id;
        }
    }
    for (std::size_t c = 0; c < map.size(); ++c) {
        if (map[c] < 0) throw ConfigError("/grid/buses", "cell " + std::to_string(c) + " is not mapped to a bus");
    }
    return energy::build_demand_profile(traj, cs.vehicle, cs.fleet, map, cs.grid.num_buses(), cs.power_factor);
}

std::vector<planner::ScenarioCase> simulate_ensemble(const CaseStudy& cs, const scenarios::EnsembleSpec& spec) {
    const auto ensemble = scenarios::generate_ensemble(cs.corridor, spec);
    std::vector<planner::ScenarioCase> out;
    out.reserve(ensemble.size());
    for (const auto& sc : ensemble) {
        planner::ScenarioCase c;
        c.spec = sc.spec;
        c.demand = demand_for(cs, sc.config);
        c.peak_mw = c.demand.peak_total_mw();
        c.energy_mwh = c.demand.total_energy_mwh();
        out.push_back(std::move(c));
    }
    return out;
}

CaseStudy default_case_study() {
    CaseStudy cs;
    cs.corridor = synthetic_corridor();
    cs.grid = twelve_bus_grid();
    cs.solar_availability = solar_profile(cs.corridor.horizon_steps, cs.corridor.interval_h());
    const auto demand = baseline_demand(cs);
    grid::size_ampacity(cs.grid, demand.p_mw, demand.q_mvar, cs.ampacity_utilization);
    return cs;
}

grid::GridSpec three_bus_grid() {
    grid::GridSpec g;
    for (int i = 0; i < 3; ++i) {
        grid::BusSpec b;
        b.id = i;
        b.kind = i == 0 ? grid::BusKind::Slack : grid::BusKind::Junction;
        g.buses.push_back(b);
    }
    for (int i = 1; i < 3; ++i) {
        grid::LineSpec l;
        l.from = 0;
        l.to = i;
        l.length_mi = 1.0;
        l.ampacity_pu = 1.0;  // lossless lines still need a finite current cap
        g.lines.push_back(l);
    }
    g.costs.a_g = 0.002;
    g.costs.b_g = 40.0;
    g.costs.c_g = 0.0;
    return g;
}

namespace {

energy::DemandProfile hourly(const std::vector<double>& bus1, const std::vector<double>& bus2) {
    energy::DemandProfile p;
    p.dt_h = 1.0;
    p.power_factor = 1.0;
    p.p_mw = {std::vector<double>(bus1.size(), 0.0), bus1, bus2};
    p.q_mvar.assign(3, std::vector<double>(bus1.size(), 0.0));
    p.cell_to_bus = {};
    return p;
}

double procurement_cost(const energy::DemandProfile& p) {
    const auto tot = p.total_p();
    std::vector<double> e(tot.size());
    for (std::size_t t = 0; t < tot.size(); ++t) e[t] = tot[t] * p.dt_h;
    return planner::cost_eq1(e, 40.0, 0.002);
}

energy::DemandProfile case2_with_floor(double floor_mw) {
    std::vector<double> b1(24), b2(24);
    for (int t = 0; t < 24; ++t) {
        const double h = t;
        const double s1 = std::max({0.75 * bump(h, 8.0, 1.5), bump(h, 12.0, 1.2), 0.55 * bump(h, 18.0, 1.5)});
        const double s2 = std::max({0.55 * bump(h, 8.0, 1.5), bump(h, 12.0, 1.2), 0.75 * bump(h, 18.0, 1.5)});
        b1[t] = floor_mw + (10.0 - floor_mw) * s1;
        b2[t] = floor_mw + (10.0 - floor_mw) * s2;
    }
    return hourly(b1, b2);
}

}  // namespace

energy::DemandProfile motivating_case1() { return hourly(std::vector<double>(24, 10.0), std::vector<double>(24, 10.0)); }

energy::DemandProfile motivating_case2(double reduction) {
    if (!(reduction > 0.0) || !(reduction < 1.0)) throw ConfigError("/reduction", "must lie in (0, 1)");
    const double c1 = procurement_cost(motivating_case1());
    auto reduction_at = [&](double floor_mw) { return 1.0 - procurement_cost(case2_with_floor(floor_mw)) / c1; };
    double lo = 0.0;   // largest reduction
    double hi = 10.0;  // flat profile, no reduction
    if (reduction_at(lo) < reduction) throw ConfigError("/reduction", "not reachable with the built-in load shape");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reduction_at(mid) > reduction) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return case2_with_floor(0.5 * (lo + hi));
}

}  // namespace dwc::case_study
