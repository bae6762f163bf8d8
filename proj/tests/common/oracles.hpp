#pragma once

// Independent reference evaluations shared by the unit tests and the
// acceptance binary. Nothing here calls into the code under test except for
// plain data types.

#include "dwc/corridor.hpp"
#include "dwc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dwc::oracles {

// Three 0.5 mi cells, on-ramp into cell 1, off-ramp out of cell 2, five
// steps of 15 s with every boundary series varying.
inline corridor::CorridorConfig three_cells() {
    corridor::CorridorConfig cfg;
    for (int i = 0; i < 3; ++i) {
        corridor::CellParams c;
        c.length_mi = 0.5;
        c.v_ff = 60.0;
        c.w = 20.0;
        c.rho_crit = 40.0;
        c.rho_jam = 160.0;
        cfg.cells.push_back(c);
    }
    cfg.cells[1].has_on_ramp = true;
    cfg.cells[2].has_off_ramp = true;
    cfg.dt_h = 1.0 / 240.0;
    cfg.substeps = 1;
    cfg.horizon_steps = 5;
    cfg.initial_rho = {30.0, 55.0, 120.0};
    cfg.ramps.assign(3, {});
    for (auto& r : cfg.ramps) {
        r.on_ramp_demand.assign(5, 0.0);
        r.off_ramp_split.assign(5, 0.0);
        r.on_ramp_max.assign(5, 0.0);
        r.off_ramp_max.assign(5, 0.0);
    }
    cfg.ramps[1].on_ramp_demand = {600, 900, 300, 1200, 800};
    cfg.ramps[1].on_ramp_max.assign(5, 1000.0);
    cfg.ramps[2].off_ramp_split = {0.1, 0.2, 0.3, 0.2, 0.1};
    cfg.ramps[2].off_ramp_max.assign(5, 350.0);
    cfg.upstream_demand = {1800, 2600, 2200, 1000, 2500};
    cfg.downstream_supply = {2000, 900, 1500, 2400, 600};
    return cfg;
}

struct UnrolledStep {
    double rho[3];
    double q_in;   // boundary inflow into cell 0
    double q_out;  // mainline outflow of cell 2
};

// Hand transcription of the cell update with ramps for three_cells():
//   D = min(v_ff rho, q_cap), S = min(q_cap, w (rho_jam - rho))
//   f = min(D_up, S_down / (1 - beta)); mainline (1 - beta) f, exit beta f capped
//   r = min(demand_r, cap_r, S_down - mainline into the cell)
//   rho' = rho + dt/dx (in - out)
inline std::vector<UnrolledStep> unrolled_three_cells(const corridor::CorridorConfig& cfg) {
    double r0 = cfg.initial_rho[0], r1 = cfg.initial_rho[1], r2 = cfg.initial_rho[2];
    const double vf = 60.0, w = 20.0, rc = 40.0, rj = 160.0, qc = vf * rc, k = cfg.dt_h / 0.5;
    auto D = [&](double r) { return std::min(vf * r, qc); };
    auto S = [&](double r) { return std::min(qc, w * (rj - r)); };
    std::vector<UnrolledStep> out;
    for (int t = 0; t < 5; ++t) {
        const double up = cfg.upstream_demand[t];
        const double down = cfg.downstream_supply[t];
        const double beta = cfg.ramps[2].off_ramp_split[t];
        const double f0 = std::min(up, S(r0));
        const double f1 = std::min(D(r0), S(r1));
        const double on1 = std::min({cfg.ramps[1].on_ramp_demand[t], 1000.0, std::max(0.0, S(r1) - f1)});
        const double f2 = std::min(D(r1), S(r2));
        const double total3 = std::min(D(r2), down / (1.0 - beta));
        const double f3 = (1.0 - beta) * total3;
        const double off2 = std::min(beta * total3, 350.0);
        const double n0 = r0 + k * (f0 - f1);
        const double n1 = r1 + k * (f1 + on1 - f2);
        const double n2 = r2 + k * (f2 - f3 - off2);
        r0 = n0;
        r1 = n1;
        r2 = n2;
        out.push_back({{r0, r1, r2}, f0, f3});
    }
    return out;
}

// Exact branch flow for one line feeding a load (P, Q) in pu from v0 = 1:
// l = (P01^2 + Q01^2) / v0, P01 = P + r l, Q01 = Q + x l.
struct ExactFlow {
    double p01, l, v1;
};

inline ExactFlow exact_two_bus(double p, double q, double r, double x) {
    double l = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double P = p + r * l;
        const double Q = q + x * l;
        l = P * P + Q * Q;
    }
    const double P = p + r * l;
    const double Q = q + x * l;
    return {P, l, 1.0 - 2.0 * (r * P + x * Q) + (r * r + x * x) * l};
}

struct TwoBusOracle {
    double best = std::numeric_limits<double>::infinity();
    double best_charge_mw = 0.0;
    // Largest cost change to a neighboring grid point; bounds how far the
    // continuous optimum can sit below the grid optimum under convexity.
    double slack = 0.0;
    int points = 0;
};

// Two steps, one ES unit at bus 1 of a single line. Net charge c at t = 0
// (negative: discharge) returns at t = 1 with the round-trip efficiency, so
// periodicity holds by construction. Net charge runs over a 0.1 MW grid;
// every point is solved with the exact AC equations.
inline TwoBusOracle brute_force_two_bus(const grid::GridSpec& g, double r_pu, double x_pu,
                                        const std::vector<double>& load_mw) {
    const double base = g.base_mva;
    const double eta2 = g.es.eta_ch * g.es.eta_dis;
    const double vlo = g.buses[1].v_min_pu * g.buses[1].v_min_pu;
    const double vhi = g.buses[1].v_max_pu * g.buses[1].v_max_pu;
    auto day_cost = [&](double c, bool& feasible) {
        const double ch0 = std::max(c, 0.0), dis0 = std::max(-c, 0.0);
        const double dis1 = ch0 * eta2, ch1 = dis0 / eta2;
        feasible = ch0 <= g.es.p_ch_max + 1e-12 && dis0 <= g.es.p_dis_max + 1e-12 &&
                   ch1 <= g.es.p_ch_max + 1e-12 && dis1 <= g.es.p_dis_max + 1e-12;
        const double net_load[2] = {load_mw[0] + ch0 - dis0, load_mw[1] + ch1 - dis1};
        double cost = g.costs.cycling_penalty * (ch0 + dis0 + ch1 + dis1);
        for (int t = 0; t < 2; ++t) {
            const ExactFlow f = exact_two_bus(net_load[t] / base, 0.0, r_pu, x_pu);
            feasible = feasible && f.v1 >= vlo && f.v1 <= vhi && f.l <= g.lines[0].ampacity_pu;
            const double pg = f.p01 * base;
            cost += g.costs.a_g * pg * pg + g.costs.b_g * pg + g.costs.c_g;
        }
        return cost;
    };
    TwoBusOracle o;
    std::vector<double> costs;
    int best_i = -1;
    const int n = static_cast<int>(std::floor(g.es.p_ch_max / 0.1 + 1e-9));
    for (int i = -n; i <= n; ++i) {
        bool ok = false;
        const double c = day_cost(0.1 * i, ok);
        costs.push_back(ok ? c : std::numeric_limits<double>::infinity());
        ++o.points;
        if (ok && c < o.best) {
            o.best = c;
            o.best_charge_mw = 0.1 * i;
            best_i = static_cast<int>(costs.size()) - 1;
        }
    }
    for (int j : {best_i - 1, best_i + 1}) {
        if (best_i >= 0 && j >= 0 && j < static_cast<int>(costs.size()) && std::isfinite(costs[j])) {
            o.slack = std::max(o.slack, costs[j] - o.best);
        }
    }
    return o;
}

}  // namespace dwc::oracles
