#pragma once

// Bundled configurations: a synthetic 40-cell freeway with a lane-drop
// bottleneck feeding a 12-bus radial microgrid, and the 3-bus motivating
// example.

#include "dwc/corridor.hpp"
#include "dwc/energy.hpp"
#include "dwc/grid.hpp"
#include "dwc/planner.hpp"
#include "dwc/scenarios.hpp"

#include <vector>

namespace dwc::case_study {

struct CaseStudy {
    corridor::CorridorConfig corridor;
    grid::GridSpec grid;
    energy::VehicleParams vehicle;
    energy::FleetScaling fleet;
    std::vector<double> solar_availability;  // per recorded interval
    double power_factor = 0.95;
    double ampacity_utilization = 0.6;
    bool strict = false;  // corridor clamping is an error
};

// 40 cells over 15.2 mi, 4 lanes with a 3-lane section near the downstream
// end, six on-ramps and six off-ramps, double commuter peak.
corridor::CorridorConfig synthetic_corridor(int horizon_steps = 288, int substeps = 20);

// Bus 0 coupling + solar, bus 1 junction, buses 2-6 and 7-11 two roadway
// feeders. Line caps are unset (see size_ampacity).
grid::GridSpec twelve_bus_grid();

// Cell i feeds roadway bus 2 + i / 4.
std::vector<int> twelve_bus_cell_map(std::size_t num_cells = 40);

// Clear-sky bell between 06:00 and 18:00, peak 0.85, sampled at interval
// midpoints.
std::vector<double> solar_profile(std::size_t steps, double dt_h, double peak = 0.85);

// Synthetic case with line caps sized on its baseline demand.
CaseStudy default_case_study();

// Baseline demand of a case (simulate + energy + aggregation).
energy::DemandProfile baseline_demand(const CaseStudy& cs);

// Demand of a single corridor realization on the case's grid.
energy::DemandProfile demand_for(const CaseStudy& cs, const corridor::CorridorConfig& corridor);

// Samples the ensemble around the case corridor and builds every demand.
std::vector<planner::ScenarioCase> simulate_ensemble(const CaseStudy& cs, const scenarios::EnsembleSpec& spec);

// Three buses: coupling bus 0 feeding load buses 1 and 2 over lossless
// lines; no solar or storage.
grid::GridSpec three_bus_grid();

// Hourly, 24 steps, 20 MW split evenly across buses 1 and 2.
energy::DemandProfile motivating_case1();

// Hourly, 24 steps. Bus 1 carries the morning peak and bus 2 the evening
// peak; both reach 10 MW at hour 12. The off-peak floor is chosen so the
// procurement cost is `reduction` below case 1.
energy::DemandProfile motivating_case2(double reduction = 0.233);

}  // namespace dwc::case_study
