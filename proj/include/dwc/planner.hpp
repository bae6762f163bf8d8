#pragma once

// Capacity planning: sizing, storage siting, validation against a scenario
// ensemble, and the four-step traffic-aware planning loop.

#include "dwc/conic.hpp"
#include "dwc/energy.hpp"
#include "dwc/grid.hpp"
#include "dwc/opf.hpp"
#include "dwc/scenarios.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dwc::planner {

// sum_t a E_t + b E_t^2
double cost_eq1(const std::vector<double>& demand_mwh, double a, double b);

struct PlanningDesign {
    std::vector<double> solar_mw;  // per bus
    std::vector<int> es_units;     // per bus
    double coupling_mw = 0.0;
    double capital_cost = 0.0;
    double daily_operational_cost = 0.0;
    double lifetime_operational_cost = 0.0;
    double total_cost = 0.0;

    double total_solar_mw() const;
    int total_es_units() const;
    double es_mwh(const grid::ESUnitSpec& unit) const { return total_es_units() * unit.e_unit_mwh; }
};

// Continuous counterpart used for relaxations and family means.
struct ContinuousDesign {
    std::vector<double> solar_mw;
    std::vector<double> es_units;
    double coupling_mw = 0.0;
    double total_cost = 0.0;

    double total_solar_mw() const;
    double total_es_units() const;
};

struct PlanningInputs {
    grid::GridSpec grid;
    energy::DemandProfile demand;
    std::vector<double> solar_availability;
    double loss_penalty = 0.1;
    conic::SolverOptions solver;
};

double capital_cost(const grid::CostSpec& costs, const std::vector<double>& solar_mw,
                    const std::vector<double>& es_units, double coupling_mw);

struct SizingOptions {
    bool integer = true;      // branch-and-bound on ES counts
    int node_limit = 64;
    // Nodes whose relaxation is within this relative margin of the
    // incumbent are pruned, so the result is optimal over the neighborhood
    // up to this gap.
    double gap_tolerance = 1e-3;
};

struct SizingResult {
    PlanningDesign design;
    ContinuousDesign relaxation;
    opf::OperationalSolution operation;
    int nodes = 0;
    // True when every node in the floor/ceil neighborhood was resolved
    // within the node limit.
    bool neighborhood_exhausted = true;
    // (integer cost - relaxed cost) / integer cost; relaxed cost bounds the
    // neighborhood optimum from below.
    double root_gap = 0.0;
};

// Solar, ES counts at `es_buses` and coupling M >= P_g(t) minimizing capital
// plus planning_periods * daily cost.
SizingResult solve_sizing(const PlanningInputs& inputs, const std::vector<int>& es_buses,
                          const SizingOptions& options = {});

struct SitingResult {
    double k_batt = 0.0;
    std::vector<double> placement;  // continuous allocation per bus
    double total_cost = 0.0;
    double solar_mw = 0.0;
    double coupling_mw = 0.0;
};

// Continuous allocation of exactly k_batt units over every bus not listed
// in grid.es_excluded.
SitingResult solve_siting(const PlanningInputs& inputs, double k_batt);

struct SweepResult {
    std::vector<SitingResult> curve;
    int best_index = -1;

    const SitingResult& best() const { return curve.at(best_index); }
};

SweepResult siting_sweep(const PlanningInputs& inputs, const std::vector<int>& k_values);

// Buses whose allocation reaches `threshold` units, ascending; the largest
// allocation is kept when none qualifies and units were placed.
std::vector<int> selected_buses(const SitingResult& siting, double threshold = 0.5);

struct ScenarioDemand {
    std::string name;
    scenarios::Kind kind = scenarios::Kind::NV;
    energy::DemandProfile demand;
};

struct ValidationOptions {
    // Full network with elastic rows instead of the system-level balance.
    bool strict = false;
    double shortfall_tolerance_mw = 1e-3;
    conic::SolverOptions solver;
};

struct ScenarioValidation {
    std::string name;
    bool feasible = false;
    double max_shortfall_mw = 0.0;
    double unserved_mwh = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ScenarioValidation> scenarios;
    double service_level_hat = 0.0;
    double threshold = 1.0;

    bool meets_threshold() const { return service_level_hat + 1e-12 >= threshold; }
};

ScenarioValidation validate_scenario(const PlanningDesign& design, const grid::GridSpec& grid,
                                     const ScenarioDemand& scenario, const std::vector<double>& solar_availability,
                                     const ValidationOptions& options = {});
ValidationReport validate_design(const PlanningDesign& design, const grid::GridSpec& grid,
                                 const std::vector<ScenarioDemand>& scenarios,
                                 const std::vector<double>& solar_availability, double threshold = 1.0,
                                 const ValidationOptions& options = {});

// Capital and operational cost of a fixed design on one demand profile.
PlanningDesign evaluate_design(const PlanningDesign& design, const PlanningInputs& inputs);

struct ScenarioCase {
    scenarios::ScenarioSpec spec;
    energy::DemandProfile demand;
    double peak_mw = 0.0;
    double energy_mwh = 0.0;
};

struct ScenarioDesign {
    std::string name;
    scenarios::Kind kind = scenarios::Kind::NV;
    ContinuousDesign design;
    double peak_mw = 0.0;
};

struct Algorithm1Options {
    std::vector<int> k_values;  // siting sweep; empty means 0..20
    double service_threshold = 1.0;
    double scale_increment = 0.05;
    int max_scale_iterations = 40;
    // Family whose means define the final design; empty picks the family
    // with the highest mean capital cost.
    std::string family;
    double siting_threshold = 0.5;
    // Integer branch-and-bound for each per-scenario sizing. Off by default:
    // per-scenario sizes are averaged and rounded afterwards.
    bool integer_scenario_sizing = false;
    ValidationOptions validation;
    // Aggregate demand and solar to blocks of this many steps for the
    // optimization problems (1 keeps the native step).
    int aggregation = 1;
    double loss_penalty = 0.1;
    // Branch-and-bound settings for the baseline sizing.
    SizingOptions sizing;
    std::function<void(const std::string&)> progress;
    // Per-scenario results persisted by the caller so an interrupted run
    // resumes; load returns false on a miss.
    std::function<bool(const ScenarioCase&, ScenarioDesign&)> load_cached;
    std::function<void(const ScenarioCase&, const ScenarioDesign&)> store_cached;
};

struct Algorithm1Result {
    SweepResult siting;
    std::vector<int> es_buses;
    std::vector<ScenarioDesign> scenario_designs;
    std::string family;
    ContinuousDesign family_mean;
    PlanningDesign final_design;
    ValidationReport validation;
    int scale_iterations = 0;
    PlanningDesign baseline_design;
};

// Inputs: baseline demand, per-scenario demands (already simulated), grid
// with line caps set, solar availability at the demand step.
Algorithm1Result run_algorithm1(const grid::GridSpec& grid, const energy::DemandProfile& baseline,
                                const std::vector<ScenarioCase>& cases, const std::vector<double>& solar_availability,
                                const Algorithm1Options& options = {});

struct ComparisonResult {
    PlanningDesign traffic_aware;
    PlanningDesign worst_case;
    double peak_mw = 0.0;
    double cost_gap_relative = 0.0;  // worst / aware - 1
    bool dominates = false;          // worst-case componentwise >= aware
};

// Sizes on the time-varying demand and on the flat profile of equal peak.
// A nonnegative peak_mw rescales the time-varying demand to that peak first.
ComparisonResult compare_designs(const PlanningInputs& inputs, const std::vector<int>& es_buses,
                                 const SizingOptions& options = {}, double peak_mw = -1.0);

}  // namespace dwc::planner
