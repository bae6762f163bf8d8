#pragma once

// Operational dispatch over a daily horizon on the radial network, using the
// branch-flow model with its second-order cone relaxation.
//
// Orientation: line k feeds bus j = to[k] from its parent i = from[k].
//   sum_{c child of j} P_c = P_k - r_k l_k - p_load_j + p_gen_j
//   v_j = v_i - 2 (r_k P_k + x_k Q_k) + (r_k^2 + x_k^2) l_k
//   || (2 P_k, 2 Q_k, l_k - v_i) || <= l_k + v_i
// Network quantities are per unit internally; reported in MW / MVAr / MWh,
// except v and l which stay in pu^2.

#include "dwc/conic.hpp"
#include "dwc/energy.hpp"
#include "dwc/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dwc::opf {

struct OperationalProblem {
    grid::GridSpec grid;
    energy::DemandProfile demand;
    std::vector<double> solar_availability;  // gamma per step, in [0, 1]
    std::vector<double> solar_mw;            // installed capacity per bus
    std::vector<double> es_units;            // units per bus, may be fractional
    double coupling_mw = grid::kInf;         // cap on grid import
    // Small $/MWh weight on ohmic losses; keeps the relaxation tight when
    // import is zero and curtailment makes surplus energy free.
    double loss_penalty = 0.1;

    std::size_t steps() const { return demand.steps(); }
    // Fills empty capacity vectors with zeros and checks shapes and ranges.
    void normalize();
    void validate() const;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool fixed() const { return lo == hi; }
};

// Capacities treated as decisions. A fixed range acts as a constant.
struct DesignSpace {
    std::vector<Range> solar_mw;   // per bus; ignored for buses without solar
    std::vector<Range> es_units;   // per bus
    std::optional<double> es_total;  // sum of units equals this value
    bool coupling_decision = true;   // epigraph M >= P_g(t)
    double coupling_max_mw = grid::kInf;
};

struct AssemblyOptions {
    const DesignSpace* design = nullptr;
    // Capital costs plus planning_periods * daily cost; otherwise daily cost.
    bool planning_objective = false;
};

// Variable indices of an assembled program; -1 marks a constant.
struct Layout {
    std::size_t steps = 0;
    int num_buses = 0;
    int num_lines = 0;
    std::vector<int> p_g, q_g;                            // [t]
    std::vector<std::vector<int>> p_line, q_line, l_line;  // [line][t]
    std::vector<std::vector<int>> v;                       // [bus][t], -1 at slack
    std::vector<std::vector<int>> p_sol, q_sol;            // [bus][t], -1 without solar
    std::vector<std::vector<int>> p_ch, p_dis, q_es;       // [bus][t], -1 without ES
    std::vector<std::vector<int>> e;                       // [bus][t], t = 0..steps
    std::vector<int> solar_cap;                            // [bus]
    std::vector<int> es_n;                                 // [bus]
    int coupling = -1;
    std::vector<bool> has_es;
    std::vector<double> fixed_solar_mw;  // value when solar_cap is -1
    std::vector<double> fixed_es_units;  // value when es_n is -1
    double fixed_coupling_mw = grid::kInf;
};

struct Assembly {
    conic::Program program;
    Layout layout;
    grid::Network network;
    double base_mva = 100.0;
    double dt_h = 0.0;
};

// Throws AssemblyError naming the offending constraint on shape mismatches.
Assembly assemble(const OperationalProblem& problem, const AssemblyOptions& options = {});

struct OperationalSolution {
    conic::Status status = conic::Status::NumericalError;
    int iterations = 0;
    double dt_h = 0.0;
    double base_mva = 100.0;
    double program_objective = 0.0;  // solver objective, $ in program units
    double operational_cost = 0.0;   // daily cost without the loss penalty
    std::vector<double> p_g, q_g;
    std::vector<std::vector<double>> p_solar, q_solar;
    std::vector<std::vector<double>> p_ch, p_dis, q_es;
    std::vector<std::vector<double>> e_mwh;  // steps + 1 entries per bus
    std::vector<std::vector<double>> v_pu2;
    std::vector<std::vector<double>> p_line_mw, q_line_mvar;
    std::vector<std::vector<double>> l_pu2;
    std::vector<int> line_from, line_to;
    std::vector<double> solar_mw;
    std::vector<double> es_units;
    double coupling_mw = 0.0;
    double balance_residual_pu = 0.0;  // max |row| over the balance families
    double max_cone_gap = 0.0;         // max l v_i - (P^2 + Q^2), pu^2

    bool ok() const { return status == conic::Status::Optimal || status == conic::Status::OptimalInaccurate; }
    std::size_t steps() const { return p_g.size(); }
    double peak_import_mw() const;
};

OperationalSolution extract(const Assembly& assembly, const conic::Solution& sol, const grid::CostSpec& costs);

// Daily cost sum_t dt (a P_g^2 + b P_g + c + lambda sum (P_ch + P_dis)).
double operational_cost(const OperationalSolution& sol, const grid::CostSpec& costs);

struct SolveOptions {
    conic::SolverOptions solver;
    // Re-solve an elastic copy after a failure and name the families that
    // needed relaxation.
    bool diagnose = true;
};

// Throws InfeasibleError (with constraint families) or SolverError.
OperationalSolution solve(const OperationalProblem& problem, const SolveOptions& options = {});
OperationalSolution solve_assembly(const Assembly& assembly, const grid::CostSpec& costs,
                                   const SolveOptions& options = {});

struct ConeReport {
    std::vector<std::vector<double>> residual;  // [line][t], pu^2
    double max_residual = 0.0;
    int max_line = -1;
    int max_step = -1;
    std::vector<int> flagged_lines;  // lines with residual above threshold
};

ConeReport cone_exactness_report(const OperationalSolution& sol, double threshold = 1e-5);

struct ElasticReport {
    bool feasible = true;
    double total_violation = 0.0;
    std::vector<std::pair<std::string, double>> families;  // violation per family, descending
    std::string summary() const;
};

// Relaxes every linear row with nonnegative slacks and minimizes their sum.
ElasticReport elastic_diagnosis(const conic::Program& program, const conic::SolverOptions& options = {},
                                double tolerance = 1e-6);

}  // namespace dwc::opf
