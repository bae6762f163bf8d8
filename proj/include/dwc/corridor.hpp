#pragma once

// Cell transmission model of a freeway segment with on/off-ramps.
// Units: miles, hours, vehicles. Densities are per-direction totals.

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace dwc::corridor {

struct CellParams {
    double length_mi = 0.0;
    double v_ff = 0.0;      // mph
    double w = 0.0;         // mph, congested wave speed
    double rho_crit = 0.0;  // veh/mi
    double rho_jam = 0.0;   // veh/mi
    int n_lanes = 1;
    bool has_on_ramp = false;
    bool has_off_ramp = false;

    double q_cap() const { return rho_crit * v_ff; }
    // Throws ConfigError naming `path` when an invariant fails.
    void validate(std::string_view path = {}) const;
};

// Piecewise affine fundamental diagram Q(rho).
double fundamental_flow(double rho, const CellParams& cell);
// Sending ability of a cell: Q(rho) below critical density, q_cap above.
double cell_demand(double rho, const CellParams& cell);
// Receiving ability of a cell: q_cap below critical density, Q(rho) above.
double cell_supply(double rho, const CellParams& cell);
// Mainline flow across the boundary of two adjacent cells without ramps.
double interface_flow(double upstream_rho, const CellParams& upstream, double downstream_rho,
                      const CellParams& downstream);
// rho + dt/dx (q_in - q_out)
double density_update(double rho, double dt_h, double dx_mi, double q_in, double q_out);
// Mean speed Q(rho)/rho, v_ff on an empty cell.
double cell_speed(double rho, const CellParams& cell);

// Per-cell ramp series, one entry per recorded interval.
struct RampSchedule {
    std::vector<double> on_ramp_demand;  // veh/h
    std::vector<double> off_ramp_split;  // fraction of the cell's sending flow
    std::vector<double> on_ramp_max;     // veh/h
    std::vector<double> off_ramp_max;    // veh/h
};

// Lane blocking: rho_crit and rho_jam of `cell` scale by `remaining_fraction`
// for intervals [start_step, end_step).
struct Incident {
    int cell = 0;
    int start_step = 0;
    int end_step = 0;
    double remaining_fraction = 1.0;
};

struct CorridorConfig {
    std::vector<CellParams> cells;
    double dt_h = 1.0 / 240.0;  // CTM step
    int substeps = 20;          // CTM steps per recorded interval
    int horizon_steps = 288;    // recorded intervals
    std::vector<double> initial_rho;
    std::vector<RampSchedule> ramps;          // one per cell
    std::vector<double> upstream_demand;      // veh/h per interval
    std::vector<double> downstream_supply;    // veh/h per interval, +inf allowed
    std::vector<Incident> incidents;

    std::size_t num_cells() const { return cells.size(); }
    double interval_h() const { return dt_h * substeps; }
    // Cell parameters in effect during recorded interval `step`.
    CellParams effective_cell(std::size_t i, int step) const;
    // Checks shapes, ranges and the CFL condition max(v_ff, w) dt <= dx.
    void validate() const;
};

// Ramp, boundary and cell data for one CTM step.
struct StepInputs {
    std::vector<CellParams> cells;
    std::vector<double> on_ramp_demand;
    std::vector<double> off_ramp_split;
    std::vector<double> on_ramp_max;
    std::vector<double> off_ramp_max;
    double upstream_demand = 0.0;
    double downstream_supply = std::numeric_limits<double>::infinity();
};

struct CorridorState {
    int t = 0;
    std::vector<double> rho;  // per cell
    std::vector<double> q;    // per interface 0..N, flows that produced this state
    std::vector<double> v;    // per cell, mph
};

struct StepResult {
    CorridorState state;
    std::vector<double> on_ramp_flow;   // per cell, veh/h
    std::vector<double> off_ramp_flow;  // per cell, veh/h
    double inflow_veh = 0.0;   // upstream boundary plus on-ramps
    double outflow_veh = 0.0;  // downstream boundary plus off-ramps
    double clamped_veh = 0.0;  // mass removed or added by clamping to [0, rho_jam]
};

StepResult step(const CorridorState& state, const StepInputs& inputs, double dt_h);

struct CorridorTrajectory {
    std::vector<CorridorState> states;  // horizon_steps + 1 snapshots at interval boundaries
    double dt_h = 0.0;                  // recorded interval
    std::vector<double> boundary_inflow;  // veh/h per interval, upstream demand offered
    std::vector<double> boundary_supply;  // veh/h per interval, downstream supply offered
    std::vector<double> inflow_veh;       // vehicles entering during each interval
    std::vector<double> outflow_veh;      // vehicles leaving during each interval
    std::vector<double> cell_length_mi;
    double clamped_veh = 0.0;
    int clamp_events = 0;

    double vehicles(std::size_t t) const;
    // |vehicles(T) - vehicles(0) - (in - out)| / max(1, scale)
    double conservation_error() const;
};

struct SimulationOptions {
    // Any clamping becomes a DomainError.
    bool strict = false;
};

StepInputs step_inputs(const CorridorConfig& config, int interval);
CorridorState initial_state(const CorridorConfig& config);
CorridorTrajectory simulate(const CorridorConfig& config, const SimulationOptions& options = {});

}  // namespace dwc::corridor
