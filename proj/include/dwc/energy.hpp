#pragma once

// Traffic state -> dynamic wireless charging energy.
// The corridor side is in mph/miles; conversion to SI happens only inside
// drive_power via kMphToMps.

#include "dwc/corridor.hpp"

#include <vector>

namespace dwc::energy {

inline constexpr double kMphToMps = 0.44704;

// Heavy electric vehicle constants (class-8 truck defaults).
struct VehicleParams {
    double eta_drive = 0.92;
    double c_d = 0.65;
    double c_rr = 0.0068;
    double frontal_area_m2 = 10.2;
    double rho_air = 1.225;   // kg/m^3
    double mass_kg = 30500.0;
    double g = 9.8;           // m/s^2
    double p_aux_kw = 7.5;
    double e_battery_kwh = 311.0;
    double soc_mile = 0.0015;  // fraction of battery per mile

    void validate() const;
};

struct FleetScaling {
    double truck_share = 0.12;
    double rightmost_lane_share = 0.90;

    void validate() const;
};

// (0.5 Cd A rho_air v^3 + Crr m g v) / eta, in kW.
double drive_power(double v_mps, const VehicleParams& vp);
// (drive_power + p_aux) dt, in kWh.
double vehicle_energy(double v_mps, const VehicleParams& vp, double dt_h);
// SoC_mile * E_battery, kWh per vehicle-mile.
double recharge_energy_per_vehicle_mile(const VehicleParams& vp);
// vehicle_energy * (rho dx) + soc_mile dx E_battery (rho dx), in kWh.
double cell_coil_energy(double rho_hev, double v_mps, double cell_len_mi, const VehicleParams& vp, double dt_h);
double hev_density(double total_rho, const FleetScaling& fs);

// Cell x interval coil energy.
struct CellEnergyTable {
    double dt_h = 0.0;
    std::vector<std::vector<double>> kwh;  // [cell][t]

    std::size_t num_cells() const { return kwh.size(); }
    std::size_t steps() const { return kwh.empty() ? 0 : kwh.front().size(); }
    double total_kwh() const;
};

// Optional per-interval SoC_mile override; empty keeps vp.soc_mile.
CellEnergyTable cell_energy_table(const corridor::CorridorTrajectory& traj, const VehicleParams& vp,
                                  const FleetScaling& fs, const std::vector<double>& soc_mile_schedule = {});

struct DemandProfile {
    double dt_h = 0.0;
    std::vector<std::vector<double>> p_mw;    // [bus][t]
    std::vector<std::vector<double>> q_mvar;  // [bus][t]
    std::vector<int> cell_to_bus;
    double power_factor = 0.95;

    std::size_t num_buses() const { return p_mw.size(); }
    std::size_t steps() const { return p_mw.empty() ? 0 : p_mw.front().size(); }
    std::vector<double> total_p() const;
    double peak_total_mw() const;
    double total_energy_mwh() const;
    void validate() const;
};

// tan(acos(pf)) for a lagging power factor in (0, 1].
double reactive_ratio(double power_factor);

DemandProfile aggregate_to_buses(const CellEnergyTable& table, const std::vector<int>& cell_to_bus,
                                 std::size_t num_buses, double power_factor);
DemandProfile build_demand_profile(const corridor::CorridorTrajectory& traj, const VehicleParams& vp,
                                   const FleetScaling& fs, const std::vector<int>& cell_to_bus,
                                   std::size_t num_buses, double power_factor);

// Mean power over blocks of `factor` intervals; steps must divide evenly.
DemandProfile aggregate_time(const DemandProfile& profile, int factor);

// Constant-in-time profile whose total equals `peak_mw` at every step. The
// split across buses is the one at the step of peak total load; a shape with
// no load falls back to an even split.
DemandProfile flat_profile(const DemandProfile& shape, double peak_mw);

}  // namespace dwc::energy
