#include "dwc/energy.hpp"

#include "dwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dwc::energy {

void VehicleParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("/vehicle/") + name, "must be positive");
    };
    positive(eta_drive, "eta_drive");
    if (eta_drive > 1.0) throw ConfigError("/vehicle/eta_drive", "must lie in (0, 1]");
    positive(c_d, "c_d");
    positive(c_rr, "c_rr");
    positive(frontal_area_m2, "frontal_area_m2");
    positive(rho_air, "rho_air_kg_per_m3");
    positive(mass_kg, "mass_kg");
    positive(g, "g_m_per_s2");
    positive(p_aux_kw, "p_aux_kw");
    positive(e_battery_kwh, "e_battery_kwh");
    if (!(soc_mile >= 0.0) || soc_mile > 1.0) throw ConfigError("/vehicle/soc_mile", "must lie in [0, 1]");
}

void FleetScaling::validate() const {
    if (!(truck_share >= 0.0) || truck_share > 1.0) throw ConfigError("/fleet/truck_share", "must lie in [0, 1]");
    if (!(rightmost_lane_share >= 0.0) || rightmost_lane_share > 1.0) {
        throw ConfigError("/fleet/rightmost_lane_share", "must lie in [0, 1]");
    }
}

double drive_power(double v_mps, const VehicleParams& vp) {
    if (!(v_mps >= 0.0)) throw DomainError("speed must be nonnegative, got " + std::to_string(v_mps));
    const double aero = 0.5 * vp.c_d * vp.frontal_area_m2 * vp.rho_air * v_mps * v_mps * v_mps;
    const double rolling = vp.c_rr * vp.mass_kg * vp.g * v_mps;
    return (aero + rolling) / vp.eta_drive / 1000.0;
}

double vehicle_energy(double v_mps, const VehicleParams& vp, double dt_h) {
    if (!(dt_h >= 0.0)) throw DomainError("timestep must be nonnegative");
    return (drive_power(v_mps, vp) + vp.p_aux_kw) * dt_h;
}

double recharge_energy_per_vehicle_mile(const VehicleParams& vp) { return vp.soc_mile * vp.e_battery_kwh; }

double cell_coil_energy(double rho_hev, double v_mps, double cell_len_mi, const VehicleParams& vp, double dt_h) {
    if (!(rho_hev >= 0.0)) throw DomainError("HEV density must be nonnegative");
    if (!(cell_len_mi > 0.0)) throw DomainError("cell length must be positive");
    const double count = rho_hev * cell_len_mi;
    const double e_drive = vehicle_energy(v_mps, vp, dt_h) * count;
    return e_drive + vp.soc_mile * cell_len_mi * vp.e_battery_kwh * count;
}

double hev_density(double total_rho, const FleetScaling& fs) {
    return total_rho * fs.truck_share * fs.rightmost_lane_share;
}

double CellEnergyTable::total_kwh() const {
    double s = 0.0;
    for (const auto& row : kwh) s += std::accumulate(row.begin(), row.end(), 0.0);
    return s;
}

CellEnergyTable cell_energy_table(const corridor::CorridorTrajectory& traj, const VehicleParams& vp,
                                  const FleetScaling& fs, const std::vector<double>& soc_mile_schedule) {
    if (traj.states.empty()) throw DomainError("empty trajectory");
    const std::size_t T = traj.states.size() - 1;
    const std::size_t n = traj.cell_length_mi.size();
    if (!soc_mile_schedule.empty() && soc_mile_schedule.size() != T) {
        throw ConfigError("/soc_mile_schedule", "needs one entry per interval");
    }
    CellEnergyTable table;
    table.dt_h = traj.dt_h;
    table.kwh.assign(n, std::vector<double>(T, 0.0));
    VehicleParams p = vp;
    for (std::size_t t = 0; t < T; ++t) {
        if (!soc_mile_schedule.empty()) p.soc_mile = soc_mile_schedule[t];
        // Energy of interval t uses the snapshot at its start.
        const auto& st = traj.states[t];
        for (std::size_t i = 0; i < n; ++i) {
            const double rho = hev_density(st.rho[i], fs);
            table.kwh[i][t] = cell_coil_energy(rho, st.v[i] * kMphToMps, traj.cell_length_mi[i], p, traj.dt_h);
        }
    }
    return table;
}

std::vector<double> DemandProfile::total_p() const {
    std::vector<double> tot(steps(), 0.0);
    for (const auto& row : p_mw) {
        for (std::size_t t = 0; t < row.size(); ++t) tot[t] += row[t];
    }
    return tot;
}

double DemandProfile::peak_total_mw() const {
    const auto tot = total_p();
    return tot.empty() ? 0.0 : *std::max_element(tot.begin(), tot.end());
}

double DemandProfile::total_energy_mwh() const {
    const auto tot = total_p();
    return std::accumulate(tot.begin(), tot.end(), 0.0) * dt_h;
}

void DemandProfile::validate() const {
    if (!(dt_h > 0.0)) throw ConfigError("/demand/dt_h", "must be positive");
    if (q_mvar.size() != p_mw.size()) throw ConfigError("/demand/q_mvar", "bus count differs from p_mw");
    const std::size_t T = steps();
    for (std::size_t b = 0; b < p_mw.size(); ++b) {
        if (p_mw[b].size() != T || q_mvar[b].size() != T) {
            throw ConfigError("/demand/p_mw/" + std::to_string(b), "ragged time axis");
        }
        for (std::size_t t = 0; t < T; ++t) {
            if (!(p_mw[b][t] >= 0.0) || !std::isfinite(p_mw[b][t])) {
                throw ConfigError("/demand/p_mw/" + std::to_string(b) + "/" + std::to_string(t),
                                  "must be finite and nonnegative");
            }
        }
    }
}

double reactive_ratio(double power_factor) {
    if (!(power_factor > 0.0) || power_factor > 1.0) throw ConfigError("/power_factor", "must lie in (0, 1]");
    return std::tan(std::acos(power_factor));
}

DemandProfile aggregate_to_buses(const CellEnergyTable& table, const std::vector<int>& cell_to_bus,
                                 std::size_t num_buses, double power_factor) {
    if (cell_to_bus.size() != table.num_cells()) {
        throw ConfigError("/cell_to_bus", "maps " + std::to_string(cell_to_bus.size()) + " cells, corridor has " +
                                              std::to_string(table.num_cells()));
    }
    const double k = reactive_ratio(power_factor);
    const std::size_t T = table.steps();
    DemandProfile prof;
    prof.dt_h = table.dt_h;
    prof.power_factor = power_factor;
    prof.cell_to_bus = cell_to_bus;
    prof.p_mw.assign(num_buses, std::vector<double>(T, 0.0));
    for (std::size_t i = 0; i < cell_to_bus.size(); ++i) {
        const int b = cell_to_bus[i];
        if (b < 0 || static_cast<std::size_t>(b) >= num_buses) {
            throw ConfigError("/cell_to_bus/" + std::to_string(i), "cell mapped to unknown bus " + std::to_string(b));
        }
        for (std::size_t t = 0; t < T; ++t) prof.p_mw[b][t] += table.kwh[i][t] / table.dt_h / 1000.0;
    }
    prof.q_mvar = prof.p_mw;
    for (auto& row : prof.q_mvar) {
        for (double& v : row) v *= k;
    }
    return prof;
}

DemandProfile build_demand_profile(const corridor::CorridorTrajectory& traj, const VehicleParams& vp,
                                   const FleetScaling& fs, const std::vector<int>& cell_to_bus,
                                   std::size_t num_buses, double power_factor) {
    return aggregate_to_buses(cell_energy_table(traj, vp, fs), cell_to_bus, num_buses, power_factor);
}

DemandProfile aggregate_time(const DemandProfile& profile, int factor) {
    if (factor < 1) throw ConfigError("/aggregation", "factor must be at least 1");
    const std::size_t T = profile.steps();
    if (T % static_cast<std::size_t>(factor) != 0) {
        throw ConfigError("/aggregation", "horizon of " + std::to_string(T) + " steps is not divisible by " +
                                              std::to_string(factor));
    }
    DemandProfile out = profile;
    out.dt_h = profile.dt_h * factor;
    const std::size_t Tn = T / factor;
    auto reduce = [&](const std::vector<std::vector<double>>& in) {
        std::vector<std::vector<double>> res(in.size(), std::vector<double>(Tn, 0.0));
        for (std::size_t b = 0; b < in.size(); ++b) {
            for (std::size_t t = 0; t < T; ++t) res[b][t / factor] += in[b][t] / factor;
        }
        return res;
    };
    out.p_mw = reduce(profile.p_mw);
    out.q_mvar = reduce(profile.q_mvar);
    return out;
}

DemandProfile flat_profile(const DemandProfile& shape, double peak_mw) {
    DemandProfile out = shape;
    const std::size_t B = shape.num_buses();
    const std::size_t T = shape.steps();
    const auto tot = shape.total_p();
    std::vector<double> split(B, B > 0 ? 1.0 / B : 0.0);
    if (!tot.empty()) {
        const std::size_t tp = static_cast<std::size_t>(std::max_element(tot.begin(), tot.end()) - tot.begin());
        if (tot[tp] > 0.0) {
            for (std::size_t b = 0; b < B; ++b) split[b] = shape.p_mw[b][tp] / tot[tp];
        }
    }
    const double k = reactive_ratio(shape.power_factor);
    for (std::size_t b = 0; b < B; ++b) {
        out.p_mw[b].assign(T, peak_mw * split[b]);
        out.q_mvar[b].assign(T, peak_mw * split[b] * k);
    }
    return out;
}

}  // namespace dwc::energy
