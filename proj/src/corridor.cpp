#include "dwc/corridor.hpp"

#include "dwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dwc::corridor {

namespace {

std::string join(std::string_view base, const std::string& leaf) {
    return std::string(base) + "/" + leaf;
}

void check_rho(double rho, const CellParams& cell) {
    if (!(rho >= 0.0) || rho > cell.rho_jam) {
        throw DomainError("density " + std::to_string(rho) + " outside [0, " + std::to_string(cell.rho_jam) + "]");
    }
}

// Evaluations for densities above a temporarily reduced jam density
// saturate at the jam density; no vehicles are removed.
double capped(double rho, const CellParams& cell) { return std::min(rho, cell.rho_jam); }

}  // namespace

void CellParams::validate(std::string_view path) const {
    auto fail = [&](const std::string& leaf, const std::string& msg) { throw ConfigError(join(path, leaf), msg); };
    if (!(length_mi > 0.0) || !std::isfinite(length_mi)) fail("length_mi", "must be positive");
    if (!(v_ff > 0.0) || !std::isfinite(v_ff)) fail("v_ff_mph", "must be positive");
    if (!(w > 0.0) || !std::isfinite(w)) fail("w_mph", "must be positive");
    if (!(rho_crit > 0.0)) fail("rho_crit_veh_per_mi", "must be positive");
    if (!(rho_jam > rho_crit) || !std::isfinite(rho_jam)) fail("rho_jam_veh_per_mi", "must exceed rho_crit");
    if (n_lanes < 1) fail("n_lanes", "must be at least 1");
}

double fundamental_flow(double rho, const CellParams& cell) {
    check_rho(rho, cell);
    return rho <= cell.rho_crit ? cell.v_ff * rho : cell.w * (cell.rho_jam - rho);
}

double cell_demand(double rho, const CellParams& cell) {
    check_rho(rho, cell);
    return rho <= cell.rho_crit ? cell.v_ff * rho : cell.q_cap();
}

double cell_supply(double rho, const CellParams& cell) {
    check_rho(rho, cell);
    return rho <= cell.rho_crit ? cell.q_cap() : cell.w * (cell.rho_jam - rho);
}

double interface_flow(double upstream_rho, const CellParams& upstream, double downstream_rho,
                      const CellParams& downstream) {
    return std::min(cell_demand(upstream_rho, upstream), cell_supply(downstream_rho, downstream));
}

double density_update(double rho, double dt_h, double dx_mi, double q_in, double q_out) {
    if (!(dx_mi > 0.0)) throw DomainError("cell length must be positive");
    return rho + dt_h / dx_mi * (q_in - q_out);
}

double cell_speed(double rho, const CellParams& cell) {
    if (rho <= 0.0) return cell.v_ff;
    return fundamental_flow(capped(rho, cell), cell) / rho;
}

CellParams CorridorConfig::effective_cell(std::size_t i, int interval) const {
    CellParams c = cells[i];
    for (const auto& inc : incidents) {
        if (static_cast<std::size_t>(inc.cell) == i && interval >= inc.start_step && interval < inc.end_step) {
            c.rho_crit *= inc.remaining_fraction;
            c.rho_jam *= inc.remaining_fraction;
        }
    }
    return c;
}

void CorridorConfig::validate() const {
    const std::size_t n = cells.size();
    if (n == 0) throw ConfigError("/cells", "corridor needs at least one cell");
    if (!(dt_h > 0.0)) throw ConfigError("/dt_h", "must be positive");
    if (substeps < 1) throw ConfigError("/substeps", "must be at least 1");
    if (horizon_steps < 1) throw ConfigError("/horizon_steps", "must be at least 1");
    const auto T = static_cast<std::size_t>(horizon_steps);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string path = "/cells/" + std::to_string(i);
        cells[i].validate(path);
        const double reach = std::max(cells[i].v_ff, cells[i].w) * dt_h;
        if (reach > cells[i].length_mi * (1.0 + 1e-12)) {
            throw ConfigError(path + "/length_mi", "CFL condition violated: max(v_ff, w) * dt = " +
                                                       std::to_string(reach) + " mi exceeds cell length " +
                                                       std::to_string(cells[i].length_mi) + " mi");
        }
    }
    if (initial_rho.size() != n) throw ConfigError("/initial_rho_veh_per_mi", "needs one value per cell");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(initial_rho[i] >= 0.0) || initial_rho[i] > cells[i].rho_jam) {
            throw ConfigError("/initial_rho_veh_per_mi/" + std::to_string(i), "outside [0, rho_jam]");
        }
    }
    if (ramps.size() != n) throw ConfigError("/ramps", "needs one schedule per cell");
    for (std::size_t i = 0; i < n; ++i) {
        const std::string path = "/ramps/" + std::to_string(i);
        const RampSchedule& r = ramps[i];
        auto series = [&](const std::vector<double>& v, const char* leaf, double hi) {
            if (v.size() != T) {
                throw ConfigError(path + "/" + leaf, "needs " + std::to_string(T) + " entries, got " +
                                                         std::to_string(v.size()));
            }
            for (std::size_t t = 0; t < T; ++t) {
                if (!(v[t] >= 0.0) || v[t] > hi) {
                    throw ConfigError(path + "/" + leaf + "/" + std::to_string(t), "out of range");
                }
            }
        };
        const double inf = std::numeric_limits<double>::infinity();
        series(r.on_ramp_demand, "on_ramp_demand_veh_per_h", inf);
        series(r.off_ramp_split, "off_ramp_split", 1.0);
        series(r.on_ramp_max, "on_ramp_max_veh_per_h", inf);
        series(r.off_ramp_max, "off_ramp_max_veh_per_h", inf);
    }
    auto boundary = [&](const std::vector<double>& v, const char* path) {
        if (v.size() != T) throw ConfigError(path, "needs " + std::to_string(T) + " entries");
        for (std::size_t t = 0; t < T; ++t) {
            if (!(v[t] >= 0.0)) throw ConfigError(std::string(path) + "/" + std::to_string(t), "must be nonnegative");
        }
    };
    boundary(upstream_demand, "/upstream_demand_veh_per_h");
    boundary(downstream_supply, "/downstream_supply_veh_per_h");
    for (std::size_t k = 0; k < incidents.size(); ++k) {
        const Incident& inc = incidents[k];
        const std::string path = "/incidents/" + std::to_string(k);
        if (inc.cell < 0 || static_cast<std::size_t>(inc.cell) >= n) throw ConfigError(path + "/cell", "no such cell");
        if (inc.start_step < 0 || inc.end_step < inc.start_step || inc.end_step > horizon_steps) {
            throw ConfigError(path, "window outside the horizon");
        }
        if (!(inc.remaining_fraction > 0.0) || inc.remaining_fraction > 1.0) {
            throw ConfigError(path + "/remaining_fraction", "must lie in (0, 1]");
        }
    }
}

StepResult step(const CorridorState& state, const StepInputs& in, double dt_h) {
    const std::size_t n = in.cells.size();
    if (state.rho.size() != n) throw DomainError("state and cell counts differ");
    StepResult out;
    out.off_ramp_flow.assign(n, 0.0);
    out.on_ramp_flow.assign(n, 0.0);
    std::vector<double> q(n + 1, 0.0);

    std::vector<double> demand(n), supply(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = state.rho[i];
        if (r < 0.0) throw DomainError("negative density in cell " + std::to_string(i));
        const double rc = capped(r, in.cells[i]);
        demand[i] = cell_demand(rc, in.cells[i]);
        supply[i] = cell_supply(rc, in.cells[i]);
    }

    // Interface j feeds cell j from cell j-1; j = 0 is the source, j = n the sink.
    for (std::size_t j = 0; j <= n; ++j) {
        const double d = j == 0 ? in.upstream_demand : demand[j - 1];
        const double s = j == n ? in.downstream_supply : supply[j];
        double beta = 0.0;
        if (j > 0 && in.cells[j - 1].has_off_ramp) beta = in.off_ramp_split[j - 1];
        double total = d;
        if (beta < 1.0) total = std::min(d, s / (1.0 - beta));
        q[j] = (1.0 - beta) * total;
        if (j > 0 && beta > 0.0) out.off_ramp_flow[j - 1] = std::min(beta * total, in.off_ramp_max[j - 1]);
        if (j < n && in.cells[j].has_on_ramp) {
            const double residual = std::max(0.0, supply[j] - q[j]);
            out.on_ramp_flow[j] = std::min({in.on_ramp_demand[j], in.on_ramp_max[j], residual});
        }
    }

    CorridorState next;
    next.t = state.t + 1;
    next.rho.resize(n);
    next.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double inflow = q[i] + out.on_ramp_flow[i];
        const double outflow = q[i + 1] + out.off_ramp_flow[i];
        double r = density_update(state.rho[i], dt_h, in.cells[i].length_mi, inflow, outflow);
        const double hi = std::max(in.cells[i].rho_jam, state.rho[i]);
        const double clamped = std::clamp(r, 0.0, hi);
        out.clamped_veh += (clamped - r) * in.cells[i].length_mi;
        next.rho[i] = clamped;
        next.v[i] = cell_speed(clamped, in.cells[i]);
        out.inflow_veh += out.on_ramp_flow[i] * dt_h;
        out.outflow_veh += out.off_ramp_flow[i] * dt_h;
    }
    out.inflow_veh += q[0] * dt_h;
    out.outflow_veh += q[n] * dt_h;
    next.q = std::move(q);
    out.state = std::move(next);
    return out;
}

StepInputs step_inputs(const CorridorConfig& config, int interval) {
    const std::size_t n = config.num_cells();
    StepInputs in;
    in.cells.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        in.cells.push_back(config.effective_cell(i, interval));
        const RampSchedule& r = config.ramps[i];
        in.on_ramp_demand.push_back(r.on_ramp_demand[interval]);
        in.off_ramp_split.push_back(r.off_ramp_split[interval]);
        in.on_ramp_max.push_back(r.on_ramp_max[interval]);
        in.off_ramp_max.push_back(r.off_ramp_max[interval]);
    }
    in.upstream_demand = config.upstream_demand[interval];
    in.downstream_supply = config.downstream_supply[interval];
    return in;
}

CorridorState initial_state(const CorridorConfig& config) {
    CorridorState s;
    s.t = 0;
    s.rho = config.initial_rho;
    s.q.assign(config.num_cells() + 1, 0.0);
    s.v.resize(config.num_cells());
    for (std::size_t i = 0; i < config.num_cells(); ++i) s.v[i] = cell_speed(s.rho[i], config.effective_cell(i, 0));
    return s;
}

double CorridorTrajectory::vehicles(std::size_t t) const {
    double total = 0.0;
    const auto& rho = states.at(t).rho;
    for (std::size_t i = 0; i < rho.size(); ++i) total += rho[i] * cell_length_mi[i];
    return total;
}

double CorridorTrajectory::conservation_error() const {
    if (states.empty()) return 0.0;
    double in = 0.0;
    double out = 0.0;
    for (double v : inflow_veh) in += v;
    for (double v : outflow_veh) out += v;
    const double n0 = vehicles(0);
    const double nT = vehicles(states.size() - 1);
    const double scale = std::max(1.0, n0 + in);
    return std::abs((nT - n0) - (in - out)) / scale;
}

CorridorTrajectory simulate(const CorridorConfig& config, const SimulationOptions& options) {
    config.validate();
    CorridorTrajectory traj;
    traj.dt_h = config.interval_h();
    traj.boundary_inflow = config.upstream_demand;
    traj.boundary_supply = config.downstream_supply;
    for (const auto& c : config.cells) traj.cell_length_mi.push_back(c.length_mi);
    traj.states.reserve(config.horizon_steps + 1);
    traj.states.push_back(initial_state(config));

    CorridorState cur = traj.states.back();
    for (int t = 0; t < config.horizon_steps; ++t) {
        const StepInputs in = step_inputs(config, t);
        double in_veh = 0.0;
        double out_veh = 0.0;
        std::vector<double> q_sum(config.num_cells() + 1, 0.0);
        for (int k = 0; k < config.substeps; ++k) {
            StepResult r = step(cur, in, config.dt_h);
            in_veh += r.inflow_veh;
            out_veh += r.outflow_veh;
            if (r.clamped_veh != 0.0) {
                traj.clamped_veh += std::abs(r.clamped_veh);
                ++traj.clamp_events;
                if (options.strict) {
                    throw DomainError("density clamped during interval " + std::to_string(t) + " (strict mode)");
                }
            }
            for (std::size_t j = 0; j < q_sum.size(); ++j) q_sum[j] += r.state.q[j];
            cur = std::move(r.state);
        }
        cur.t = t + 1;
        // Recorded interface flows are interval means.
        for (double& v : q_sum) v /= config.substeps;
        CorridorState rec = cur;
        rec.q = std::move(q_sum);
        traj.states.push_back(std::move(rec));
        traj.inflow_veh.push_back(in_veh);
        traj.outflow_veh.push_back(out_veh);
    }
    return traj;
}

}  // namespace dwc::corridor
