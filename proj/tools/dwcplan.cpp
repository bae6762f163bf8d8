// dwcplan: command-line front end for the corridor -> demand -> planning
// pipeline. Exit codes: 0 ok, 2 config error, 3 infeasible, 4 solver failure,
// 1 anything else. Failures print one JSON object on stderr.

#include "dwc/case_study.hpp"
#include "dwc/errors.hpp"
#include "dwc/io.hpp"
#include "dwc/opf.hpp"
#include "dwc/planner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>

namespace fs = std::filesystem;
using namespace dwc;
using io::Json;
using io::Table;

namespace {

struct Context {
    std::string config;
    std::string out;
    bool quiet = false;
    std::string command;

    io::LoadedRun run;
    fs::path dir;
    Json outputs = Json::object();
    Json summary = Json::object();

    void log(const std::string& msg) const {
        if (!quiet) std::cerr << "[dwcplan] " << msg << "\n";
    }
    void write(const std::string& name, const Table& t) {
        t.write(dir / name);
        outputs[name] = io::digest(t.str());
    }
    void write(const std::string& name, const Json& j) {
        io::write_json_file(dir / name, j);
        outputs[name] = io::digest(j.dump(2) + "\n");
    }
    void finish() {
        write("summary.json", summary);
        io::write_json_file(dir / "manifest.json", io::make_manifest(run, command, outputs));
        log("wrote " + std::to_string(outputs.size()) + " files to " + dir.string());
    }
};

void load(Context& ctx) {
    ctx.run = io::load_configs(ctx.config);
    ctx.dir = ctx.out.empty() ? ctx.run.run.output_dir : fs::path(ctx.out);
    fs::create_directories(ctx.dir);
}

void require_corridor(const Context& ctx, const std::string& what) {
    if (!ctx.run.has_corridor) throw ConfigError("/corridor", what + " needs a corridor");
}

planner::PlanningInputs inputs_of(const Context& ctx, const energy::DemandProfile& demand) {
    planner::PlanningInputs in;
    in.grid = ctx.run.cs.grid;
    in.demand = demand;
    in.solar_availability = ctx.run.cs.solar_availability;
    in.loss_penalty = ctx.run.run.loss_penalty;
    in.solver = ctx.run.run.solver;
    const int agg = ctx.run.run.aggregation;
    if (agg > 1) {
        in.demand = energy::aggregate_time(demand, agg);
        std::vector<double> g(in.demand.steps(), 0.0);
        for (std::size_t t = 0; t < g.size(); ++t) {
            for (int k = 0; k < agg; ++k) g[t] += in.solar_availability[t * agg + k] / agg;
        }
        in.solar_availability = g;
    }
    return in;
}

planner::SizingOptions sizing_of(const Context& ctx) {
    planner::SizingOptions s;
    s.gap_tolerance = ctx.run.run.gap_tolerance;
    s.node_limit = ctx.run.run.node_limit;
    return s;
}

planner::ValidationOptions validation_of(const Context& ctx) {
    planner::ValidationOptions v;
    v.strict = ctx.run.run.strict_validation;
    v.shortfall_tolerance_mw = ctx.run.run.shortfall_tolerance_mw;
    v.solver = ctx.run.run.solver;
    return v;
}

std::vector<int> es_candidates(const grid::GridSpec& g) {
    std::vector<int> out;
    for (std::size_t b = 0; b < g.num_buses(); ++b) {
        if (std::find(g.es_excluded.begin(), g.es_excluded.end(), static_cast<int>(b)) == g.es_excluded.end()) {
            out.push_back(static_cast<int>(b));
        }
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& path) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(path, "expected a comma-separated list of integers, got '" + s + "'");
        }
    }
    return out;
}

std::vector<planner::ScenarioCase> ensemble_cases(const Context& ctx) {
    require_corridor(ctx, "the scenario ensemble");
    ctx.log("simulating " + std::to_string(ctx.run.run.ensemble.total()) + " scenarios");
    return case_study::simulate_ensemble(ctx.run.cs, ctx.run.run.ensemble);
}

std::vector<planner::ScenarioDemand> ensemble_demands(const Context& ctx,
                                                      const std::vector<planner::ScenarioCase>& cases) {
    std::vector<planner::ScenarioDemand> out;
    for (const auto& c : cases) out.push_back({c.spec.name(), c.spec.kind, inputs_of(ctx, c.demand).demand});
    return out;
}

Table design_table(const planner::PlanningDesign& d, const grid::ESUnitSpec& unit) {
    Table t({"bus", "solar_mw", "es_units", "es_mwh"});
    for (std::size_t b = 0; b < d.solar_mw.size(); ++b) {
        t.row().add(b).add(d.solar_mw[b]).add(d.es_units[b]).add(d.es_units[b] * unit.e_unit_mwh);
    }
    return t;
}

Json design_summary(const planner::PlanningDesign& d, const grid::ESUnitSpec& unit) {
    Json j = io::to_json(d);
    j["total_solar_mw"] = d.total_solar_mw();
    j["total_es_units"] = d.total_es_units();
    j["total_es_mwh"] = d.es_mwh(unit);
    return j;
}

Table validation_table(const planner::ValidationReport& r) {
    Table t({"scenario", "feasible", "max_shortfall_mw", "unserved_mwh"});
    for (const auto& s : r.scenarios) {
        t.row().add(s.name).add(s.feasible ? 1 : 0).add(s.max_shortfall_mw).add(s.unserved_mwh);
    }
    return t;
}

Json validation_summary(const planner::ValidationReport& r) {
    int feasible = 0;
    for (const auto& s : r.scenarios) feasible += s.feasible ? 1 : 0;
    return {{"scenarios", r.scenarios.size()},
            {"feasible", feasible},
            {"service_level", r.service_level_hat},
            {"threshold", r.threshold},
            {"meets_threshold", r.meets_threshold()}};
}

void sweep_tables(Context& ctx, const planner::SweepResult& sw) {
    Table curve({"k_batt", "total_cost_usd", "solar_mw", "coupling_mw"});
    Table place({"k_batt", "bus", "es_units"});
    for (const auto& s : sw.curve) {
        curve.row().add(s.k_batt).add(s.total_cost).add(s.solar_mw).add(s.coupling_mw);
        for (std::size_t b = 0; b < s.placement.size(); ++b) place.row().add(s.k_batt).add(b).add(s.placement[b]);
    }
    ctx.write("siting_curve.csv", curve);
    ctx.write("siting_placement.csv", place);
}

Json comparison_json(const planner::ComparisonResult& c, const grid::ESUnitSpec& unit) {
    return {{"peak_mw", c.peak_mw},
            {"traffic_aware", design_summary(c.traffic_aware, unit)},
            {"worst_case", design_summary(c.worst_case, unit)},
            {"cost_gap_relative", c.cost_gap_relative},
            {"dominates", c.dominates}};
}

Table comparison_table(const planner::ComparisonResult& c, const grid::ESUnitSpec& unit) {
    Table t({"metric", "traffic_aware", "worst_case", "relative_gap"});
    auto line = [&](const char* name, double a, double w) {
        t.row().add(name).add(a).add(w).add(a != 0.0 ? w / a - 1.0 : 0.0);
    };
    const auto& a = c.traffic_aware;
    const auto& w = c.worst_case;
    line("solar_mw", a.total_solar_mw(), w.total_solar_mw());
    line("es_units", a.total_es_units(), w.total_es_units());
    line("es_mwh", a.es_mwh(unit), w.es_mwh(unit));
    line("coupling_mw", a.coupling_mw, w.coupling_mw);
    line("capital_cost_usd", a.capital_cost, w.capital_cost);
    line("lifetime_operational_cost_usd", a.lifetime_operational_cost, w.lifetime_operational_cost);
    line("total_cost_usd", a.total_cost, w.total_cost);
    return t;
}

// ---- subcommands -----------------------------------------------------------

void cmd_simulate(Context& ctx, int scenario) {
    require_corridor(ctx, "simulate");
    corridor::CorridorConfig cfg = ctx.run.cs.corridor;
    std::string name = "baseline";
    if (scenario >= 0) {
        const auto ens = scenarios::generate_ensemble(cfg, ctx.run.run.ensemble);
        if (scenario >= static_cast<int>(ens.size())) throw ConfigError("/scenario", "no such scenario index");
        cfg = ens[scenario].config;
        name = ens[scenario].spec.name();
    }
    corridor::SimulationOptions sim;
    sim.strict = ctx.run.run.strict_validation;
    const auto traj = corridor::simulate(cfg, sim);
    Table t({"step", "time_h", "cell", "density_veh_per_mi", "speed_mph", "inflow_veh_per_h"});
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& s = traj.states[k];
        for (std::size_t i = 0; i < s.rho.size(); ++i) {
            t.row().add(k).add(k * traj.dt_h).add(i).add(s.rho[i]).add(s.v[i]).add(i < s.q.size() ? s.q[i] : 0.0);
        }
    }
    ctx.write("trajectory.csv", t);
    Table b({"step", "inflow_veh", "outflow_veh", "vehicles"});
    for (std::size_t k = 0; k < traj.inflow_veh.size(); ++k) {
        b.row().add(k).add(traj.inflow_veh[k]).add(traj.outflow_veh[k]).add(traj.vehicles(k + 1));
    }
    ctx.write("balance.csv", b);
    ctx.summary = {{"scenario", name},
                   {"cells", cfg.num_cells()},
                   {"steps", cfg.horizon_steps},
                   {"conservation_error", traj.conservation_error()},
                   {"clamp_events", traj.clamp_events}};
}

void cmd_demand(Context& ctx) {
    const auto& d = ctx.run.baseline;
    Table bus({"step", "time_h", "bus", "p_mw", "q_mvar"});
    for (std::size_t t = 0; t < d.steps(); ++t) {
        for (std::size_t b = 0; b < d.num_buses(); ++b) bus.row().add(t).add(t * d.dt_h).add(b).add(d.p_mw[b][t]).add(d.q_mvar[b][t]);
    }
    ctx.write("demand_bus.csv", bus);
    const auto tot = d.total_p();
    Table total({"step", "time_h", "p_total_mw"});
    for (std::size_t t = 0; t < tot.size(); ++t) total.row().add(t).add(t * d.dt_h).add(tot[t]);
    ctx.write("demand_total.csv", total);
    if (ctx.run.has_corridor) {
        corridor::SimulationOptions sim;
        sim.strict = ctx.run.run.strict_validation;
        const auto traj = corridor::simulate(ctx.run.cs.corridor, sim);
        const auto e = energy::cell_energy_table(traj, ctx.run.cs.vehicle, ctx.run.cs.fleet);
        Table heat({"step", "time_h", "cell", "energy_kwh"});
        for (std::size_t t = 0; t < e.steps(); ++t) {
            for (std::size_t c = 0; c < e.num_cells(); ++c) heat.row().add(t).add(t * e.dt_h).add(c).add(e.kwh[c][t]);
        }
        ctx.write("cell_energy_heatmap.csv", heat);
    }
    ctx.summary = {{"steps", d.steps()},
                   {"dt_h", d.dt_h},
                   {"peak_total_mw", d.peak_total_mw()},
                   {"energy_mwh", d.total_energy_mwh()}};
}

void cmd_site(Context& ctx, const std::string& k_list) {
    std::vector<int> ks = k_list.empty() ? ctx.run.run.k_values : parse_int_list(k_list, "--k");
    if (ks.empty()) {
        for (int k = 0; k <= 20; ++k) ks.push_back(k);
    }
    ctx.log("siting sweep over " + std::to_string(ks.size()) + " values");
    const auto sw = planner::siting_sweep(inputs_of(ctx, ctx.run.baseline), ks);
    sweep_tables(ctx, sw);
    const auto sel = planner::selected_buses(sw.best(), ctx.run.run.siting_threshold);
    ctx.summary = {{"best_k_batt", sw.best().k_batt}, {"best_total_cost_usd", sw.best().total_cost}, {"es_buses", sel}};
}

void cmd_size(Context& ctx, const std::string& bus_list) {
    const auto buses = bus_list.empty() ? es_candidates(ctx.run.cs.grid) : parse_int_list(bus_list, "--es-buses");
    const auto in = inputs_of(ctx, ctx.run.baseline);
    ctx.log("sizing on " + std::to_string(in.demand.steps()) + " steps");
    const auto r = planner::solve_sizing(in, buses, sizing_of(ctx));
    const auto& unit = ctx.run.cs.grid.es;
    ctx.write("design.csv", design_table(r.design, unit));
    ctx.write("design.json", io::to_json(r.design));
    const auto& op = r.operation;
    Table g({"step", "time_h", "p_g_mw", "q_g_mvar"});
    for (std::size_t t = 0; t < op.steps(); ++t) g.row().add(t).add(t * op.dt_h).add(op.p_g[t]).add(op.q_g[t]);
    ctx.write("grid_import.csv", g);
    Table disp({"step", "bus", "p_solar_mw", "p_ch_mw", "p_dis_mw", "e_mwh", "v_pu"});
    for (std::size_t t = 0; t < op.steps(); ++t) {
        for (std::size_t b = 0; b < op.p_ch.size(); ++b) {
            auto at = [&](const std::vector<std::vector<double>>& m) { return m.empty() || m[b].empty() ? 0.0 : m[b][t]; };
            const double v = op.v_pu2.empty() ? 1.0 : std::sqrt(at(op.v_pu2));
            disp.row().add(t).add(b).add(at(op.p_solar)).add(at(op.p_ch)).add(at(op.p_dis)).add(at(op.e_mwh)).add(v);
        }
    }
    ctx.write("dispatch.csv", disp);
    const auto cone = opf::cone_exactness_report(op);
    Table gap({"line", "from_bus", "to_bus", "step", "cone_gap_pu2"});
    for (std::size_t k = 0; k < cone.residual.size(); ++k) {
        for (std::size_t t = 0; t < cone.residual[k].size(); ++t) {
            gap.row().add(k).add(op.line_from[k]).add(op.line_to[k]).add(t).add(cone.residual[k][t]);
        }
    }
    ctx.write("cone_gap.csv", gap);
    ctx.summary = {{"design", design_summary(r.design, unit)},
                   {"flagged_lines", cone.flagged_lines},
                   {"nodes", r.nodes},
                   {"neighborhood_exhausted", r.neighborhood_exhausted},
                   {"root_gap", r.root_gap},
                   {"balance_residual_pu", op.balance_residual_pu},
                   {"max_cone_gap_pu2", op.max_cone_gap}};
}

void cmd_validate(Context& ctx, const std::string& design_path) {
    const auto design = io::design_from_json(io::read_json_file(design_path));
    if (design.solar_mw.size() != ctx.run.cs.grid.num_buses()) {
        throw ConfigError(design_path + "#/solar_mw", "needs one entry per grid bus");
    }
    const auto cases = ensemble_cases(ctx);
    const auto demands = ensemble_demands(ctx, cases);
    const auto in = inputs_of(ctx, ctx.run.baseline);
    const auto rep = planner::validate_design(design, ctx.run.cs.grid, demands, in.solar_availability,
                                              ctx.run.run.service_threshold, validation_of(ctx));
    ctx.write("validation.csv", validation_table(rep));
    ctx.summary = validation_summary(rep);
}

// Prices the time-varying demand against the flat profile of equal peak with
// no sizing decisions: coupling uncapped, no solar, no storage.
void compare_operational(Context& ctx) {
    const auto& g = ctx.run.cs.grid;
    const auto varying = inputs_of(ctx, ctx.run.baseline).demand;
    const double peak = ctx.run.run.compare_peak_mw >= 0.0 ? ctx.run.run.compare_peak_mw : varying.peak_total_mw();
    const auto flat = energy::flat_profile(varying, peak);
    auto price = [&](const energy::DemandProfile& d) {
        opf::OperationalProblem p;
        p.grid = g;
        p.grid.grid_p_max_mw = grid::kInf;
        p.demand = d;
        p.solar_availability.assign(d.steps(), 0.0);
        p.solar_mw.assign(g.num_buses(), 0.0);
        p.es_units.assign(g.num_buses(), 0.0);
        p.loss_penalty = ctx.run.run.loss_penalty;
        opf::SolveOptions so;
        so.solver = ctx.run.run.solver;
        return opf::solve(p, so);
    };
    auto direct = [&](const energy::DemandProfile& d) {
        const auto tot = d.total_p();
        std::vector<double> e(tot.size());
        for (std::size_t t = 0; t < tot.size(); ++t) e[t] = tot[t] * d.dt_h;
        return planner::cost_eq1(e, g.costs.b_g, g.costs.a_g);
    };
    const auto sv = price(varying);
    const auto sf = price(flat);
    const double ev = direct(varying);
    const double ef = direct(flat);
    Table t({"metric", "traffic_aware", "worst_case", "relative_gap"});
    auto line = [&](const char* name, double a, double w) {
        t.row().add(name).add(a).add(w).add(a != 0.0 ? w / a - 1.0 : 0.0);
    };
    line("peak_mw", varying.peak_total_mw(), flat.peak_total_mw());
    line("energy_mwh", varying.total_energy_mwh(), flat.total_energy_mwh());
    line("daily_cost_opf_usd", sv.operational_cost, sf.operational_cost);
    line("daily_cost_direct_usd", ev, ef);
    ctx.write("comparison.csv", t);
    ctx.summary = {{"mode", "operational"},
                   {"peak_mw", peak},
                   {"traffic_aware_cost_usd", sv.operational_cost},
                   {"worst_case_cost_usd", sf.operational_cost},
                   {"traffic_aware_cost_direct_usd", ev},
                   {"worst_case_cost_direct_usd", ef},
                   {"cost_reduction", 1.0 - sv.operational_cost / sf.operational_cost},
                   {"cost_reduction_direct", 1.0 - ev / ef}};
}

void cmd_compare(Context& ctx, const std::string& bus_list) {
    if (ctx.run.run.compare_mode == "operational") {
        compare_operational(ctx);
        return;
    }
    const auto buses = bus_list.empty() ? es_candidates(ctx.run.cs.grid) : parse_int_list(bus_list, "--es-buses");
    ctx.log("sizing traffic-aware and flat worst-case designs");
    const auto c = planner::compare_designs(inputs_of(ctx, ctx.run.baseline), buses, sizing_of(ctx),
                                            ctx.run.run.compare_peak_mw);
    ctx.write("comparison.csv", comparison_table(c, ctx.run.cs.grid.es));
    ctx.summary = comparison_json(c, ctx.run.cs.grid.es);
    ctx.summary["mode"] = "sizing";
}

void cmd_plan(Context& ctx) {
    const auto cases = ensemble_cases(ctx);
    const auto& rc = ctx.run.run;
    planner::Algorithm1Options opt;
    opt.k_values = rc.k_values;
    opt.service_threshold = rc.service_threshold;
    opt.scale_increment = rc.scale_increment;
    opt.max_scale_iterations = rc.max_scale_iterations;
    opt.family = rc.family;
    opt.siting_threshold = rc.siting_threshold;
    opt.validation = validation_of(ctx);
    opt.aggregation = rc.aggregation;
    opt.loss_penalty = rc.loss_penalty;
    opt.sizing = sizing_of(ctx);
    opt.progress = [&](const std::string& m) { ctx.log(m); };

    // Scenario sizes persist under cache/, keyed by resolved configuration
    // and scenario demand, so an interrupted run resumes.
    const fs::path cache = ctx.dir / "cache";
    fs::create_directories(cache);
    const std::string config_key = io::digest(ctx.run.resolved.dump());
    auto key_of = [&](const planner::ScenarioCase& c) {
        return io::digest(config_key + c.spec.name() + io::to_json(c.demand).dump());
    };
    auto file_of = [&](const planner::ScenarioCase& c) { return cache / (c.spec.name() + ".json"); };
    std::mutex log_mutex;
    opt.load_cached = [&](const planner::ScenarioCase& c, planner::ScenarioDesign& sd) {
        const fs::path f = file_of(c);
        if (!fs::exists(f)) return false;
        try {
            const Json j = io::read_json_file(f);
            if (j.at("key").get<std::string>() != key_of(c)) return false;
            sd.name = j.at("name").get<std::string>();
            sd.kind = scenarios::kind_from_string(j.at("kind").get<std::string>());
            sd.peak_mw = j.at("peak_mw").get<double>();
            sd.design.solar_mw = j.at("solar_mw").get<std::vector<double>>();
            sd.design.es_units = j.at("es_units").get<std::vector<double>>();
            sd.design.coupling_mw = j.at("coupling_mw").get<double>();
            sd.design.total_cost = j.at("total_cost_usd").get<double>();
        } catch (const std::exception&) {
            return false;  // unreadable entries are recomputed
        }
        std::lock_guard<std::mutex> lock(log_mutex);
        ctx.log("resumed " + c.spec.name() + " from cache");
        return true;
    };
    opt.store_cached = [&](const planner::ScenarioCase& c, const planner::ScenarioDesign& sd) {
        Json j = {{"key", key_of(c)},
                  {"name", sd.name},
                  {"kind", scenarios::to_string(sd.kind)},
                  {"peak_mw", sd.peak_mw},
                  {"solar_mw", sd.design.solar_mw},
                  {"es_units", sd.design.es_units},
                  {"coupling_mw", sd.design.coupling_mw},
                  {"total_cost_usd", sd.design.total_cost}};
        const fs::path tmp = file_of(c).string() + ".tmp";
        io::write_json_file(tmp, j);
        fs::rename(tmp, file_of(c));
    };

    const auto r = planner::run_algorithm1(ctx.run.cs.grid, ctx.run.baseline, cases, ctx.run.cs.solar_availability, opt);
    const auto& g = ctx.run.cs.grid;

    Table sc({"scenario", "kind", "peak_mw", "solar_mw", "es_units", "es_mwh", "coupling_mw", "capital_cost_usd"});
    for (const auto& s : r.scenario_designs) {
        const auto& d = s.design;
        sc.row()
            .add(s.name)
            .add(scenarios::to_string(s.kind))
            .add(s.peak_mw)
            .add(d.total_solar_mw())
            .add(d.total_es_units())
            .add(d.total_es_units() * g.es.e_unit_mwh)
            .add(d.coupling_mw)
            .add(planner::capital_cost(g.costs, d.solar_mw, d.es_units, d.coupling_mw));
    }
    ctx.write("scenario_designs.csv", sc);
    sweep_tables(ctx, r.siting);
    ctx.write("final_placement.csv", design_table(r.final_design, g.es));
    ctx.write("validation.csv", validation_table(r.validation));
    ctx.write("design.json", io::to_json(r.final_design));

    ctx.log("comparing against the flat worst case");
    const auto c = planner::compare_designs(inputs_of(ctx, ctx.run.baseline), r.es_buses, sizing_of(ctx),
                                            rc.compare_peak_mw);
    ctx.write("comparison.csv", comparison_table(c, g.es));

    ctx.summary = {{"scenarios", cases.size()},
                   {"es_buses", r.es_buses},
                   {"best_k_batt", r.siting.best().k_batt},
                   {"family", r.family},
                   {"scale_iterations", r.scale_iterations},
                   {"scale", 1.0 + rc.scale_increment * r.scale_iterations},
                   {"final_design", design_summary(r.final_design, g.es)},
                   {"baseline_design", design_summary(r.baseline_design, g.es)},
                   {"validation", validation_summary(r.validation)},
                   {"comparison", comparison_json(c, g.es)}};
}

// ---- error reporting -------------------------------------------------------

int fail(int code, const std::string& type, const std::string& message, Json extra = Json::object()) {
    Json e = {{"type", type}, {"message", message}, {"exit_code", code}};
    for (auto it = extra.begin(); it != extra.end(); ++it) e[it.key()] = it.value();
    std::cerr << Json{{"error", e}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dwcplan: traffic-aware planning for dynamic wireless charging microgrids"};
    app.set_version_flag("--version", std::string(io::kToolVersion));
    app.require_subcommand(1);
    Context ctx;
    for (int i = 0; i < argc; ++i) ctx.command += (i ? " " : "") + std::string(argv[i]);

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", ctx.config, "Run configuration or manifest (JSON)")->required();
        sub->add_option("-o,--out", ctx.out, "Output directory (overrides output_dir)");
        sub->add_flag("-q,--quiet", ctx.quiet, "No progress messages");
    };
    int scenario = -1;
    std::string k_list, bus_list, design_path;

    auto* simulate = app.add_subcommand("simulate", "Corridor simulation to trajectory tables");
    common(simulate);
    simulate->add_option("--scenario", scenario, "Ensemble member index instead of the baseline");
    auto* demand = app.add_subcommand("demand", "Bus demand profile and cell energy heatmap");
    common(demand);
    auto* site = app.add_subcommand("site", "Storage siting sweep");
    common(site);
    site->add_option("--k", k_list, "Comma-separated ES unit totals");
    auto* size = app.add_subcommand("size", "Single sizing on the baseline demand");
    common(size);
    size->add_option("--es-buses", bus_list, "Comma-separated buses allowed to host ES");
    auto* plan = app.add_subcommand("plan", "Full four-step planning loop");
    common(plan);
    auto* validate = app.add_subcommand("validate", "Fixed design against the scenario ensemble");
    common(validate);
    validate->add_option("--design", design_path, "Design JSON (as written by size or plan)")->required();
    auto* compare = app.add_subcommand("compare", "Traffic-aware versus flat worst-case");
    common(compare);
    compare->add_option("--es-buses", bus_list, "Comma-separated buses allowed to host ES");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, "usage", e.what());
    }

    try {
        load(ctx);
        if (*simulate) cmd_simulate(ctx, scenario);
        if (*demand) cmd_demand(ctx);
        if (*site) cmd_site(ctx, k_list);
        if (*size) cmd_size(ctx, bus_list);
        if (*plan) cmd_plan(ctx);
        if (*validate) cmd_validate(ctx, design_path);
        if (*compare) cmd_compare(ctx, bus_list);
        ctx.finish();
    } catch (const ConfigError& e) {
        return fail(2, "config", e.detail(), {{"path", e.path()}});
    } catch (const TopologyError& e) {
        return fail(2, "topology", e.what());
    } catch (const DomainError& e) {
        return fail(2, "domain", e.what());
    } catch (const InfeasibleError& e) {
        return fail(3, "infeasible", e.what(), {{"families", e.families()}});
    } catch (const SolverError& e) {
        return fail(4, "solver", e.what());
    } catch (const AssemblyError& e) {
        return fail(4, "assembly", e.what(), {{"constraint", e.constraint()}});
    } catch (const std::exception& e) {
        return fail(1, "internal", e.what());
    }
    return 0;
}
