// Python extension. Structured values cross the boundary as JSON text in the
// same schemas the CLI reads, so the Python layer needs no mirror types.

#include "dwc/case_study.hpp"
#include "dwc/errors.hpp"
#include "dwc/io.hpp"
#include "dwc/opf.hpp"
#include "dwc/planner.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace dwc;
using io::Json;

namespace {

Json matrix(const std::vector<std::vector<double>>& m) {
    Json out = Json::array();
    for (const auto& row : m) out.push_back(row);
    return out;
}

// inf is not JSON; null stands in for it, as in the config schemas.
Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string builtin(const std::string& name) {
    if (name == "synthetic_corridor") return io::to_json(case_study::synthetic_corridor()).dump();
    if (name == "twelve_bus_grid") return io::to_json(case_study::twelve_bus_grid()).dump();
    if (name == "three_bus_grid") return io::to_json(case_study::three_bus_grid()).dump();
    if (name == "motivating_case1") return io::to_json(case_study::motivating_case1()).dump();
    if (name == "motivating_case2") return io::to_json(case_study::motivating_case2()).dump();
    throw ConfigError("", "unknown built-in '" + name + "'");
}

std::string simulate(const std::string& corridor_json, bool strict) {
    const auto cfg = io::corridor_from_json(io::parse_json(corridor_json, "<corridor>"));
    corridor::SimulationOptions opt;
    opt.strict = strict;
    const auto traj = corridor::simulate(cfg, opt);
    Json rho = Json::array(), q = Json::array(), v = Json::array();
    for (const auto& s : traj.states) {
        rho.push_back(s.rho);
        q.push_back(s.q);
        v.push_back(s.v);
    }
    return Json{{"dt_h", traj.dt_h},
                {"rho_veh_per_mi", rho},
                {"q_veh_per_h", q},
                {"v_mph", v},
                {"inflow_veh", traj.inflow_veh},
                {"outflow_veh", traj.outflow_veh},
                {"conservation_error", traj.conservation_error()},
                {"clamp_events", traj.clamp_events}}
        .dump();
}

std::string network(const std::string& grid_json) {
    const auto g = io::grid_from_json(io::parse_json(grid_json, "<grid>"));
    const auto n = grid::build_network(g);
    Json lmax = Json::array();
    for (double l : n.l_max_pu) lmax.push_back(finite_or_null(l));
    return Json{{"num_buses", n.num_buses},
                {"slack", n.slack},
                {"parent", n.parent},
                {"parent_line", n.parent_line},
                {"line_from", n.line_from},
                {"line_to", n.line_to},
                {"r_pu", n.r_pu},
                {"x_pu", n.x_pu},
                {"l_max_pu", lmax},
                {"v_min_sq", n.v_min_sq},
                {"v_max_sq", n.v_max_sq}}
        .dump();
}

// {"grid", "demand", "solar_availability"?, "solar_mw"?, "es_units"?,
//  "coupling_mw"?, "loss_penalty"?}
std::string solve_opf(const std::string& problem_json) {
    const Json doc = io::parse_json(problem_json, "<problem>");
    opf::OperationalProblem p;
    p.grid = io::grid_from_json(doc.at("grid"));
    p.demand = io::demand_from_json(doc.at("demand"));
    p.solar_availability = doc.value("solar_availability", std::vector<double>(p.demand.steps(), 0.0));
    p.solar_mw = doc.value("solar_mw", std::vector<double>{});
    p.es_units = doc.value("es_units", std::vector<double>{});
    if (doc.contains("coupling_mw") && !doc.at("coupling_mw").is_null()) p.coupling_mw = doc.at("coupling_mw");
    p.loss_penalty = doc.value("loss_penalty", p.loss_penalty);
    const auto sol = opf::solve(p);
    const auto cone = opf::cone_exactness_report(sol);
    return Json{{"status", conic::to_string(sol.status)},
                {"iterations", sol.iterations},
                {"dt_h", sol.dt_h},
                {"program_objective", sol.program_objective},
                {"operational_cost_usd", sol.operational_cost},
                {"p_g_mw", sol.p_g},
                {"q_g_mvar", sol.q_g},
                {"p_solar_mw", matrix(sol.p_solar)},
                {"p_ch_mw", matrix(sol.p_ch)},
                {"p_dis_mw", matrix(sol.p_dis)},
                {"e_mwh", matrix(sol.e_mwh)},
                {"v_pu2", matrix(sol.v_pu2)},
                {"l_pu2", matrix(sol.l_pu2)},
                {"p_line_mw", matrix(sol.p_line_mw)},
                {"q_line_mvar", matrix(sol.q_line_mvar)},
                {"balance_residual_pu", sol.balance_residual_pu},
                {"max_cone_gap_pu2", sol.max_cone_gap},
                {"flagged_lines", cone.flagged_lines}}
        .dump();
}

std::string load_run(const std::string& path) {
    const auto run = io::load_configs(path);
    return Json{{"resolved", run.resolved}, {"baseline", io::to_json(run.baseline)}}.dump();
}

std::string size(const std::string& path, const std::vector<int>& es_buses) {
    const auto run = io::load_configs(path);
    planner::PlanningInputs in;
    in.grid = run.cs.grid;
    in.demand = run.baseline;
    in.solar_availability = run.cs.solar_availability;
    in.loss_penalty = run.run.loss_penalty;
    in.solver = run.run.solver;
    planner::SizingOptions opt;
    opt.gap_tolerance = run.run.gap_tolerance;
    opt.node_limit = run.run.node_limit;
    const auto r = planner::solve_sizing(in, es_buses, opt);
    return Json{{"design", io::to_json(r.design)}, {"nodes", r.nodes}, {"root_gap", r.root_gap}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Traffic-aware microgrid planning for dynamic wireless charging corridors.";

    static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
    static py::exception<Error> dwc_error(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            PyErr_SetString(config_error.ptr(), e.what());
        } catch (const Error& e) {
            PyErr_SetString(dwc_error.ptr(), e.what());
        }
    });

    m.attr("__version__") = io::kToolVersion;
    m.def("drive_power", [](double v_mps, const std::string& vehicle_json) {
        return energy::drive_power(v_mps, io::vehicle_from_json(io::parse_json(vehicle_json, "<vehicle>")));
    }, py::arg("v_mps"), py::arg("vehicle_json") = "{}", "Traction plus aero power in kW at speed v (m/s).");
    m.def("cost_eq1", &planner::cost_eq1, py::arg("energy_mwh"), py::arg("a"), py::arg("b"));
    m.def("builtin", &builtin, py::arg("name"));
    m.def("simulate", &simulate, py::arg("corridor_json"), py::arg("strict") = false);
    m.def("network", &network, py::arg("grid_json"));
    m.def("solve_opf", &solve_opf, py::arg("problem_json"));
    m.def("load_run", &load_run, py::arg("path"));
    m.def("size", &size, py::arg("path"), py::arg("es_buses"));
}
