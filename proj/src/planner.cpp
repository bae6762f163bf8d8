#include "dwc/planner.hpp"

#include "dwc/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace dwc::planner {

namespace {

using opf::Range;

constexpr double kIntegralTol = 1e-6;

// Runs f(i) for i in [0, n) on up to hardware_concurrency threads. Results
// are written by index, so ordering never depends on completion order. The
// first exception (lowest index) is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers =
        std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

opf::OperationalProblem base_problem(const PlanningInputs& in) {
    opf::OperationalProblem prob;
    prob.grid = in.grid;
    prob.demand = in.demand;
    prob.solar_availability = in.solar_availability;
    prob.loss_penalty = in.loss_penalty;
    const std::size_t B = in.grid.num_buses();
    prob.solar_mw.assign(B, 0.0);
    prob.es_units.assign(B, 0.0);
    return prob;
}

opf::DesignSpace sizing_space(const grid::GridSpec& g, const std::vector<bool>& es_allowed) {
    opf::DesignSpace ds;
    const std::size_t B = g.num_buses();
    ds.solar_mw.resize(B);
    ds.es_units.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
        ds.solar_mw[b] = {0.0, g.buses[b].has_solar ? g.solar_max_mw : 0.0};
        ds.es_units[b] = {0.0, es_allowed[b] ? static_cast<double>(g.es_max_units_per_bus) : 0.0};
    }
    ds.coupling_decision = true;
    ds.coupling_max_mw = g.grid_p_max_mw;
    return ds;
}

opf::OperationalSolution solve_space(const PlanningInputs& in, const opf::DesignSpace& ds,
                                     const std::vector<double>& tie_weights = {}) {
    opf::AssemblyOptions ao;
    ao.design = &ds;
    ao.planning_objective = true;
    opf::Assembly as = opf::assemble(base_problem(in), ao);
    for (std::size_t b = 0; b < tie_weights.size(); ++b) {
        const int v = as.layout.es_n[b];
        if (v >= 0) as.program.c[v] += tie_weights[b];
    }
    opf::SolveOptions so;
    so.solver = in.solver;
    return opf::solve_assembly(as, in.grid.costs, so);
}

void fill_costs(PlanningDesign& d, const grid::CostSpec& costs, double daily) {
    std::vector<double> n(d.es_units.begin(), d.es_units.end());
    d.capital_cost = capital_cost(costs, d.solar_mw, n, d.coupling_mw);
    d.daily_operational_cost = daily;
    d.lifetime_operational_cost = costs.planning_periods() * daily;
    d.total_cost = d.capital_cost + d.lifetime_operational_cost;
}

double planning_total(const opf::OperationalSolution& s, const grid::CostSpec& costs) {
    return capital_cost(costs, s.solar_mw, s.es_units, s.coupling_mw) + costs.planning_periods() * s.operational_cost;
}

PlanningDesign design_from(const opf::OperationalSolution& s, const grid::CostSpec& costs) {
    PlanningDesign d;
    d.solar_mw = s.solar_mw;
    d.es_units.resize(s.es_units.size());
    for (std::size_t b = 0; b < s.es_units.size(); ++b) d.es_units[b] = static_cast<int>(std::lround(s.es_units[b]));
    d.coupling_mw = s.coupling_mw;
    fill_costs(d, costs, s.operational_cost);
    return d;
}

ContinuousDesign continuous_from(const opf::OperationalSolution& s, const grid::CostSpec& costs) {
    ContinuousDesign c;
    c.solar_mw = s.solar_mw;
    c.es_units = s.es_units;
    c.coupling_mw = s.coupling_mw;
    c.total_cost = planning_total(s, costs);
    return c;
}

// Depth-first branch-and-bound over floor/ceil of the root relaxation.
struct BranchAndBound {
    const PlanningInputs& in;
    const std::vector<bool>& allowed;
    const SizingOptions& opt;
    int nodes = 0;
    bool exhausted = true;
    double best_cost = grid::kInf;
    opf::OperationalSolution best;

    void visit(std::vector<Range> ranges) {
        if (nodes >= opt.node_limit) {
            exhausted = false;
            return;
        }
        ++nodes;
        opf::DesignSpace ds = sizing_space(in.grid, allowed);
        for (std::size_t b = 0; b < ranges.size(); ++b) ds.es_units[b] = {ranges[b].lo, ranges[b].hi};
        opf::OperationalSolution sol;
        try {
            sol = solve_space(in, ds);
        } catch (const InfeasibleError&) {
            return;
        } catch (const SolverError&) {
            return;
        }
        const double cost = planning_total(sol, in.grid.costs);
        if (cost >= best_cost * (1.0 - opt.gap_tolerance)) return;
        int branch = -1;
        double frac_best = 0.0;
        for (std::size_t b = 0; b < ranges.size(); ++b) {
            if (ranges[b].fixed()) continue;
            const double x = sol.es_units[b];
            const double frac = std::abs(x - std::round(x));
            if (frac > kIntegralTol && frac > frac_best) {
                frac_best = frac;
                branch = static_cast<int>(b);
            }
        }
        if (branch < 0) {
            // Integral within tolerance: snap, re-solve with counts fixed.
            std::vector<Range> fixed = ranges;
            for (std::size_t b = 0; b < fixed.size(); ++b) {
                const double v = std::round(sol.es_units[b]);
                fixed[b] = {v, v};
            }
            bool all_fixed = true;
            for (std::size_t b = 0; b < ranges.size(); ++b) all_fixed = all_fixed && ranges[b].fixed();
            if (!all_fixed) {
                ds = sizing_space(in.grid, allowed);
                for (std::size_t b = 0; b < fixed.size(); ++b) ds.es_units[b] = fixed[b];
                try {
                    sol = solve_space(in, ds);
                } catch (const Error&) {
                    return;
                }
            }
            const double c = planning_total(sol, in.grid.costs);
            if (c < best_cost) {
                best_cost = c;
                best = sol;
            }
            return;
        }
        const double x = sol.es_units[branch];
        const double f = std::floor(x);
        std::vector<Range> down = ranges, up = ranges;
        down[branch] = {f, f};
        up[branch] = {f + 1.0, f + 1.0};
        if (x - f < 0.5) {
            visit(down);
            visit(up);
        } else {
            visit(up);
            visit(down);
        }
    }
};

std::vector<double> block_mean(const std::vector<double>& v, int factor) {
    if (factor <= 1) return v;
    if (v.size() % static_cast<std::size_t>(factor) != 0) {
        throw ConfigError("/aggregation", "horizon is not a multiple of the aggregation factor");
    }
    std::vector<double> out(v.size() / factor, 0.0);
    for (std::size_t t = 0; t < v.size(); ++t) out[t / factor] += v[t] / factor;
    return out;
}

void report(const Algorithm1Options& o, const std::string& msg) {
    if (o.progress) o.progress(msg);
}

}  // namespace

double cost_eq1(const std::vector<double>& demand_mwh, double a, double b) {
    double total = 0.0;
    for (std::size_t t = 0; t < demand_mwh.size(); ++t) {
        const double e = demand_mwh[t];
        if (!(e >= 0.0)) throw DomainError("cost_eq1: demand at step " + std::to_string(t) + " is negative");
        total += a * e + b * e * e;
    }
    return total;
}

double PlanningDesign::total_solar_mw() const { return std::accumulate(solar_mw.begin(), solar_mw.end(), 0.0); }
int PlanningDesign::total_es_units() const { return std::accumulate(es_units.begin(), es_units.end(), 0); }
double ContinuousDesign::total_solar_mw() const { return std::accumulate(solar_mw.begin(), solar_mw.end(), 0.0); }
double ContinuousDesign::total_es_units() const { return std::accumulate(es_units.begin(), es_units.end(), 0.0); }

double capital_cost(const grid::CostSpec& costs, const std::vector<double>& solar_mw, const std::vector<double>& es_units,
                    double coupling_mw) {
    const double s = std::accumulate(solar_mw.begin(), solar_mw.end(), 0.0);
    const double n = std::accumulate(es_units.begin(), es_units.end(), 0.0);
    return costs.c_solar * s + costs.c_batt * n + costs.c_coupling * coupling_mw;
}

SizingResult solve_sizing(const PlanningInputs& inputs, const std::vector<int>& es_buses, const SizingOptions& options) {
    const std::size_t B = inputs.grid.num_buses();
    std::vector<bool> allowed(B, false);
    for (int b : es_buses) {
        if (b < 0 || static_cast<std::size_t>(b) >= B) {
            throw ConfigError("/es_buses", "bus " + std::to_string(b) + " does not exist");
        }
        allowed[b] = true;
    }
    SizingResult out;
    const opf::DesignSpace root = sizing_space(inputs.grid, allowed);
    const opf::OperationalSolution relax = solve_space(inputs, root);
    out.relaxation = continuous_from(relax, inputs.grid.costs);
    out.nodes = 1;
    if (!options.integer) {
        out.operation = relax;
        out.design = design_from(relax, inputs.grid.costs);
        out.design.es_units.assign(B, 0);
        // Continuous counts are kept in `relaxation`; the integer view rounds up.
        for (std::size_t b = 0; b < B; ++b) {
            out.design.es_units[b] = static_cast<int>(std::ceil(relax.es_units[b] - kIntegralTol));
        }
        fill_costs(out.design, inputs.grid.costs, relax.operational_cost);
        return out;
    }
    BranchAndBound bb{inputs, allowed, options, 0, true, grid::kInf, {}};
    std::vector<Range> ranges(B);
    for (std::size_t b = 0; b < B; ++b) {
        const double x = relax.es_units[b];
        if (!allowed[b] || std::abs(x - std::round(x)) <= kIntegralTol) {
            const double v = allowed[b] ? std::max(0.0, std::round(x)) : 0.0;
            ranges[b] = {v, v};
        } else {
            ranges[b] = {std::floor(x), std::floor(x) + 1.0};
        }
    }
    bb.visit(ranges);
    if (!std::isfinite(bb.best_cost)) {
        // Node limit hit before any leaf, or every neighbor infeasible: take the ceiling.
        opf::DesignSpace ds = root;
        for (std::size_t b = 0; b < B; ++b) {
            const double v = ranges[b].fixed() ? ranges[b].lo : ranges[b].hi;
            ds.es_units[b] = {v, v};
        }
        bb.best = solve_space(inputs, ds);
        bb.best_cost = planning_total(bb.best, inputs.grid.costs);
        bb.exhausted = false;
    }
    out.nodes = 1 + bb.nodes;
    out.neighborhood_exhausted = bb.exhausted;
    out.operation = bb.best;
    out.design = design_from(bb.best, inputs.grid.costs);
    out.root_gap = (bb.best_cost - out.relaxation.total_cost) / std::max(std::abs(bb.best_cost), 1e-300);
    return out;
}

SitingResult solve_siting(const PlanningInputs& inputs, double k_batt) {
    if (!(k_batt >= 0.0)) throw DomainError("solve_siting: k_batt must be nonnegative");
    const std::size_t B = inputs.grid.num_buses();
    std::vector<bool> allowed(B, true);
    for (int b : inputs.grid.es_excluded) {
        if (b >= 0 && static_cast<std::size_t>(b) < B) allowed[b] = false;
    }
    opf::DesignSpace ds = sizing_space(inputs.grid, allowed);
    ds.es_total = k_batt;
    // Lexicographic tie-break: a vanishing premium growing with bus index.
    std::vector<double> tie(B);
    for (std::size_t b = 0; b < B; ++b) tie[b] = 1e-6 * inputs.grid.costs.c_batt * static_cast<double>(b);
    SitingResult out;
    out.k_batt = k_batt;
    const opf::OperationalSolution s = solve_space(inputs, ds, tie);
    out.placement.assign(B, 0.0);
    for (std::size_t b = 0; b < B; ++b) out.placement[b] = allowed[b] ? std::max(0.0, s.es_units[b]) : 0.0;
    // Remove solver noise so the allocation sums to k_batt exactly.
    const double sum = std::accumulate(out.placement.begin(), out.placement.end(), 0.0);
    if (sum > 0.0) {
        for (double& p : out.placement) p *= k_batt / sum;
    }
    out.total_cost = planning_total(s, inputs.grid.costs);
    out.solar_mw = std::accumulate(s.solar_mw.begin(), s.solar_mw.end(), 0.0);
    out.coupling_mw = s.coupling_mw;
    return out;
}

SweepResult siting_sweep(const PlanningInputs& inputs, const std::vector<int>& k_values) {
    if (k_values.empty()) throw ConfigError("/k_values", "siting sweep needs at least one value");
    SweepResult out;
    out.curve.resize(k_values.size());
    parallel_for(k_values.size(), [&](std::size_t i) { out.curve[i] = solve_siting(inputs, k_values[i]); });
    out.best_index = 0;
    for (std::size_t i = 1; i < out.curve.size(); ++i) {
        // Strict improvement beyond solver noise; ties keep the smaller index.
        const double ref = out.curve[out.best_index].total_cost;
        if (out.curve[i].total_cost < ref - 1e-9 * std::abs(ref)) out.best_index = static_cast<int>(i);
    }
    return out;
}

std::vector<int> selected_buses(const SitingResult& siting, double threshold) {
    std::vector<int> out;
    int argmax = -1;
    for (std::size_t b = 0; b < siting.placement.size(); ++b) {
        if (siting.placement[b] >= threshold) out.push_back(static_cast<int>(b));
        if (argmax < 0 || siting.placement[b] > siting.placement[argmax]) argmax = static_cast<int>(b);
    }
    if (out.empty() && argmax >= 0 && siting.placement[argmax] > 0.0) out.push_back(argmax);
    return out;
}

ScenarioValidation validate_scenario(const PlanningDesign& design, const grid::GridSpec& grid,
                                     const ScenarioDemand& scenario, const std::vector<double>& solar_availability,
                                     const ValidationOptions& options) {
    const std::size_t B = grid.num_buses();
    if (design.solar_mw.size() != B || design.es_units.size() != B) {
        throw ConfigError("/design", "design needs one solar and one ES entry per bus");
    }
    const energy::DemandProfile& d = scenario.demand;
    d.validate();
    const std::size_t T = d.steps();
    if (solar_availability.size() != T) {
        throw ConfigError("/solar_availability", "availability does not cover the scenario horizon");
    }
    ScenarioValidation out;
    out.name = scenario.name;

    if (options.strict) {
        opf::OperationalProblem prob;
        prob.grid = grid;
        prob.demand = d;
        prob.solar_availability = solar_availability;
        prob.solar_mw = design.solar_mw;
        prob.es_units.assign(design.es_units.begin(), design.es_units.end());
        prob.coupling_mw = design.coupling_mw;
        const opf::Assembly as = opf::assemble(prob);
        const double tol_pu = options.shortfall_tolerance_mw / grid.base_mva;
        const opf::ElasticReport rep = opf::elastic_diagnosis(as.program, options.solver, tol_pu);
        out.feasible = rep.feasible;
        out.max_shortfall_mw = rep.total_violation * grid.base_mva;
        out.detail = rep.feasible ? "" : rep.summary();
        return out;
    }

    // System real-power balance with aggregate storage; shortfall is explicit.
    const double solar = design.total_solar_mw();
    const double units = design.total_es_units();
    const grid::ESUnitSpec& es = grid.es;
    const double dt = d.dt_h;
    const auto load = d.total_p();
    conic::ProgramBuilder pb;
    std::vector<int> e(T + 1), pc(T), pd(T), sh(T);
    for (std::size_t t = 0; t <= T; ++t) {
        e[t] = pb.add_variable();
        pb.add_bounds(e[t], 0.0, units * es.e_unit_mwh, "es_energy");
    }
    for (std::size_t t = 0; t < T; ++t) {
        const int pg = pb.add_variable();
        const int ps = pb.add_variable();
        pc[t] = pb.add_variable();
        pd[t] = pb.add_variable();
        sh[t] = pb.add_variable();
        pb.add_bounds(pg, 0.0, design.coupling_mw, "grid_limits");
        pb.add_bounds(ps, 0.0, solar_availability[t] * solar, "solar_limits");
        pb.add_bounds(pc[t], 0.0, units * es.p_ch_max, "es_power");
        pb.add_bounds(pd[t], 0.0, units * es.p_dis_max, "es_power");
        pb.add_nonneg(conic::Affine({{sh[t], 1.0}}), "shortfall");
        pb.add_linear_cost(sh[t], dt);
        pb.add_equality(conic::Affine({{pg, 1.0}, {ps, 1.0}, {pd[t], 1.0}, {pc[t], -1.0}, {sh[t], 1.0}}, -load[t]),
                        "real_balance");
        pb.add_equality(conic::Affine({{e[t + 1], 1.0},
                                       {e[t], -1.0},
                                       {pc[t], -dt * es.eta_ch},
                                       {pd[t], dt / es.eta_dis}}),
                        "es_dynamics");
    }
    pb.add_equality(conic::Affine({{e[0], 1.0}, {e[T], -1.0}}), "es_periodicity");
    const conic::Program prog = pb.build();
    const conic::Solution sol = conic::InteriorPointSolver(options.solver).solve(prog);
    if (!sol.ok()) {
        throw SolverError("validation of " + scenario.name + " stopped with status " + conic::to_string(sol.status));
    }
    for (std::size_t t = 0; t < T; ++t) {
        const double s = std::max(0.0, sol.x[sh[t]]);
        out.max_shortfall_mw = std::max(out.max_shortfall_mw, s);
        out.unserved_mwh += s * dt;
    }
    out.feasible = out.max_shortfall_mw <= options.shortfall_tolerance_mw;
    if (!out.feasible) {
        std::ostringstream os;
        os << "real_balance short by up to " << out.max_shortfall_mw << " MW (" << out.unserved_mwh << " MWh)";
        out.detail = os.str();
    }
    return out;
}

ValidationReport validate_design(const PlanningDesign& design, const grid::GridSpec& grid,
                                 const std::vector<ScenarioDemand>& scenarios,
                                 const std::vector<double>& solar_availability, double threshold,
                                 const ValidationOptions& options) {
    if (scenarios.empty()) throw ConfigError("/scenarios", "validation needs at least one scenario");
    if (!(threshold >= 0.0) || threshold > 1.0) throw ConfigError("/service_threshold", "must lie in [0, 1]");
    ValidationReport rep;
    rep.threshold = threshold;
    rep.scenarios.resize(scenarios.size());
    parallel_for(scenarios.size(), [&](std::size_t i) {
        rep.scenarios[i] = validate_scenario(design, grid, scenarios[i], solar_availability, options);
    });
    std::size_t ok = 0;
    for (const auto& s : rep.scenarios) ok += s.feasible ? 1 : 0;
    rep.service_level_hat = static_cast<double>(ok) / static_cast<double>(scenarios.size());
    return rep;
}

PlanningDesign evaluate_design(const PlanningDesign& design, const PlanningInputs& inputs) {
    opf::OperationalProblem prob = base_problem(inputs);
    prob.solar_mw = design.solar_mw;
    prob.es_units.assign(design.es_units.begin(), design.es_units.end());
    prob.coupling_mw = design.coupling_mw;
    opf::SolveOptions so;
    so.solver = inputs.solver;
    const opf::OperationalSolution s = opf::solve(prob, so);
    PlanningDesign out = design;
    fill_costs(out, inputs.grid.costs, s.operational_cost);
    return out;
}

Algorithm1Result run_algorithm1(const grid::GridSpec& grid, const energy::DemandProfile& baseline,
                                const std::vector<ScenarioCase>& cases, const std::vector<double>& solar_availability,
                                const Algorithm1Options& options) {
    if (cases.empty()) throw ConfigError("/ensemble", "planning needs at least one scenario");
    if (!(options.scale_increment > 0.0)) throw ConfigError("/scale_increment", "must be positive");
    const int agg = std::max(1, options.aggregation);

    PlanningInputs base_in;
    base_in.grid = grid;
    base_in.demand = agg > 1 ? energy::aggregate_time(baseline, agg) : baseline;
    base_in.solar_availability = block_mean(solar_availability, agg);
    base_in.solver = options.validation.solver;
    base_in.loss_penalty = options.loss_penalty;

    Algorithm1Result out;
    std::vector<int> ks = options.k_values;
    if (ks.empty()) {
        for (int k = 0; k <= 20; ++k) ks.push_back(k);
    }
    report(options, "siting sweep over " + std::to_string(ks.size()) + " values");
    out.siting = siting_sweep(base_in, ks);
    out.es_buses = selected_buses(out.siting.best(), options.siting_threshold);

    SizingOptions sizing = options.sizing;
    sizing.integer = options.integer_scenario_sizing;
    report(options, "sizing " + std::to_string(cases.size()) + " scenarios");
    out.scenario_designs.resize(cases.size());
    std::vector<ScenarioDemand> demands(cases.size());
    parallel_for(cases.size(), [&](std::size_t i) {
        PlanningInputs in = base_in;
        in.demand = agg > 1 ? energy::aggregate_time(cases[i].demand, agg) : cases[i].demand;
        demands[i] = {cases[i].spec.name(), cases[i].spec.kind, in.demand};
        if (options.load_cached && options.load_cached(cases[i], out.scenario_designs[i])) return;
        const SizingResult r = solve_sizing(in, out.es_buses, sizing);
        ScenarioDesign& sd = out.scenario_designs[i];
        sd.name = cases[i].spec.name();
        sd.kind = cases[i].spec.kind;
        sd.peak_mw = in.demand.peak_total_mw();
        if (options.integer_scenario_sizing) {
            sd.design.solar_mw = r.design.solar_mw;
            sd.design.es_units.assign(r.design.es_units.begin(), r.design.es_units.end());
            sd.design.coupling_mw = r.design.coupling_mw;
            sd.design.total_cost = r.design.total_cost;
        } else {
            sd.design = r.relaxation;
        }
        if (options.store_cached) options.store_cached(cases[i], sd);
    });

    report(options, "sizing baseline");
    out.baseline_design = solve_sizing(base_in, out.es_buses, options.sizing).design;

    // Family with the highest mean capital cost, unless one is named.
    std::map<std::string, std::vector<std::size_t>> families;
    for (std::size_t i = 0; i < out.scenario_designs.size(); ++i) {
        families[scenarios::to_string(out.scenario_designs[i].kind)].push_back(i);
    }
    if (!options.family.empty()) {
        if (!families.count(options.family)) {
            throw ConfigError("/family", "no scenario of family " + options.family + " in the ensemble");
        }
        out.family = options.family;
    } else {
        double best = -1.0;
        for (const auto& [name, idx] : families) {
            double mean = 0.0;
            for (std::size_t i : idx) {
                const ContinuousDesign& d = out.scenario_designs[i].design;
                mean += capital_cost(grid.costs, d.solar_mw, d.es_units, d.coupling_mw) / idx.size();
            }
            if (mean > best) {
                best = mean;
                out.family = name;
            }
        }
    }
    const auto& members = families[out.family];
    const std::size_t B = grid.num_buses();
    ContinuousDesign& mean = out.family_mean;
    mean.solar_mw.assign(B, 0.0);
    mean.es_units.assign(B, 0.0);
    for (std::size_t i : members) {
        const ContinuousDesign& d = out.scenario_designs[i].design;
        for (std::size_t b = 0; b < B; ++b) {
            mean.solar_mw[b] += d.solar_mw[b];
            mean.es_units[b] += d.es_units[b];
        }
        mean.coupling_mw += d.coupling_mw;
    }
    const double m = static_cast<double>(members.size());
    for (std::size_t b = 0; b < B; ++b) {
        mean.solar_mw[b] /= m;
        mean.es_units[b] /= m;
    }
    mean.coupling_mw /= m;
    mean.total_cost = capital_cost(grid.costs, mean.solar_mw, mean.es_units, mean.coupling_mw);

    auto scaled = [&](double s) {
        PlanningDesign d;
        d.solar_mw.resize(B);
        d.es_units.resize(B);
        for (std::size_t b = 0; b < B; ++b) {
            d.solar_mw[b] = s * mean.solar_mw[b];
            d.es_units[b] = static_cast<int>(std::ceil(s * mean.es_units[b] - kIntegralTol));
        }
        d.coupling_mw = s * mean.coupling_mw;
        return d;
    };
    for (int it = 0;; ++it) {
        const double s = 1.0 + options.scale_increment * it;
        PlanningDesign d = scaled(s);
        report(options, "validating design at scale " + std::to_string(s));
        out.validation = validate_design(d, grid, demands, base_in.solar_availability, options.service_threshold,
                                         options.validation);
        out.final_design = d;
        out.scale_iterations = it;
        if (out.validation.meets_threshold() || it >= options.max_scale_iterations) break;
    }
    out.final_design = evaluate_design(out.final_design, base_in);
    return out;
}

ComparisonResult compare_designs(const PlanningInputs& inputs, const std::vector<int>& es_buses,
                                 const SizingOptions& options, double peak_mw) {
    ComparisonResult out;
    const double own_peak = inputs.demand.peak_total_mw();
    out.peak_mw = peak_mw >= 0.0 ? peak_mw : own_peak;
    PlanningInputs aware = inputs;
    if (peak_mw >= 0.0 && own_peak > 0.0) {
        const double f = peak_mw / own_peak;
        for (auto& row : aware.demand.p_mw) {
            for (double& v : row) v *= f;
        }
        for (auto& row : aware.demand.q_mvar) {
            for (double& v : row) v *= f;
        }
    }
    out.traffic_aware = solve_sizing(aware, es_buses, options).design;
    PlanningInputs flat = inputs;
    flat.demand = energy::flat_profile(inputs.demand, out.peak_mw);
    out.worst_case = solve_sizing(flat, es_buses, options).design;
    const double tol = 1e-6;
    out.dominates = out.worst_case.total_solar_mw() >= out.traffic_aware.total_solar_mw() - tol &&
                    out.worst_case.total_es_units() >= out.traffic_aware.total_es_units() &&
                    out.worst_case.coupling_mw >= out.traffic_aware.coupling_mw - tol;
    out.cost_gap_relative = out.traffic_aware.total_cost > 0.0
                                ? out.worst_case.total_cost / out.traffic_aware.total_cost - 1.0
                                : grid::kInf;
    return out;
}

}  // namespace dwc::planner
