#include "dwc/opf.hpp"

#include "dwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dwc::opf {

using conic::Affine;
using conic::ProgramBuilder;

void OperationalProblem::normalize() {
    const std::size_t B = grid.num_buses();
    if (solar_mw.empty()) solar_mw.assign(B, 0.0);
    if (es_units.empty()) {
        es_units.assign(B, 0.0);
        for (std::size_t b = 0; b < B; ++b) es_units[b] = grid.buses[b].es_units;
    }
    if (solar_availability.empty()) solar_availability.assign(steps(), 0.0);
}

void OperationalProblem::validate() const {
    grid.validate();
    demand.validate();
    const std::size_t B = grid.num_buses();
    const std::size_t T = steps();
    if (T == 0) throw AssemblyError("horizon", "demand profile has no steps");
    if (demand.num_buses() != B) {
        throw AssemblyError("real_balance", "demand covers " + std::to_string(demand.num_buses()) + " buses, grid has " +
                                                std::to_string(B));
    }
    if (solar_availability.size() != T) {
        throw AssemblyError("solar_limits", "availability has " + std::to_string(solar_availability.size()) +
                                                " steps, demand has " + std::to_string(T));
    }
    for (std::size_t t = 0; t < T; ++t) {
        if (!(solar_availability[t] >= 0.0) || solar_availability[t] > 1.0) {
            throw ConfigError("/solar_availability/" + std::to_string(t), "must lie in [0, 1]");
        }
    }
    if (solar_mw.size() != B) throw AssemblyError("solar_limits", "solar capacity needs one entry per bus");
    if (es_units.size() != B) throw AssemblyError("es_power", "ES units need one entry per bus");
    for (std::size_t b = 0; b < B; ++b) {
        if (!(solar_mw[b] >= 0.0)) throw ConfigError("/solar_mw/" + std::to_string(b), "must be nonnegative");
        if (!(es_units[b] >= 0.0)) throw ConfigError("/es_units/" + std::to_string(b), "must be nonnegative");
    }
    if (!(coupling_mw >= 0.0)) throw ConfigError("/coupling_mw", "must be nonnegative");
    if (!(loss_penalty >= 0.0)) throw ConfigError("/loss_penalty", "must be nonnegative");
}

double OperationalSolution::peak_import_mw() const {
    return p_g.empty() ? 0.0 : *std::max_element(p_g.begin(), p_g.end());
}

namespace {

constexpr const char* kRealBalance = "real_balance";
constexpr const char* kReactiveBalance = "reactive_balance";

Affine var_or_const(int var, double constant) {
    return var >= 0 ? Affine({{var, 1.0}}) : Affine(constant);
}

}  // namespace

Assembly assemble(const OperationalProblem& input, const AssemblyOptions& options) {
    OperationalProblem problem = input;
    problem.normalize();
    problem.validate();

    Assembly out;
    out.network = grid::build_network(problem.grid);
    const grid::Network& net = out.network;
    const grid::GridSpec& gs = problem.grid;
    const grid::CostSpec& costs = gs.costs;
    const grid::ESUnitSpec& es = gs.es;
    const double base = gs.base_mva;
    const double dt = problem.demand.dt_h;
    const std::size_t T = problem.steps();
    const int B = net.num_buses;
    const int L = static_cast<int>(net.num_lines());
    out.base_mva = base;
    out.dt_h = dt;
    // Per-step cost terms are weighted by the step length, so rates are per hour.
    const double sw = dt;

    const DesignSpace* design = options.design;
    if (design) {
        if (!design->solar_mw.empty() && design->solar_mw.size() != static_cast<std::size_t>(B)) {
            throw AssemblyError("design_bounds", "solar range needs one entry per bus");
        }
        if (!design->es_units.empty() && design->es_units.size() != static_cast<std::size_t>(B)) {
            throw AssemblyError("design_bounds", "ES range needs one entry per bus");
        }
    }
    const double weight = options.planning_objective ? costs.planning_periods() : 1.0;

    ProgramBuilder pb;
    Layout& lay = out.layout;
    lay.steps = T;
    lay.num_buses = B;
    lay.num_lines = L;

    // Design variables.
    lay.solar_cap.assign(B, -1);
    lay.es_n.assign(B, -1);
    lay.fixed_solar_mw = problem.solar_mw;
    lay.fixed_es_units = problem.es_units;
    lay.has_es.assign(B, false);
    std::vector<bool> has_solar(B, false);
    for (int b = 0; b < B; ++b) {
        if (gs.buses[b].has_solar) {
            if (design && !design->solar_mw.empty() && !design->solar_mw[b].fixed()) {
                const Range r = design->solar_mw[b];
                lay.solar_cap[b] = pb.add_variable();
                pb.add_bounds(lay.solar_cap[b], r.lo, r.hi, "design_bounds");
                if (options.planning_objective) pb.add_linear_cost(lay.solar_cap[b], costs.c_solar);
                has_solar[b] = r.hi > 0.0;
            } else {
                if (design && !design->solar_mw.empty()) lay.fixed_solar_mw[b] = design->solar_mw[b].lo;
                has_solar[b] = lay.fixed_solar_mw[b] > 0.0;
                if (options.planning_objective) pb.add_constant_cost(costs.c_solar * lay.fixed_solar_mw[b]);
            }
        } else {
            lay.fixed_solar_mw[b] = 0.0;
        }
        if (design && !design->es_units.empty() && !design->es_units[b].fixed()) {
            const Range r = design->es_units[b];
            lay.es_n[b] = pb.add_variable();
            pb.add_bounds(lay.es_n[b], r.lo, r.hi, "design_bounds");
            if (options.planning_objective) pb.add_linear_cost(lay.es_n[b], costs.c_batt);
            lay.has_es[b] = r.hi > 0.0;
        } else {
            if (design && !design->es_units.empty()) lay.fixed_es_units[b] = design->es_units[b].lo;
            lay.has_es[b] = lay.fixed_es_units[b] > 0.0;
            if (options.planning_objective) pb.add_constant_cost(costs.c_batt * lay.fixed_es_units[b]);
        }
    }
    if (design && design->es_total) {
        Affine sum(-*design->es_total);
        double fixed_sum = 0.0;
        for (int b = 0; b < B; ++b) {
            if (lay.es_n[b] >= 0) {
                sum.add(lay.es_n[b], 1.0);
            } else {
                fixed_sum += lay.fixed_es_units[b];
            }
        }
        sum.constant += fixed_sum;
        pb.add_equality(sum, "siting_cardinality");
    }
    const bool coupling_var = design && design->coupling_decision;
    lay.fixed_coupling_mw = problem.coupling_mw;
    if (coupling_var) {
        lay.coupling = pb.add_variable();
        pb.add_bounds(lay.coupling, 0.0, design->coupling_max_mw, "design_bounds");
        if (options.planning_objective) pb.add_linear_cost(lay.coupling, costs.c_coupling);
    } else if (options.planning_objective && std::isfinite(problem.coupling_mw)) {
        pb.add_constant_cost(costs.c_coupling * problem.coupling_mw);
    }

    // Operational variables.
    lay.p_g.resize(T);
    lay.q_g.resize(T);
    lay.p_line.assign(L, std::vector<int>(T));
    lay.q_line.assign(L, std::vector<int>(T));
    lay.l_line.assign(L, std::vector<int>(T));
    lay.v.assign(B, std::vector<int>(T, -1));
    lay.p_sol.assign(B, std::vector<int>(T, -1));
    lay.q_sol.assign(B, std::vector<int>(T, -1));
    lay.p_ch.assign(B, std::vector<int>(T, -1));
    lay.p_dis.assign(B, std::vector<int>(T, -1));
    lay.q_es.assign(B, std::vector<int>(T, -1));
    lay.e.assign(B, std::vector<int>(T + 1, -1));
    for (int b = 0; b < B; ++b) {
        if (lay.has_es[b]) {
            for (std::size_t t = 0; t <= T; ++t) lay.e[b][t] = pb.add_variable();
        }
    }

    const double a_pu = costs.a_g * base * base;
    const double b_pu = costs.b_g * base;
    const double q_ratio = gs.grid_q_ratio;
    const double q_sol_frac = gs.solar_q_fraction;
    pb.add_constant_cost(weight * sw * costs.c_g * static_cast<double>(T));

    auto cap_expr = [&](int var, double fixed, double coef) {
        // coef * capacity, either variable or constant.
        return var >= 0 ? Affine({{var, coef}}) : Affine(coef * fixed);
    };

    for (std::size_t t = 0; t < T; ++t) {
        // Grid import at the slack bus.
        const int pg = pb.add_variable();
        const int qg = pb.add_variable();
        lay.p_g[t] = pg;
        lay.q_g[t] = qg;
        pb.add_quadratic_cost(pg, weight * sw * a_pu);
        pb.add_linear_cost(pg, weight * sw * b_pu);
        pb.add_nonneg(Affine({{pg, 1.0}}), "grid_limits");
        if (coupling_var) {
            pb.add_nonneg(Affine({{lay.coupling, 1.0}, {pg, -base}}), "grid_limits");
            pb.add_nonneg(Affine({{lay.coupling, q_ratio}, {qg, -base}}), "grid_limits");
            pb.add_nonneg(Affine({{lay.coupling, q_ratio}, {qg, base}}), "grid_limits");
        } else if (std::isfinite(problem.coupling_mw)) {
            pb.add_bounds(pg, 0.0, problem.coupling_mw / base, "grid_limits");
            pb.add_bounds(qg, -q_ratio * problem.coupling_mw / base, q_ratio * problem.coupling_mw / base,
                          "grid_limits");
        }

        for (int k = 0; k < L; ++k) {
            lay.p_line[k][t] = pb.add_variable();
            lay.q_line[k][t] = pb.add_variable();
            lay.l_line[k][t] = pb.add_variable();
            const int l = lay.l_line[k][t];
            pb.add_bounds(l, 0.0, net.l_max_pu[k], "current_bounds");
            // Loss penalty; degenerate lines get a floor weight so l stays bounded.
            const double r_w = std::max(net.r_pu[k], 1e-6);
            pb.add_linear_cost(l, weight * sw * problem.loss_penalty * base * r_w);
        }
        for (int b = 0; b < B; ++b) {
            if (b != net.slack) {
                lay.v[b][t] = pb.add_variable();
                pb.add_bounds(lay.v[b][t], net.v_min_sq[b], net.v_max_sq[b], "voltage_bounds");
            }
            if (has_solar[b]) {
                const int ps = pb.add_variable();
                const int qs = pb.add_variable();
                lay.p_sol[b][t] = ps;
                lay.q_sol[b][t] = qs;
                const double g = problem.solar_availability[t];
                pb.add_nonneg(Affine({{ps, 1.0}}), "solar_limits");
                Affine hi = cap_expr(lay.solar_cap[b], lay.fixed_solar_mw[b], g / base);
                pb.add_nonneg(Affine(hi).add(ps, -1.0), "solar_limits");
                Affine qhi = cap_expr(lay.solar_cap[b], lay.fixed_solar_mw[b], q_sol_frac / base);
                pb.add_nonneg(Affine(qhi).add(qs, -1.0), "solar_limits");
                pb.add_nonneg(Affine(qhi).add(qs, 1.0), "solar_limits");
            }
            if (lay.has_es[b]) {
                const int pc = pb.add_variable();
                const int pd = pb.add_variable();
                const int qe = pb.add_variable();
                lay.p_ch[b][t] = pc;
                lay.p_dis[b][t] = pd;
                lay.q_es[b][t] = qe;
                pb.add_linear_cost(pc, weight * sw * costs.cycling_penalty * base);
                pb.add_linear_cost(pd, weight * sw * costs.cycling_penalty * base);
                pb.add_nonneg(Affine({{pc, 1.0}}), "es_power");
                pb.add_nonneg(Affine({{pd, 1.0}}), "es_power");
                pb.add_nonneg(cap_expr(lay.es_n[b], lay.fixed_es_units[b], es.p_ch_max / base).add(pc, -1.0),
                              "es_power");
                pb.add_nonneg(cap_expr(lay.es_n[b], lay.fixed_es_units[b], es.p_dis_max / base).add(pd, -1.0),
                              "es_power");
                Affine qlim = cap_expr(lay.es_n[b], lay.fixed_es_units[b], es.q_lim / base);
                pb.add_nonneg(Affine(qlim).add(qe, -1.0), "es_power");
                pb.add_nonneg(Affine(qlim).add(qe, 1.0), "es_power");
            }
        }
    }
    for (int b = 0; b < B; ++b) {
        if (!lay.has_es[b]) continue;
        for (std::size_t t = 0; t <= T; ++t) {
            const int ev = lay.e[b][t];
            pb.add_nonneg(Affine({{ev, 1.0}}), "es_energy");
            pb.add_nonneg(cap_expr(lay.es_n[b], lay.fixed_es_units[b], es.e_unit_mwh / base).add(ev, -1.0),
                          "es_energy");
        }
        for (std::size_t t = 1; t <= T; ++t) {
            pb.add_equality(Affine({{lay.e[b][t], 1.0},
                                    {lay.e[b][t - 1], -1.0},
                                    {lay.p_ch[b][t - 1], -dt * es.eta_ch},
                                    {lay.p_dis[b][t - 1], dt / es.eta_dis}}),
                            "es_dynamics");
        }
        pb.add_equality(Affine({{lay.e[b][0], 1.0}, {lay.e[b][T], -1.0}}), "es_periodicity");
    }

    // Network rows.
    const double kq = 1.0 / base;
    for (std::size_t t = 0; t < T; ++t) {
        for (int j = 0; j < B; ++j) {
            Affine p_row(-problem.demand.p_mw[j][t] * kq);
            Affine q_row(-problem.demand.q_mvar[j][t] * kq);
            if (j == net.slack) {
                p_row.add(lay.p_g[t], 1.0);
                q_row.add(lay.q_g[t], 1.0);
            } else {
                const int k = net.parent_line[j];
                p_row.add(lay.p_line[k][t], 1.0).add(lay.l_line[k][t], -net.r_pu[k]);
                q_row.add(lay.q_line[k][t], 1.0).add(lay.l_line[k][t], -net.x_pu[k]);
            }
            for (int c : net.child_lines[j]) {
                p_row.add(lay.p_line[c][t], -1.0);
                q_row.add(lay.q_line[c][t], -1.0);
            }
            if (lay.p_sol[j][t] >= 0) {
                p_row.add(lay.p_sol[j][t], 1.0);
                q_row.add(lay.q_sol[j][t], 1.0);
            }
            if (lay.has_es[j]) {
                p_row.add(lay.p_dis[j][t], 1.0).add(lay.p_ch[j][t], -1.0);
                q_row.add(lay.q_es[j][t], 1.0);
            }
            pb.add_equality(p_row, kRealBalance);
            pb.add_equality(q_row, kReactiveBalance);
        }
        for (int k = 0; k < L; ++k) {
            const int i = net.line_from[k];
            const int j = net.line_to[k];
            const double r = net.r_pu[k];
            const double x = net.x_pu[k];
            const Affine vi = var_or_const(lay.v[i][t], 1.0);
            const Affine vj = var_or_const(lay.v[j][t], 1.0);
            Affine drop = vj;
            drop.add(vi, -1.0)
                .add(lay.p_line[k][t], 2.0 * r)
                .add(lay.q_line[k][t], 2.0 * x)
                .add(lay.l_line[k][t], -(r * r + x * x));
            pb.add_equality(drop, "voltage_drop");
            const int l = lay.l_line[k][t];
            Affine head = Affine({{l, 1.0}}).add(vi, 1.0);
            Affine diff = Affine({{l, 1.0}}).add(vi, -1.0);
            pb.add_soc(head, {Affine({{lay.p_line[k][t], 2.0}}), Affine({{lay.q_line[k][t], 2.0}}), diff}, "cone");
        }
    }
    out.program = pb.build();
    return out;
}

double operational_cost(const OperationalSolution& sol, const grid::CostSpec& costs) {
    double total = 0.0;
    for (double p : sol.p_g) total += sol.dt_h * (costs.a_g * p * p + costs.b_g * p + costs.c_g);
    for (std::size_t b = 0; b < sol.p_ch.size(); ++b) {
        for (std::size_t t = 0; t < sol.p_ch[b].size(); ++t) {
            total += sol.dt_h * costs.cycling_penalty * (sol.p_ch[b][t] + sol.p_dis[b][t]);
        }
    }
    return total;
}

OperationalSolution extract(const Assembly& as, const conic::Solution& sol, const grid::CostSpec& costs) {
    const Layout& lay = as.layout;
    const double base = as.base_mva;
    const std::size_t T = lay.steps;
    const int B = lay.num_buses;
    const int L = lay.num_lines;
    const auto& x = sol.x;
    auto val = [&](int var, double fallback = 0.0) { return var >= 0 ? x[var] : fallback; };

    OperationalSolution out;
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.dt_h = as.dt_h;
    out.base_mva = base;
    out.program_objective = sol.objective;
    out.p_g.resize(T);
    out.q_g.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        out.p_g[t] = base * val(lay.p_g[t]);
        out.q_g[t] = base * val(lay.q_g[t]);
    }
    auto bus_table = [&](const std::vector<std::vector<int>>& idx, double scale) {
        std::vector<std::vector<double>> tab(idx.size());
        for (std::size_t b = 0; b < idx.size(); ++b) {
            tab[b].resize(idx[b].size());
            for (std::size_t t = 0; t < idx[b].size(); ++t) tab[b][t] = scale * val(idx[b][t]);
        }
        return tab;
    };
    out.p_solar = bus_table(lay.p_sol, base);
    out.q_solar = bus_table(lay.q_sol, base);
    out.p_ch = bus_table(lay.p_ch, base);
    out.p_dis = bus_table(lay.p_dis, base);
    out.q_es = bus_table(lay.q_es, base);
    out.e_mwh = bus_table(lay.e, base);
    out.v_pu2.assign(B, std::vector<double>(T, 1.0));
    for (int b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) out.v_pu2[b][t] = val(lay.v[b][t], 1.0);
    }
    out.p_line_mw = bus_table(lay.p_line, base);
    out.q_line_mvar = bus_table(lay.q_line, base);
    out.l_pu2 = bus_table(lay.l_line, 1.0);
    out.line_from = as.network.line_from;
    out.line_to = as.network.line_to;
    out.solar_mw.resize(B);
    out.es_units.resize(B);
    for (int b = 0; b < B; ++b) {
        out.solar_mw[b] = val(lay.solar_cap[b], lay.fixed_solar_mw[b]);
        out.es_units[b] = val(lay.es_n[b], lay.fixed_es_units[b]);
    }
    out.coupling_mw = lay.coupling >= 0 ? x[lay.coupling] : lay.fixed_coupling_mw;
    out.operational_cost = operational_cost(out, costs);

    // Balance residuals on the original rows.
    const conic::Program& prog = as.program;
    if (sol.x.size() == prog.num_vars) {
        Eigen::VectorXd r = prog.A * sol.x - prog.b;
        for (int i = 0; i < prog.num_eq(); ++i) {
            const std::string& fam = prog.families[prog.eq_family[i]];
            if (fam == kRealBalance || fam == kReactiveBalance) {
                out.balance_residual_pu = std::max(out.balance_residual_pu, std::abs(r[i]));
            }
        }
    }
    for (int k = 0; k < L; ++k) {
        // On a lossless line l appears only in its own cone and its cap, so
        // the face point (P^2 + Q^2) / v is feasible and no costlier.
        const bool lossless = as.network.r_pu[k] == 0.0 && as.network.x_pu[k] == 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double P = out.p_line_mw[k][t] / base;
            const double Q = out.q_line_mvar[k][t] / base;
            const double vi = out.v_pu2[out.line_from[k]][t];
            if (lossless && vi > 0.0) out.l_pu2[k][t] = std::min(out.l_pu2[k][t], (P * P + Q * Q) / vi);
            const double gap = out.l_pu2[k][t] * out.v_pu2[out.line_from[k]][t] - (P * P + Q * Q);
            out.max_cone_gap = std::max(out.max_cone_gap, gap);
        }
    }
    return out;
}

OperationalSolution solve_assembly(const Assembly& as, const grid::CostSpec& costs, const SolveOptions& options) {
    conic::InteriorPointSolver solver(options.solver);
    conic::Solution sol = solver.solve(as.program);
    if (!sol.ok()) {
        if (options.diagnose) {
            ElasticReport rep = elastic_diagnosis(as.program, options.solver);
            if (!rep.feasible) {
                throw InfeasibleError("operational problem is infeasible: " + rep.summary(), rep.summary());
            }
        }
        throw SolverError("interior-point solver stopped with status " + conic::to_string(sol.status) + " after " +
                          std::to_string(sol.iterations) + " iterations");
    }
    return extract(as, sol, costs);
}

OperationalSolution solve(const OperationalProblem& problem, const SolveOptions& options) {
    return solve_assembly(assemble(problem), problem.grid.costs, options);
}

ConeReport cone_exactness_report(const OperationalSolution& sol, double threshold) {
    ConeReport rep;
    const double base = sol.base_mva;
    const std::size_t L = sol.l_pu2.size();
    rep.residual.assign(L, {});
    for (std::size_t k = 0; k < L; ++k) {
        bool flagged = false;
        const std::size_t T = sol.l_pu2[k].size();
        rep.residual[k].resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            const double P = sol.p_line_mw[k][t] / base;
            const double Q = sol.q_line_mvar[k][t] / base;
            const double res = sol.l_pu2[k][t] * sol.v_pu2[sol.line_from[k]][t] - (P * P + Q * Q);
            rep.residual[k][t] = res;
            if (rep.max_line < 0 || res > rep.max_residual) {
                rep.max_residual = res;
                rep.max_line = static_cast<int>(k);
                rep.max_step = static_cast<int>(t);
            }
            if (res > threshold) flagged = true;
        }
        if (flagged) rep.flagged_lines.push_back(static_cast<int>(k));
    }
    return rep;
}

std::string ElasticReport::summary() const {
    std::ostringstream os;
    if (families.empty()) return "no violated constraint family";
    for (std::size_t i = 0; i < families.size(); ++i) {
        if (i) os << ", ";
        os << families[i].first << " (" << families[i].second << ")";
    }
    return os.str();
}

ElasticReport elastic_diagnosis(const conic::Program& prog, const conic::SolverOptions& options, double tolerance) {
    const int n = prog.num_vars;
    const int p = prog.num_eq();
    const int l = prog.cones.nonneg;
    const int m = prog.num_cone_rows();
    const int ns = 2 * p + l;  // slacks: e+ and e- per equality, one per inequality

    conic::Program el;
    el.num_vars = n + ns;
    el.P.resize(n + ns, n + ns);
    el.c = Eigen::VectorXd::Zero(n + ns);
    // Physics rows are relaxed last, so limits get blamed when either would do.
    el.c.segment(n, 2 * p).setConstant(10.0);
    el.c.tail(l).setOnes();
    el.families = prog.families;

    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < prog.A.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(prog.A, j); it; ++it) trip.emplace_back(it.row(), j, it.value());
    }
    for (int i = 0; i < p; ++i) {
        trip.emplace_back(i, n + 2 * i, 1.0);
        trip.emplace_back(i, n + 2 * i + 1, -1.0);
    }
    el.A.resize(p, n + ns);
    el.A.setFromTriplets(trip.begin(), trip.end());
    el.b = prog.b;
    el.eq_family = prog.eq_family;

    // Rows: relaxed orthant rows, slack signs, then the original cones.
    trip.clear();
    const int rows = m + ns;
    el.h = Eigen::VectorXd::Zero(rows);
    auto map_row = [&](int r) { return r < l ? r : r + ns; };
    for (int j = 0; j < prog.G.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(prog.G, j); it; ++it) {
            trip.emplace_back(map_row(static_cast<int>(it.row())), j, it.value());
        }
    }
    for (int r = 0; r < m; ++r) el.h[map_row(r)] = prog.h[r];
    for (int r = 0; r < l; ++r) trip.emplace_back(r, n + 2 * p + r, -1.0);
    for (int s = 0; s < ns; ++s) trip.emplace_back(l + s, n + s, -1.0);
    el.G.resize(rows, n + ns);
    el.G.setFromTriplets(trip.begin(), trip.end());
    el.cones.nonneg = l + ns;
    el.cones.soc = prog.cones.soc;
    el.cone_family.assign(rows, 0);
    for (int r = 0; r < m; ++r) el.cone_family[map_row(r)] = prog.cone_family[r];

    conic::SolverOptions opt = options;
    opt.max_iterations = std::max(opt.max_iterations, 150);
    conic::Solution sol = conic::InteriorPointSolver(opt).solve(el);

    ElasticReport rep;
    if (!sol.ok()) {
        rep.feasible = false;
        rep.families.push_back({"elastic_solve_failed", 0.0});
        return rep;
    }
    std::vector<double> per_family(prog.families.size(), 0.0);
    for (int i = 0; i < p; ++i) per_family[prog.eq_family[i]] += sol.x[n + 2 * i] + sol.x[n + 2 * i + 1];
    for (int r = 0; r < l; ++r) per_family[prog.cone_family[r]] += sol.x[n + 2 * p + r];
    for (std::size_t f = 0; f < per_family.size(); ++f) {
        rep.total_violation += per_family[f];
        if (per_family[f] > tolerance) rep.families.push_back({prog.families[f], per_family[f]});
    }
    std::sort(rep.families.begin(), rep.families.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    rep.feasible = rep.families.empty();
    return rep;
}

}  // namespace dwc::opf
