#include "dwc/grid.hpp"

#include "dwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace dwc::grid {

std::string to_string(BusKind kind) {
    switch (kind) {
        case BusKind::Slack: return "slack";
        case BusKind::Junction: return "junction";
        case BusKind::Roadway: return "roadway";
    }
    return "?";
}

BusKind bus_kind_from_string(const std::string& name) {
    if (name == "slack" || name == "coupling") return BusKind::Slack;
    if (name == "junction") return BusKind::Junction;
    if (name == "roadway") return BusKind::Roadway;
    throw ConfigError("", "unknown bus kind '" + name + "'");
}

void CostSpec::validate() const {
    const std::pair<double, const char*> fields[] = {
        {c_solar, "c_solar_usd_per_mw"}, {c_batt, "c_batt_usd_per_unit"}, {c_coupling, "c_coupling_usd_per_mw"},
        {a_g, "a_g_usd_per_mw2h"},       {b_g, "b_g_usd_per_mwh"},        {c_g, "c_g_usd_per_h"},
        {cycling_penalty, "cycling_penalty_usd_per_mwh"}, {planning_years, "planning_years"},
        {days_per_year, "days_per_year"}};
    for (auto [v, name] : fields) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string("/costs/") + name, "must be finite and nonnegative");
    }
}

void ESUnitSpec::validate() const {
    const std::pair<double, const char*> fields[] = {{e_unit_mwh, "e_unit_mwh"},
                                                     {p_ch_max, "p_ch_max_mw"},
                                                     {p_dis_max, "p_dis_max_mw"},
                                                     {q_lim, "q_lim_mvar"},
                                                     {eta_ch, "eta_ch"},
                                                     {eta_dis, "eta_dis"}};
    for (auto [v, name] : fields) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("/es_unit/") + name, "must be positive");
    }
    if (eta_ch > 1.0) throw ConfigError("/es_unit/eta_ch", "must lie in (0, 1]");
    if (eta_dis > 1.0) throw ConfigError("/es_unit/eta_dis", "must lie in (0, 1]");
}

LineSpec make_line(int from, int to, double length_mi, const LineImpedance& z) {
    LineSpec l;
    l.from = from;
    l.to = to;
    l.length_mi = length_mi;
    l.r_ohm = length_mi * z.r_ohm_per_mi;
    l.x_ohm = length_mi * z.x_ohm_per_mi;
    return l;
}

int GridSpec::slack_bus() const {
    int slack = -1;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].kind == BusKind::Slack) {
            if (slack >= 0) throw TopologyError("more than one slack/coupling bus");
            slack = static_cast<int>(i);
        }
    }
    if (slack < 0) throw TopologyError("no slack/coupling bus");
    return slack;
}

std::vector<int> GridSpec::solar_buses() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].has_solar) out.push_back(static_cast<int>(i));
    }
    return out;
}

void GridSpec::validate() const {
    if (buses.empty()) throw ConfigError("/buses", "grid needs at least one bus");
    if (!(base_mva > 0.0)) throw ConfigError("/base_mva", "must be positive");
    if (!(base_kv > 0.0)) throw ConfigError("/base_kv", "must be positive");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string path = "/buses/" + std::to_string(i);
        const BusSpec& b = buses[i];
        if (b.id != static_cast<int>(i)) throw ConfigError(path + "/id", "bus ids must equal their position");
        if (!(b.v_min_pu > 0.0) || !(b.v_max_pu > b.v_min_pu)) {
            throw ConfigError(path + "/v_min_pu", "requires 0 < v_min < v_max");
        }
        if (b.kind == BusKind::Roadway && b.mapped_cells.empty()) {
            throw ConfigError(path + "/mapped_cells", "roadway bus needs at least one mapped cell");
        }
        if (b.es_units < 0) throw ConfigError(path + "/es_units", "must be nonnegative");
    }
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::string path = "/lines/" + std::to_string(k);
        const LineSpec& l = lines[k];
        if (!(l.length_mi >= 0.0)) throw ConfigError(path + "/length_mi", "must be nonnegative");
        if (!(l.r_ohm >= 0.0) || !(l.x_ohm >= 0.0)) throw ConfigError(path + "/r_ohm", "impedance must be nonnegative");
        if (!(l.ampacity_pu > 0.0)) throw ConfigError(path + "/ampacity_pu", "must be positive");
    }
    if (!(solar_q_fraction >= 0.0)) throw ConfigError("/solar_q_fraction", "must be nonnegative");
    if (!(grid_q_ratio >= 0.0)) throw ConfigError("/grid_q_ratio", "must be nonnegative");
    if (!(grid_p_max_mw > 0.0)) throw ConfigError("/grid_p_max_mw", "must be positive");
    if (!(solar_max_mw >= 0.0)) throw ConfigError("/solar_max_mw", "must be nonnegative");
    if (es_max_units_per_bus < 0) throw ConfigError("/es_max_units_per_bus", "must be nonnegative");
    es.validate();
    costs.validate();
    slack_bus();
}

double ohm_to_pu(double ohm, double base_kv, double base_mva) { return ohm * base_mva / (base_kv * base_kv); }
double pu_to_ohm(double pu, double base_kv, double base_mva) { return pu * base_kv * base_kv / base_mva; }

std::vector<int> Network::subtree(int bus) const {
    std::vector<int> out{bus};
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (int l : child_lines[out[k]]) out.push_back(line_to[l]);
    }
    return out;
}

Network build_network(const GridSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(spec.buses.size());
    Network net;
    net.num_buses = n;
    net.slack = spec.slack_bus();
    net.base_mva = spec.base_mva;
    net.base_kv = spec.base_kv;
    net.z_base_ohm = spec.base_kv * spec.base_kv / spec.base_mva;
    if (static_cast<int>(spec.lines.size()) != n - 1) {
        throw TopologyError("radial network with " + std::to_string(n) + " buses needs " + std::to_string(n - 1) +
                            " lines, got " + std::to_string(spec.lines.size()));
    }
    std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, spec line)
    for (std::size_t k = 0; k < spec.lines.size(); ++k) {
        const LineSpec& l = spec.lines[k];
        if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n) {
            throw TopologyError("line " + std::to_string(k) + " references an unknown bus");
        }
        if (l.from == l.to) throw TopologyError("line " + std::to_string(k) + " is a self-loop");
        adj[l.from].push_back({l.to, static_cast<int>(k)});
        adj[l.to].push_back({l.from, static_cast<int>(k)});
    }
    net.parent.assign(n, -2);
    net.parent_line.assign(n, -1);
    net.child_lines.assign(n, {});
    std::queue<int> frontier;
    frontier.push(net.slack);
    net.parent[net.slack] = -1;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        net.order.push_back(u);
        for (auto [v, k] : adj[u]) {
            if (net.parent_line[u] >= 0 && k == net.line_spec_index[net.parent_line[u]]) continue;
            if (net.parent[v] != -2) throw TopologyError("cycle through bus " + std::to_string(v));
            net.parent[v] = u;
            const int idx = static_cast<int>(net.line_from.size());
            net.parent_line[v] = idx;
            net.child_lines[u].push_back(idx);
            const LineSpec& l = spec.lines[k];
            net.line_from.push_back(u);
            net.line_to.push_back(v);
            net.line_spec_index.push_back(k);
            net.r_pu.push_back(ohm_to_pu(l.r_ohm, spec.base_kv, spec.base_mva));
            net.x_pu.push_back(ohm_to_pu(l.x_ohm, spec.base_kv, spec.base_mva));
            net.l_max_pu.push_back(l.ampacity_pu);
            net.degenerate.push_back(l.r_ohm == 0.0 && l.x_ohm == 0.0);
            frontier.push(v);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (net.parent[i] == -2) throw TopologyError("bus " + std::to_string(i) + " is not reachable from the slack bus");
    }
    for (const BusSpec& b : spec.buses) {
        net.v_min_sq.push_back(b.v_min_pu * b.v_min_pu);
        net.v_max_sq.push_back(b.v_max_pu * b.v_max_pu);
    }
    return net;
}

void size_ampacity(GridSpec& spec, const std::vector<std::vector<double>>& p_mw,
                   const std::vector<std::vector<double>>& q_mvar, double utilization) {
    if (!(utilization > 0.0) || utilization > 1.0) throw ConfigError("/ampacity_utilization", "must lie in (0, 1]");
    if (p_mw.size() != spec.buses.size() || q_mvar.size() != spec.buses.size()) {
        throw ConfigError("/demand", "load table does not match the bus count");
    }
    const Network net = build_network(spec);
    const std::size_t T = p_mw.empty() ? 0 : p_mw.front().size();
    for (std::size_t k = 0; k < net.num_lines(); ++k) {
        const auto buses = net.subtree(net.line_to[k]);
        double peak = 0.0;
        double vmin_sq = net.v_max_sq[net.line_to[k]];
        for (int b : buses) vmin_sq = std::min(vmin_sq, net.v_min_sq[b]);
        for (std::size_t t = 0; t < T; ++t) {
            double P = 0.0;
            double Q = 0.0;
            for (int b : buses) {
                P += p_mw[b][t];
                Q += q_mvar[b][t];
            }
            peak = std::max(peak, std::hypot(P, Q));
        }
        LineSpec& l = spec.lines[net.line_spec_index[k]];
        if (peak <= 0.0) {
            l.ampacity_pu = kInf;
            continue;
        }
        const double s_cap_pu = peak / utilization / spec.base_mva;
        l.ampacity_pu = s_cap_pu * s_cap_pu / vmin_sq;
    }
}

}  // namespace dwc::grid
