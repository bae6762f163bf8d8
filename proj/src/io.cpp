#include "dwc/io.hpp"

#include "dwc/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dwc::io {

namespace fs = std::filesystem;

namespace {

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

int as_int(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<int>();
}

std::vector<double> as_numbers(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], child(path, i)));
    return out;
}

std::vector<int> as_ints(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], child(path, i)));
    return out;
}

// Scalar shorthand expands to `steps` copies; null stands for +inf where
// `null_is_inf`.
std::vector<double> as_series(const Json& v, std::size_t steps, const std::string& path, bool null_is_inf = false) {
    auto scalar = [&](const Json& x, const std::string& p) {
        if (x.is_null() && null_is_inf) return std::numeric_limits<double>::infinity();
        return as_number(x, p);
    };
    if (v.is_array()) {
        std::vector<double> out;
        out.reserve(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(scalar(v[i], child(path, i)));
        return out;
    }
    return std::vector<double>(steps, scalar(v, path));
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json series_json(const std::vector<double>& v) {
    bool constant = !v.empty();
    for (double x : v) constant = constant && (x == v.front() || (std::isinf(x) && std::isinf(v.front())));
    if (constant) return number_or_null(v.front());
    Json a = Json::array();
    for (double x : v) a.push_back(number_or_null(x));
    return a;
}

// Strict object view: every key must be consumed before finish().
class Obj {
public:
    Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const std::string& path() const { return path_; }
    std::string at_path(const std::string& key) const { return child(path_, key); }

    const Json& required(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(at_path(key), "missing required field");
        used_.insert(key);
        return j_.at(key);
    }
    const Json* optional(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        used_.insert(key);
        return &j_.at(key);
    }

    double num(const std::string& key) { return as_number(required(key), at_path(key)); }
    double num(const std::string& key, double dflt) {
        const Json* v = optional(key);
        return v ? as_number(*v, at_path(key)) : dflt;
    }
    // null reads as +inf.
    double num_or_inf(const std::string& key, double dflt) {
        const Json* v = optional(key);
        if (!v) return dflt;
        if (v->is_null()) return std::numeric_limits<double>::infinity();
        return as_number(*v, at_path(key));
    }
    int integer(const std::string& key) { return as_int(required(key), at_path(key)); }
    int integer(const std::string& key, int dflt) {
        const Json* v = optional(key);
        return v ? as_int(*v, at_path(key)) : dflt;
    }
    bool boolean(const std::string& key, bool dflt) {
        const Json* v = optional(key);
        if (!v) return dflt;
        if (!v->is_boolean()) throw ConfigError(at_path(key), "expected true or false");
        return v->get<bool>();
    }
    std::string str(const std::string& key, const std::string& dflt) {
        const Json* v = optional(key);
        if (!v) return dflt;
        if (!v->is_string()) throw ConfigError(at_path(key), "expected a string");
        return v->get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) throw ConfigError(at_path(it.key()), "unknown field");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Re-raises schema errors with the file they came from.
template <class F>
auto in_file(const std::string& file, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        if (file.empty() || e.path().find('#') != std::string::npos) throw;
        throw ConfigError(file + "#" + (e.path().empty() ? "/" : e.path()), e.detail());
    }
}

}  // namespace

Json parse_json(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // byte is 1-based and points just past the offending character.
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        int line = 1;
        int col = 1;
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        const auto pos = what.find("syntax error");
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col),
                          pos == std::string::npos ? what : what.substr(pos));
    }
}

Json read_json_file(const fs::path& path) { return parse_json(read_text(path), path.string()); }

void write_json_file(const fs::path& path, const Json& doc) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path.string(), "cannot write file");
    out << doc.dump(2) << "\n";
}

// ---- corridor -------------------------------------------------------------

corridor::CorridorConfig corridor_from_json(const Json& doc) {
    Obj o(doc, "");
    corridor::CorridorConfig cfg;
    cfg.dt_h = o.num("dt_h");
    cfg.substeps = o.integer("substeps", cfg.substeps);
    cfg.horizon_steps = o.integer("horizon_steps");
    const auto T = static_cast<std::size_t>(std::max(cfg.horizon_steps, 0));

    const Json& cells = o.required("cells");
    if (!cells.is_array()) throw ConfigError("/cells", "expected an array");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        Obj c(cells[i], child("/cells", i));
        corridor::CellParams p;
        p.length_mi = c.num("length_mi");
        p.v_ff = c.num("v_ff_mph");
        p.w = c.num("w_mph");
        p.rho_crit = c.num("rho_crit_veh_per_mi");
        p.rho_jam = c.num("rho_jam_veh_per_mi");
        p.n_lanes = c.integer("n_lanes", 1);
        p.has_on_ramp = c.boolean("has_on_ramp", false);
        p.has_off_ramp = c.boolean("has_off_ramp", false);
        c.finish();
        cfg.cells.push_back(p);
    }
    const std::size_t n = cfg.cells.size();

    if (const Json* v = o.optional("initial_rho_veh_per_mi")) {
        cfg.initial_rho = as_series(*v, n, "/initial_rho_veh_per_mi");
    } else {
        cfg.initial_rho.assign(n, 0.0);
    }

    cfg.ramps.assign(n, {});
    for (auto& r : cfg.ramps) {
        r.on_ramp_demand.assign(T, 0.0);
        r.off_ramp_split.assign(T, 0.0);
        r.on_ramp_max.assign(T, 0.0);
        r.off_ramp_max.assign(T, 0.0);
    }
    if (const Json* ramps = o.optional("ramps")) {
        if (!ramps->is_array()) throw ConfigError("/ramps", "expected an array");
        if (ramps->size() != n) throw ConfigError("/ramps", "needs one schedule per cell");
        for (std::size_t i = 0; i < n; ++i) {
            Obj r((*ramps)[i], child("/ramps", i));
            auto& s = cfg.ramps[i];
            auto read = [&](const char* key, std::vector<double>& dst) {
                if (const Json* v = r.optional(key)) dst = as_series(*v, T, r.at_path(key));
            };
            read("on_ramp_demand_veh_per_h", s.on_ramp_demand);
            read("off_ramp_split", s.off_ramp_split);
            read("on_ramp_max_veh_per_h", s.on_ramp_max);
            read("off_ramp_max_veh_per_h", s.off_ramp_max);
            r.finish();
        }
    }
    cfg.upstream_demand = as_series(o.required("upstream_demand_veh_per_h"), T, "/upstream_demand_veh_per_h");
    if (const Json* v = o.optional("downstream_supply_veh_per_h")) {
        cfg.downstream_supply = as_series(*v, T, "/downstream_supply_veh_per_h", true);
    } else {
        cfg.downstream_supply.assign(T, std::numeric_limits<double>::infinity());
    }
    if (const Json* inc = o.optional("incidents")) {
        if (!inc->is_array()) throw ConfigError("/incidents", "expected an array");
        for (std::size_t i = 0; i < inc->size(); ++i) {
            Obj c((*inc)[i], child("/incidents", i));
            corridor::Incident x;
            x.cell = c.integer("cell");
            x.start_step = c.integer("start_step");
            x.end_step = c.integer("end_step");
            x.remaining_fraction = c.num("remaining_fraction");
            c.finish();
            cfg.incidents.push_back(x);
        }
    }
    o.finish();
    cfg.validate();
    return cfg;
}

Json to_json(const corridor::CorridorConfig& cfg) {
    Json j;
    j["dt_h"] = cfg.dt_h;
    j["substeps"] = cfg.substeps;
    j["horizon_steps"] = cfg.horizon_steps;
    Json cells = Json::array();
    for (const auto& c : cfg.cells) {
        Json x;
        x["length_mi"] = c.length_mi;
        x["v_ff_mph"] = c.v_ff;
        x["w_mph"] = c.w;
        x["rho_crit_veh_per_mi"] = c.rho_crit;
        x["rho_jam_veh_per_mi"] = c.rho_jam;
        x["n_lanes"] = c.n_lanes;
        if (c.has_on_ramp) x["has_on_ramp"] = true;
        if (c.has_off_ramp) x["has_off_ramp"] = true;
        cells.push_back(x);
    }
    j["cells"] = cells;
    j["initial_rho_veh_per_mi"] = series_json(cfg.initial_rho);
    Json ramps = Json::array();
    for (const auto& r : cfg.ramps) {
        Json x = Json::object();
        auto put = [&](const char* key, const std::vector<double>& v) {
            bool zero = true;
            for (double e : v) zero = zero && e == 0.0;
            if (!zero) x[key] = series_json(v);
        };
        put("on_ramp_demand_veh_per_h", r.on_ramp_demand);
        put("off_ramp_split", r.off_ramp_split);
        put("on_ramp_max_veh_per_h", r.on_ramp_max);
        put("off_ramp_max_veh_per_h", r.off_ramp_max);
        ramps.push_back(x);
    }
    j["ramps"] = ramps;
    j["upstream_demand_veh_per_h"] = series_json(cfg.upstream_demand);
    j["downstream_supply_veh_per_h"] = series_json(cfg.downstream_supply);
    Json inc = Json::array();
    for (const auto& x : cfg.incidents) {
        inc.push_back({{"cell", x.cell},
                       {"start_step", x.start_step},
                       {"end_step", x.end_step},
                       {"remaining_fraction", x.remaining_fraction}});
    }
    j["incidents"] = inc;
    return j;
}

// ---- grid -----------------------------------------------------------------

grid::GridSpec grid_from_json(const Json& doc) {
    Obj o(doc, "");
    grid::GridSpec g;
    const Json& buses = o.required("buses");
    if (!buses.is_array()) throw ConfigError("/buses", "expected an array");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        Obj b(buses[i], child("/buses", i));
        grid::BusSpec s;
        s.id = b.integer("id");
        try {
            s.kind = grid::bus_kind_from_string(b.str("kind", "roadway"));
        } catch (const ConfigError& e) {
            throw ConfigError(b.at_path("kind"), e.detail());
        }
        if (const Json* v = b.optional("mapped_cells")) s.mapped_cells = as_ints(*v, b.at_path("mapped_cells"));
        s.v_min_pu = b.num("v_min_pu", s.v_min_pu);
        s.v_max_pu = b.num("v_max_pu", s.v_max_pu);
        s.has_solar = b.boolean("has_solar", false);
        s.es_units = b.integer("es_units", 0);
        b.finish();
        g.buses.push_back(s);
    }
    const Json& lines = o.required("lines");
    if (!lines.is_array()) throw ConfigError("/lines", "expected an array");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        Obj l(lines[i], child("/lines", i));
        grid::LineSpec s;
        s.from = l.integer("from");
        s.to = l.integer("to");
        s.length_mi = l.num("length_mi", 0.0);
        s.r_ohm = l.num("r_ohm");
        s.x_ohm = l.num("x_ohm");
        s.ampacity_pu = l.num_or_inf("ampacity_pu", grid::kInf);
        l.finish();
        g.lines.push_back(s);
    }
    g.base_mva = o.num("base_mva", g.base_mva);
    g.base_kv = o.num("base_kv", g.base_kv);
    if (const Json* v = o.optional("es_unit")) {
        Obj e(*v, "/es_unit");
        g.es.e_unit_mwh = e.num("e_unit_mwh", g.es.e_unit_mwh);
        g.es.p_ch_max = e.num("p_ch_max_mw", g.es.p_ch_max);
        g.es.p_dis_max = e.num("p_dis_max_mw", g.es.p_dis_max);
        g.es.q_lim = e.num("q_lim_mvar", g.es.q_lim);
        g.es.eta_ch = e.num("eta_ch", g.es.eta_ch);
        g.es.eta_dis = e.num("eta_dis", g.es.eta_dis);
        e.finish();
    }
    if (const Json* v = o.optional("costs")) {
        Obj c(*v, "/costs");
        auto& k = g.costs;
        k.c_solar = c.num("c_solar_usd_per_mw", k.c_solar);
        k.c_batt = c.num("c_batt_usd_per_unit", k.c_batt);
        k.c_coupling = c.num("c_coupling_usd_per_mw", k.c_coupling);
        k.a_g = c.num("a_g_usd_per_mw2h", k.a_g);
        k.b_g = c.num("b_g_usd_per_mwh", k.b_g);
        k.c_g = c.num("c_g_usd_per_h", k.c_g);
        k.cycling_penalty = c.num("cycling_penalty_usd_per_mwh", k.cycling_penalty);
        k.planning_years = c.num("planning_years", k.planning_years);
        k.days_per_year = c.num("days_per_year", k.days_per_year);
        c.finish();
    }
    g.solar_q_fraction = o.num("solar_q_fraction", g.solar_q_fraction);
    g.grid_q_ratio = o.num("grid_q_ratio", g.grid_q_ratio);
    g.grid_p_max_mw = o.num_or_inf("grid_p_max_mw", g.grid_p_max_mw);
    g.solar_max_mw = o.num("solar_max_mw", g.solar_max_mw);
    g.es_max_units_per_bus = o.integer("es_max_units_per_bus", g.es_max_units_per_bus);
    if (const Json* v = o.optional("es_excluded")) g.es_excluded = as_ints(*v, "/es_excluded");
    o.finish();
    g.validate();
    grid::build_network(g);
    return g;
}

Json to_json(const grid::GridSpec& g) {
    Json j;
    Json buses = Json::array();
    for (const auto& b : g.buses) {
        Json x;
        x["id"] = b.id;
        x["kind"] = grid::to_string(b.kind);
        if (!b.mapped_cells.empty()) x["mapped_cells"] = b.mapped_cells;
        x["v_min_pu"] = b.v_min_pu;
        x["v_max_pu"] = b.v_max_pu;
        if (b.has_solar) x["has_solar"] = true;
        if (b.es_units != 0) x["es_units"] = b.es_units;
        buses.push_back(x);
    }
    j["buses"] = buses;
    Json lines = Json::array();
    for (const auto& l : g.lines) {
        lines.push_back({{"from", l.from},
                         {"to", l.to},
                         {"length_mi", l.length_mi},
                         {"r_ohm", l.r_ohm},
                         {"x_ohm", l.x_ohm},
                         {"ampacity_pu", number_or_null(l.ampacity_pu)}});
    }
    j["lines"] = lines;
    j["base_mva"] = g.base_mva;
    j["base_kv"] = g.base_kv;
    j["es_unit"] = {{"e_unit_mwh", g.es.e_unit_mwh}, {"p_ch_max_mw", g.es.p_ch_max},
                    {"p_dis_max_mw", g.es.p_dis_max}, {"q_lim_mvar", g.es.q_lim},
                    {"eta_ch", g.es.eta_ch},          {"eta_dis", g.es.eta_dis}};
    const auto& k = g.costs;
    j["costs"] = {{"c_solar_usd_per_mw", k.c_solar},
                  {"c_batt_usd_per_unit", k.c_batt},
                  {"c_coupling_usd_per_mw", k.c_coupling},
                  {"a_g_usd_per_mw2h", k.a_g},
                  {"b_g_usd_per_mwh", k.b_g},
                  {"c_g_usd_per_h", k.c_g},
                  {"cycling_penalty_usd_per_mwh", k.cycling_penalty},
                  {"planning_years", k.planning_years},
                  {"days_per_year", k.days_per_year}};
    j["solar_q_fraction"] = g.solar_q_fraction;
    j["grid_q_ratio"] = g.grid_q_ratio;
    j["grid_p_max_mw"] = number_or_null(g.grid_p_max_mw);
    j["solar_max_mw"] = g.solar_max_mw;
    j["es_max_units_per_bus"] = g.es_max_units_per_bus;
    j["es_excluded"] = g.es_excluded;
    return j;
}

// ---- vehicle, fleet, ensemble, solver --------------------------------------

energy::VehicleParams vehicle_from_json(const Json& doc) {
    Obj o(doc, "/vehicle");
    energy::VehicleParams v;
    v.eta_drive = o.num("eta_drive", v.eta_drive);
    v.c_d = o.num("c_d", v.c_d);
    v.c_rr = o.num("c_rr", v.c_rr);
    v.frontal_area_m2 = o.num("frontal_area_m2", v.frontal_area_m2);
    v.rho_air = o.num("rho_air_kg_per_m3", v.rho_air);
    v.mass_kg = o.num("mass_kg", v.mass_kg);
    v.g = o.num("g_m_per_s2", v.g);
    v.p_aux_kw = o.num("p_aux_kw", v.p_aux_kw);
    v.e_battery_kwh = o.num("e_battery_kwh", v.e_battery_kwh);
    v.soc_mile = o.num("soc_mile", v.soc_mile);
    o.finish();
    v.validate();
    return v;
}

Json to_json(const energy::VehicleParams& v) {
    return {{"eta_drive", v.eta_drive},       {"c_d", v.c_d},
            {"c_rr", v.c_rr},                 {"frontal_area_m2", v.frontal_area_m2},
            {"rho_air_kg_per_m3", v.rho_air}, {"mass_kg", v.mass_kg},
            {"g_m_per_s2", v.g},              {"p_aux_kw", v.p_aux_kw},
            {"e_battery_kwh", v.e_battery_kwh}, {"soc_mile", v.soc_mile}};
}

energy::FleetScaling fleet_from_json(const Json& doc) {
    Obj o(doc, "/fleet");
    energy::FleetScaling f;
    f.truck_share = o.num("truck_share", f.truck_share);
    f.rightmost_lane_share = o.num("rightmost_lane_share", f.rightmost_lane_share);
    o.finish();
    f.validate();
    return f;
}

Json to_json(const energy::FleetScaling& f) {
    return {{"truck_share", f.truck_share}, {"rightmost_lane_share", f.rightmost_lane_share}};
}

scenarios::EnsembleSpec ensemble_from_json(const Json& doc) {
    Obj o(doc, "/ensemble");
    scenarios::EnsembleSpec s;
    s.nv = o.integer("nv", s.nv);
    s.cw = o.integer("cw", s.cw);
    s.acc_mainline = o.integer("acc_mainline", s.acc_mainline);
    s.acc_ramp = o.integer("acc_ramp", s.acc_ramp);
    s.ff = o.integer("ff", s.ff);
    if (const Json* v = o.optional("master_seed")) {
        if (!v->is_number_unsigned()) throw ConfigError("/ensemble/master_seed", "expected a nonnegative integer");
        s.master_seed = v->get<std::uint64_t>();
    }
    auto& p = s.params;
    p.nv_sigma = o.num("nv_sigma", p.nv_sigma);
    p.nv_truncation_sigmas = o.num("nv_truncation_sigmas", p.nv_truncation_sigmas);
    p.cw_factor_min = o.num("cw_factor_min", p.cw_factor_min);
    p.cw_factor_max = o.num("cw_factor_max", p.cw_factor_max);
    p.neighbor_radius = o.integer("neighbor_radius", p.neighbor_radius);
    p.acc_duration_min_h = o.num("acc_duration_min_h", p.acc_duration_min_h);
    p.acc_duration_max_h = o.num("acc_duration_max_h", p.acc_duration_max_h);
    if (const Json* v = o.optional("severity_prob")) {
        const auto a = as_numbers(*v, "/ensemble/severity_prob");
        if (a.size() != 3) throw ConfigError("/ensemble/severity_prob", "needs mild, moderate and severe entries");
        for (int i = 0; i < 3; ++i) p.severity_prob[i] = a[i];
    }
    if (const Json* v = o.optional("severity_lanes")) {
        const auto a = as_ints(*v, "/ensemble/severity_lanes");
        if (a.size() != 3) throw ConfigError("/ensemble/severity_lanes", "needs mild, moderate and severe entries");
        for (int i = 0; i < 3; ++i) p.severity_lanes[i] = a[i];
    }
    p.acc_nearby_cap_min = o.num("acc_nearby_cap_min", p.acc_nearby_cap_min);
    p.acc_nearby_cap_max = o.num("acc_nearby_cap_max", p.acc_nearby_cap_max);
    p.ramp_closure_min_h = o.num("ramp_closure_min_h", p.ramp_closure_min_h);
    p.ramp_closure_max_h = o.num("ramp_closure_max_h", p.ramp_closure_max_h);
    p.ff_upstream_multiplier = o.num("ff_upstream_multiplier", p.ff_upstream_multiplier);
    o.finish();
    s.validate();
    return s;
}

Json to_json(const scenarios::EnsembleSpec& s) {
    const auto& p = s.params;
    return {{"nv", s.nv},
            {"cw", s.cw},
            {"acc_mainline", s.acc_mainline},
            {"acc_ramp", s.acc_ramp},
            {"ff", s.ff},
            {"master_seed", s.master_seed},
            {"nv_sigma", p.nv_sigma},
            {"nv_truncation_sigmas", p.nv_truncation_sigmas},
            {"cw_factor_min", p.cw_factor_min},
            {"cw_factor_max", p.cw_factor_max},
            {"neighbor_radius", p.neighbor_radius},
            {"acc_duration_min_h", p.acc_duration_min_h},
            {"acc_duration_max_h", p.acc_duration_max_h},
            {"severity_prob", {p.severity_prob[0], p.severity_prob[1], p.severity_prob[2]}},
            {"severity_lanes", {p.severity_lanes[0], p.severity_lanes[1], p.severity_lanes[2]}},
            {"acc_nearby_cap_min", p.acc_nearby_cap_min},
            {"acc_nearby_cap_max", p.acc_nearby_cap_max},
            {"ramp_closure_min_h", p.ramp_closure_min_h},
            {"ramp_closure_max_h", p.ramp_closure_max_h},
            {"ff_upstream_multiplier", p.ff_upstream_multiplier}};
}

conic::SolverOptions solver_from_json(const Json& doc, const conic::SolverOptions& base) {
    Obj o(doc, "/solver");
    conic::SolverOptions s = base;
    s.max_iterations = o.integer("max_iterations", s.max_iterations);
    s.feas_tol = o.num("feas_tol", s.feas_tol);
    s.gap_abs_tol = o.num("gap_abs_tol", s.gap_abs_tol);
    s.gap_rel_tol = o.num("gap_rel_tol", s.gap_rel_tol);
    s.inaccurate_tol = o.num("inaccurate_tol", s.inaccurate_tol);
    s.static_reg = o.num("static_reg", s.static_reg);
    s.refine_steps = o.integer("refine_steps", s.refine_steps);
    s.equilibration_passes = o.integer("equilibration_passes", s.equilibration_passes);
    s.verbose = o.boolean("verbose", s.verbose);
    o.finish();
    if (s.max_iterations < 1) throw ConfigError("/solver/max_iterations", "must be at least 1");
    for (auto [v, name] : {std::pair{s.feas_tol, "feas_tol"}, {s.gap_abs_tol, "gap_abs_tol"},
                           {s.gap_rel_tol, "gap_rel_tol"}, {s.inaccurate_tol, "inaccurate_tol"}}) {
        if (!(v > 0.0)) throw ConfigError(std::string("/solver/") + name, "must be positive");
    }
    if (!(s.static_reg >= 0.0)) throw ConfigError("/solver/static_reg", "must be nonnegative");
    if (s.refine_steps < 0 || s.equilibration_passes < 0) throw ConfigError("/solver", "counts must be nonnegative");
    return s;
}

Json to_json(const conic::SolverOptions& s) {
    return {{"max_iterations", s.max_iterations}, {"feas_tol", s.feas_tol},
            {"gap_abs_tol", s.gap_abs_tol},       {"gap_rel_tol", s.gap_rel_tol},
            {"inaccurate_tol", s.inaccurate_tol}, {"static_reg", s.static_reg},
            {"refine_steps", s.refine_steps},     {"equilibration_passes", s.equilibration_passes},
            {"verbose", s.verbose}};
}

conic::SolverOptions solver_options_from_env() {
    const char* raw = std::getenv(kSolverEnvVar);
    if (!raw || !*raw) return {};
    const std::string source = std::string("$") + kSolverEnvVar;
    return in_file(source, [&] { return solver_from_json(parse_json(raw, source)); });
}

// ---- solar, demand, design -------------------------------------------------

std::vector<double> solar_from_json(const Json& doc, std::size_t steps, double dt_h) {
    Obj o(doc, "/solar");
    std::vector<double> g;
    if (const Json* v = o.optional("availability")) {
        if (o.has("clear_sky_peak")) throw ConfigError("/solar", "give availability or clear_sky_peak, not both");
        g = as_numbers(*v, "/solar/availability");
        for (std::size_t t = 0; t < g.size(); ++t) {
            if (!(g[t] >= 0.0) || g[t] > 1.0) throw ConfigError(child("/solar/availability", t), "must lie in [0, 1]");
        }
        if (g.size() != steps) {
            throw ConfigError("/solar/availability", "needs " + std::to_string(steps) + " entries, got " +
                                                         std::to_string(g.size()));
        }
    } else {
        const double peak = o.num("clear_sky_peak", 0.85);
        if (!(peak >= 0.0) || peak > 1.0) throw ConfigError("/solar/clear_sky_peak", "must lie in [0, 1]");
        g = case_study::solar_profile(steps, dt_h, peak);
    }
    o.finish();
    return g;
}

Json solar_to_json(const std::vector<double>& availability) { return {{"availability", availability}}; }

energy::DemandProfile demand_from_json(const Json& doc) {
    Obj o(doc, "/demand");
    energy::DemandProfile d;
    d.dt_h = o.num("dt_h");
    d.power_factor = o.num("power_factor", 1.0);
    const Json& p = o.required("p_mw");
    if (!p.is_array()) throw ConfigError("/demand/p_mw", "expected one series per bus");
    for (std::size_t b = 0; b < p.size(); ++b) d.p_mw.push_back(as_numbers(p[b], child("/demand/p_mw", b)));
    if (const Json* q = o.optional("q_mvar")) {
        if (!q->is_array()) throw ConfigError("/demand/q_mvar", "expected one series per bus");
        for (std::size_t b = 0; b < q->size(); ++b) d.q_mvar.push_back(as_numbers((*q)[b], child("/demand/q_mvar", b)));
    } else {
        if (!(d.power_factor > 0.0) || d.power_factor > 1.0) throw ConfigError("/power_factor", "must lie in (0, 1]");
        const double k = energy::reactive_ratio(d.power_factor);
        for (const auto& row : d.p_mw) {
            std::vector<double> q(row.size());
            for (std::size_t t = 0; t < row.size(); ++t) q[t] = k * row[t];
            d.q_mvar.push_back(q);
        }
    }
    o.finish();
    d.validate();
    return d;
}

Json to_json(const energy::DemandProfile& d) {
    return {{"dt_h", d.dt_h}, {"power_factor", d.power_factor}, {"p_mw", d.p_mw}, {"q_mvar", d.q_mvar}};
}

planner::PlanningDesign design_from_json(const Json& doc) {
    Obj o(doc, "/design");
    planner::PlanningDesign d;
    d.solar_mw = as_numbers(o.required("solar_mw"), "/design/solar_mw");
    d.es_units = as_ints(o.required("es_units"), "/design/es_units");
    d.coupling_mw = o.num("coupling_mw");
    // Cost fields are outputs; accepted so a written design reads back.
    d.capital_cost = o.num("capital_cost_usd", 0.0);
    d.daily_operational_cost = o.num("daily_operational_cost_usd", 0.0);
    d.lifetime_operational_cost = o.num("lifetime_operational_cost_usd", 0.0);
    d.total_cost = o.num("total_cost_usd", 0.0);
    o.finish();
    if (d.solar_mw.size() != d.es_units.size()) throw ConfigError("/design/es_units", "needs one entry per bus");
    for (std::size_t i = 0; i < d.solar_mw.size(); ++i) {
        if (!(d.solar_mw[i] >= 0.0)) throw ConfigError(child("/design/solar_mw", i), "must be nonnegative");
        if (d.es_units[i] < 0) throw ConfigError(child("/design/es_units", i), "must be nonnegative");
    }
    if (!(d.coupling_mw >= 0.0)) throw ConfigError("/design/coupling_mw", "must be nonnegative");
    return d;
}

Json to_json(const planner::PlanningDesign& d) {
    return {{"solar_mw", d.solar_mw},
            {"es_units", d.es_units},
            {"coupling_mw", d.coupling_mw},
            {"capital_cost_usd", d.capital_cost},
            {"daily_operational_cost_usd", d.daily_operational_cost},
            {"lifetime_operational_cost_usd", d.lifetime_operational_cost},
            {"total_cost_usd", d.total_cost}};
}

// ---- run configuration -----------------------------------------------------

namespace {

// A section given inline or as a path to a file of its own.
Json section(const Json& v, const fs::path& base_dir, std::string& file) {
    if (v.is_string()) {
        fs::path p = v.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        if (!fs::exists(p)) throw ConfigError(p.string(), "referenced file does not exist");
        file = p.string();
        return read_json_file(p);
    }
    file.clear();
    return v;
}

// Prefix for errors from an inline section.
template <class F>
auto in_section(const std::string& file, const std::string& key, F&& f) -> decltype(f()) {
    if (!file.empty()) return in_file(file, f);
    try {
        return f();
    } catch (const ConfigError& e) {
        if (e.path().find('#') != std::string::npos) throw;
        const std::string& p = e.path();
        // Validators of nested sections already use /vehicle, /fleet, ...
        if (p.rfind("/" + key, 0) == 0) throw;
        throw ConfigError("/" + key + (p == "/" ? std::string() : p), e.detail());
    }
}

}  // namespace

LoadedRun load_configs(const fs::path& run_path) {
    const std::string file = run_path.string();
    const Json doc = read_json_file(run_path);
    const fs::path base = run_path.has_parent_path() ? run_path.parent_path() : fs::path(".");
    LoadedRun run;
    if (doc.is_object() && doc.contains("manifest_version")) {
        // A manifest re-runs its resolved configuration.
        if (!doc.contains("config")) throw ConfigError(file + "#/config", "missing required field");
        run = in_file(file, [&] { return load_configs(doc.at("config"), base); });
    } else {
        run = in_file(file, [&] { return load_configs(doc, base); });
    }
    run.run.source = run_path;
    return run;
}

LoadedRun load_configs(const Json& doc, const fs::path& base_dir) {
    Obj o(doc, "");
    LoadedRun out;
    RunConfig& rc = out.run;

    // Every section is parsed and validated before any compute.
    std::string file;
    std::optional<corridor::CorridorConfig> corridor;
    if (const Json* v = o.optional("corridor")) {
        const Json c = section(*v, base_dir, file);
        if (!file.empty()) rc.corridor_path = file;
        corridor = in_section(file, "corridor", [&] { return corridor_from_json(c); });
    }
    {
        const Json g = section(o.required("grid"), base_dir, file);
        if (!file.empty()) rc.grid_path = file;
        out.cs.grid = in_section(file, "grid", [&] { return grid_from_json(g); });
    }
    if (const Json* v = o.optional("vehicle")) {
        const Json s = section(*v, base_dir, file);
        out.cs.vehicle = in_section(file, "vehicle", [&] { return vehicle_from_json(s); });
    }
    if (const Json* v = o.optional("fleet")) {
        const Json s = section(*v, base_dir, file);
        out.cs.fleet = in_section(file, "fleet", [&] { return fleet_from_json(s); });
    }
    if (const Json* v = o.optional("ensemble")) {
        const Json s = section(*v, base_dir, file);
        rc.ensemble = in_section(file, "ensemble", [&] { return ensemble_from_json(s); });
    }
    rc.solver = solver_options_from_env();
    if (const Json* v = o.optional("solver")) {
        const Json s = section(*v, base_dir, file);
        rc.solver = in_section(file, "solver", [&] { return solver_from_json(s, rc.solver); });
    }
    std::optional<Json> demand_doc;
    std::string demand_file;
    if (const Json* v = o.optional("demand")) demand_doc = section(*v, base_dir, demand_file);
    std::optional<Json> solar_doc;
    std::string solar_file;
    if (const Json* v = o.optional("solar")) solar_doc = section(*v, base_dir, solar_file);

    rc.output_dir = o.str("output_dir", rc.output_dir.string());
    if (const Json* v = o.optional("mode")) {
        Obj m(*v, "/mode");
        rc.strict_validation = m.boolean("strict_validation", rc.strict_validation);
        rc.aggregation = m.integer("aggregation", rc.aggregation);
        m.finish();
        if (rc.aggregation < 1) throw ConfigError("/mode/aggregation", "must be at least 1");
    }
    rc.power_factor = o.num("power_factor", rc.power_factor);
    if (!(rc.power_factor > 0.0) || rc.power_factor > 1.0) throw ConfigError("/power_factor", "must lie in (0, 1]");
    if (const Json* v = o.optional("ampacity_utilization")) {
        if (!v->is_null()) {
            rc.ampacity_utilization = as_number(*v, "/ampacity_utilization");
            if (!(*rc.ampacity_utilization > 0.0) || *rc.ampacity_utilization > 1.0) {
                throw ConfigError("/ampacity_utilization", "must lie in (0, 1]");
            }
        }
    }
    if (const Json* v = o.optional("planner")) {
        Obj p(*v, "/planner");
        rc.loss_penalty = p.num("loss_penalty", rc.loss_penalty);
        rc.service_threshold = p.num("service_threshold", rc.service_threshold);
        rc.scale_increment = p.num("scale_increment", rc.scale_increment);
        rc.max_scale_iterations = p.integer("max_scale_iterations", rc.max_scale_iterations);
        if (const Json* k = p.optional("k_values")) rc.k_values = as_ints(*k, "/planner/k_values");
        rc.family = p.str("family", rc.family);
        rc.siting_threshold = p.num("siting_threshold", rc.siting_threshold);
        rc.shortfall_tolerance_mw = p.num("shortfall_tolerance_mw", rc.shortfall_tolerance_mw);
        rc.gap_tolerance = p.num("gap_tolerance", rc.gap_tolerance);
        rc.node_limit = p.integer("node_limit", rc.node_limit);
        p.finish();
        if (!(rc.loss_penalty >= 0.0)) throw ConfigError("/planner/loss_penalty", "must be nonnegative");
        if (!(rc.service_threshold >= 0.0) || rc.service_threshold > 1.0) {
            throw ConfigError("/planner/service_threshold", "must lie in [0, 1]");
        }
        if (!(rc.scale_increment > 0.0)) throw ConfigError("/planner/scale_increment", "must be positive");
        if (rc.max_scale_iterations < 0) throw ConfigError("/planner/max_scale_iterations", "must be nonnegative");
        for (std::size_t i = 0; i < rc.k_values.size(); ++i) {
            if (rc.k_values[i] < 0) throw ConfigError(child("/planner/k_values", i), "must be nonnegative");
        }
        if (!rc.family.empty()) {
            try {
                scenarios::kind_from_string(rc.family);
            } catch (const ConfigError& e) {
                throw ConfigError("/planner/family", e.detail());
            }
        }
        if (!(rc.shortfall_tolerance_mw >= 0.0)) throw ConfigError("/planner/shortfall_tolerance_mw", "must be nonnegative");
        if (!(rc.gap_tolerance >= 0.0)) throw ConfigError("/planner/gap_tolerance", "must be nonnegative");
        if (rc.node_limit < 1) throw ConfigError("/planner/node_limit", "must be at least 1");
    }
    if (const Json* v = o.optional("compare")) {
        Obj c(*v, "/compare");
        rc.compare_mode = c.str("mode", rc.compare_mode);
        rc.compare_peak_mw = c.num("peak_mw", rc.compare_peak_mw);
        c.finish();
        if (rc.compare_mode != "sizing" && rc.compare_mode != "operational") {
            throw ConfigError("/compare/mode", "expected sizing or operational");
        }
    }
    o.finish();

    out.cs.power_factor = rc.power_factor;
    out.cs.strict = rc.strict_validation;
    out.cs.ampacity_utilization = rc.ampacity_utilization.value_or(0.0);
    if (demand_doc) {
        out.demand = in_section(demand_file, "demand", [&] { return demand_from_json(*demand_doc); });
        if (out.demand->num_buses() != out.cs.grid.num_buses()) {
            throw ConfigError("/demand/p_mw", "needs one series per grid bus");
        }
    }
    if (corridor) {
        out.has_corridor = true;
        out.cs.corridor = *corridor;
        // Mapping is checked here, before the simulation runs.
        std::vector<int> owner(corridor->num_cells(), -1);
        for (const auto& b : out.cs.grid.buses) {
            for (int c : b.mapped_cells) {
                if (c < 0 || static_cast<std::size_t>(c) >= owner.size()) {
                    throw ConfigError("/grid/buses/" + std::to_string(b.id) + "/mapped_cells", "unknown cell " +
                                                                                              std::to_string(c));
                }
                if (owner[c] >= 0) {
                    throw ConfigError("/grid/buses/" + std::to_string(b.id) + "/mapped_cells",
                                      "cell " + std::to_string(c) + " already mapped to bus " + std::to_string(owner[c]));
                }
                owner[c] = b.id;
            }
        }
        for (std::size_t c = 0; c < owner.size(); ++c) {
            if (owner[c] < 0) throw ConfigError("/grid/buses", "cell " + std::to_string(c) + " is not mapped to a bus");
        }
    } else if (!out.demand) {
        throw ConfigError("/corridor", "either corridor or demand is required");
    }
    const std::size_t steps = out.demand ? out.demand->steps() : static_cast<std::size_t>(out.cs.corridor.horizon_steps);
    const double dt = out.demand ? out.demand->dt_h : out.cs.corridor.interval_h();
    if (steps % static_cast<std::size_t>(rc.aggregation) != 0) {
        throw ConfigError("/mode/aggregation", "horizon of " + std::to_string(steps) + " steps is not divisible by " +
                                                   std::to_string(rc.aggregation));
    }
    out.cs.solar_availability = in_section(solar_file, "solar", [&] {
        return solar_from_json(solar_doc.value_or(Json::object()), steps, dt);
    });

    out.baseline = out.demand ? *out.demand : case_study::baseline_demand(out.cs);
    if (rc.ampacity_utilization) {
        grid::size_ampacity(out.cs.grid, out.baseline.p_mw, out.baseline.q_mvar, *rc.ampacity_utilization);
        out.cs.grid.validate();
    }

    // Resolved graph, itself a valid inline run document.
    Json r;
    r["corridor"] = out.has_corridor ? to_json(out.cs.corridor) : Json(nullptr);
    if (!out.has_corridor) r.erase("corridor");
    r["grid"] = to_json(out.cs.grid);
    r["vehicle"] = to_json(out.cs.vehicle);
    r["fleet"] = to_json(out.cs.fleet);
    r["ensemble"] = to_json(rc.ensemble);
    r["solver"] = to_json(rc.solver);
    if (out.demand) r["demand"] = to_json(*out.demand);
    r["solar"] = solar_to_json(out.cs.solar_availability);
    r["output_dir"] = rc.output_dir.string();
    r["mode"] = {{"strict_validation", rc.strict_validation}, {"aggregation", rc.aggregation}};
    r["power_factor"] = rc.power_factor;
    // Caps are already in the resolved grid.
    r["ampacity_utilization"] = nullptr;
    r["planner"] = {{"loss_penalty", rc.loss_penalty},
                    {"service_threshold", rc.service_threshold},
                    {"scale_increment", rc.scale_increment},
                    {"max_scale_iterations", rc.max_scale_iterations},
                    {"k_values", rc.k_values},
                    {"family", rc.family},
                    {"siting_threshold", rc.siting_threshold},
                    {"shortfall_tolerance_mw", rc.shortfall_tolerance_mw},
                    {"gap_tolerance", rc.gap_tolerance},
                    {"node_limit", rc.node_limit}};
    r["compare"] = {{"mode", rc.compare_mode}, {"peak_mw", rc.compare_peak_mw}};
    out.resolved = std::move(r);
    return out;
}

Json make_manifest(const LoadedRun& run, const std::string& command, const Json& outputs) {
    Json m;
    m["manifest_version"] = 1;
    m["tool"] = "dwcplan";
    m["tool_version"] = kToolVersion;
    m["command"] = command;
    m["source"] = run.run.source.string();
    m["master_seed"] = run.run.ensemble.master_seed;
    m["config_digest"] = digest(run.resolved.dump());
    m["config"] = run.resolved;
    m["outputs"] = outputs;
    return m;
}

// ---- tables ----------------------------------------------------------------

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drops the sign of -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

Table& Table::row() {
    rows_.emplace_back();
    return *this;
}

Table& Table::add(double v) { return add(format_number(v)); }

Table& Table::add(int v) { return add(std::to_string(v)); }

Table& Table::add(const std::string& v) {
    if (rows_.empty()) rows_.emplace_back();
    if (v.find_first_of(",\"\n") == std::string::npos) {
        rows_.back().push_back(v);
    } else {
        std::string q = "\"";
        for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        rows_.back().push_back(q + "\"");
    }
    return *this;
}

std::string Table::str() const {
    std::string s;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += ',';
            s += cells[i];
        }
        s += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return s;
}

void Table::write(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path.string(), "cannot write file");
    out << str();
}

std::string digest(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dwc::io
