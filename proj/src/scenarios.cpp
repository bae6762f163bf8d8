#include "dwc/scenarios.hpp"

#include "dwc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dwc::scenarios {

using corridor::CorridorConfig;

std::string to_string(Kind kind) {
    switch (kind) {
        case Kind::NV: return "NV";
        case Kind::CW: return "CW";
        case Kind::ACC_MAINLINE: return "ACC_MAINLINE";
        case Kind::ACC_RAMP: return "ACC_RAMP";
        case Kind::FF: return "FF";
    }
    return "?";
}

std::string to_string(Severity s) {
    switch (s) {
        case Severity::None: return "none";
        case Severity::Mild: return "mild";
        case Severity::Moderate: return "moderate";
        case Severity::Severe: return "severe";
    }
    return "?";
}

Kind kind_from_string(const std::string& name) {
    for (Kind k : {Kind::NV, Kind::CW, Kind::ACC_MAINLINE, Kind::ACC_RAMP, Kind::FF}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("/kind", "unknown scenario kind '" + name + "'");
}

std::string ScenarioSpec::name() const {
    return to_string(kind) + "_" + std::to_string(index);
}

void ScenarioParams::validate() const {
    auto range = [](double lo, double hi, const char* path) {
        if (!(lo >= 0.0) || !(hi >= lo)) throw ConfigError(path, "invalid range");
    };
    if (!(nv_sigma >= 0.0)) throw ConfigError("/ensemble/nv_sigma", "must be nonnegative");
    if (!(nv_truncation_sigmas > 0.0)) throw ConfigError("/ensemble/nv_truncation_sigmas", "must be positive");
    range(cw_factor_min, cw_factor_max, "/ensemble/cw_factor");
    if (cw_factor_max > 1.0) throw ConfigError("/ensemble/cw_factor", "must not exceed 1");
    range(acc_duration_min_h, acc_duration_max_h, "/ensemble/acc_duration_h");
    range(acc_nearby_cap_min, acc_nearby_cap_max, "/ensemble/acc_nearby_cap");
    range(ramp_closure_min_h, ramp_closure_max_h, "/ensemble/ramp_closure_h");
    if (neighbor_radius < 0) throw ConfigError("/ensemble/neighbor_radius", "must be nonnegative");
    double psum = 0.0;
    for (double p : severity_prob) {
        if (!(p >= 0.0)) throw ConfigError("/ensemble/severity_prob", "must be nonnegative");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9) throw ConfigError("/ensemble/severity_prob", "must sum to 1");
    for (int l : severity_lanes) {
        if (l < 1) throw ConfigError("/ensemble/severity_lanes", "must be at least 1");
    }
    if (!(ff_upstream_multiplier >= 0.0)) throw ConfigError("/ensemble/ff_upstream_multiplier", "must be nonnegative");
}

void EnsembleSpec::validate() const {
    if (nv < 0 || cw < 0 || acc_mainline < 0 || acc_ramp < 0 || ff < 0) {
        throw ConfigError("/ensemble/counts", "must be nonnegative");
    }
    params.validate();
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t counter) {
    return mix64(mix64(master_seed) ^ (counter * 0xD1B54A32D192ED03ULL + 1));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection keeps the draw unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return r % n;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

void record(ScenarioSpec* spec, std::string path, std::string op, double value, int start = -1, int end = -1) {
    if (spec) spec->modifiers.push_back({std::move(path), std::move(op), value, start, end});
}

double nv_multiplier(Rng& rng, const ScenarioParams& p) {
    const double z = std::clamp(rng.normal(), -p.nv_truncation_sigmas, p.nv_truncation_sigmas);
    return std::max(0.0, 1.0 + p.nv_sigma * z);
}

int steps_for(double hours, const CorridorConfig& cfg) {
    const int s = static_cast<int>(std::lround(hours / cfg.interval_h()));
    return std::clamp(s, 1, cfg.horizon_steps);
}

std::vector<int> cells_where(const CorridorConfig& cfg, bool (*pred)(const corridor::CellParams&)) {
    std::vector<int> out;
    for (std::size_t i = 0; i < cfg.num_cells(); ++i) {
        if (pred(cfg.cells[i])) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::pair<int, int> neighborhood(const CorridorConfig& cfg, int cell, int radius) {
    const int n = static_cast<int>(cfg.num_cells());
    return {std::max(0, cell - radius), std::min(n - 1, cell + radius)};
}

// Multiplicative jitter of the boundary demand and of the initial densities
// and on-ramp demands of cells lo..hi.
void jitter(CorridorConfig& cfg, Rng& rng, const ScenarioParams& p, int lo, int hi, bool ramps_too,
            ScenarioSpec* spec) {
    for (int i = lo; i <= hi; ++i) {
        const double m = nv_multiplier(rng, p);
        cfg.initial_rho[i] = std::min(cfg.initial_rho[i] * m, cfg.cells[i].rho_jam);
        record(spec, "/initial_rho_veh_per_mi/" + std::to_string(i), "scale", m);
    }
    if (ramps_too) {
        for (int i = lo; i <= hi; ++i) {
            auto& r = cfg.ramps[i];
            if (cfg.cells[i].has_on_ramp) {
                const double m = nv_multiplier(rng, p);
                for (std::size_t t = 0; t < r.on_ramp_demand.size(); ++t) {
                    r.on_ramp_demand[t] = std::min(r.on_ramp_demand[t] * m, r.on_ramp_max[t]);
                }
                record(spec, "/ramps/" + std::to_string(i) + "/on_ramp_demand_veh_per_h", "scale", m);
            }
            if (cfg.cells[i].has_off_ramp) {
                const double m = nv_multiplier(rng, p);
                for (double& v : r.off_ramp_split) v = std::min(v * m, 1.0);
                record(spec, "/ramps/" + std::to_string(i) + "/off_ramp_split", "scale", m);
            }
        }
    }
    const double m = nv_multiplier(rng, p);
    for (double& v : cfg.upstream_demand) v *= m;
    record(spec, "/upstream_demand_veh_per_h", "scale", m);
}

void begin(ScenarioSpec* spec, Kind kind, std::uint64_t seed, const CorridorConfig& base) {
    if (!spec) return;
    spec->kind = kind;
    spec->seed = seed;
    spec->severity = Severity::None;
    spec->location_cell = -1;
    spec->start_step = 0;
    spec->end_step = base.horizon_steps;
    spec->modifiers.clear();
}

}  // namespace

CorridorConfig sample_nv(const CorridorConfig& base, std::uint64_t seed, const ScenarioParams& p,
                         ScenarioSpec* spec) {
    begin(spec, Kind::NV, seed, base);
    CorridorConfig cfg = base;
    if (p.nv_sigma == 0.0) return cfg;
    Rng rng(seed);
    jitter(cfg, rng, p, 0, static_cast<int>(cfg.num_cells()) - 1, true, spec);
    return cfg;
}

CorridorConfig scale_ramp_caps(const CorridorConfig& base, int cell, int radius, double factor, ScenarioSpec* spec) {
    if (cell < 0 || static_cast<std::size_t>(cell) >= base.num_cells()) throw ConfigError("/location_cell", "no such cell");
    if (!(factor >= 0.0) || factor > 1.0) throw ConfigError("/factor", "must lie in [0, 1]");
    CorridorConfig cfg = base;
    if (factor == 1.0) return cfg;
    auto [lo, hi] = neighborhood(cfg, cell, radius);
    for (int i = lo; i <= hi; ++i) {
        auto& r = cfg.ramps[i];
        if (cfg.cells[i].has_on_ramp) {
            for (double& v : r.on_ramp_max) v *= factor;
            record(spec, "/ramps/" + std::to_string(i) + "/on_ramp_max_veh_per_h", "scale", factor);
        }
        if (cfg.cells[i].has_off_ramp) {
            for (double& v : r.off_ramp_max) v *= factor;
            record(spec, "/ramps/" + std::to_string(i) + "/off_ramp_max_veh_per_h", "scale", factor);
        }
    }
    return cfg;
}

CorridorConfig sample_cw(const CorridorConfig& base, std::uint64_t seed, const ScenarioParams& p,
                         ScenarioSpec* spec) {
    begin(spec, Kind::CW, seed, base);
    Rng rng(seed);
    auto sites = cells_where(base, [](const corridor::CellParams& c) { return c.has_on_ramp || c.has_off_ramp; });
    if (sites.empty()) {
        for (std::size_t i = 0; i < base.num_cells(); ++i) sites.push_back(static_cast<int>(i));
    }
    const int cell = sites[rng.below(sites.size())];
    const double factor = rng.uniform(p.cw_factor_min, p.cw_factor_max);
    if (spec) spec->location_cell = cell;
    CorridorConfig cfg = scale_ramp_caps(base, cell, p.neighbor_radius, factor, spec);
    auto [lo, hi] = neighborhood(cfg, cell, p.neighbor_radius);
    // Demand below the reduced caps.
    for (int i = lo; i <= hi; ++i) {
        auto& r = cfg.ramps[i];
        for (std::size_t t = 0; t < r.on_ramp_demand.size(); ++t) {
            r.on_ramp_demand[t] = std::min(r.on_ramp_demand[t], r.on_ramp_max[t]);
        }
    }
    jitter(cfg, rng, p, lo, hi, true, spec);
    return cfg;
}

double remaining_lane_fraction(int n_lanes, int blocked) {
    if (n_lanes < 1) throw DomainError("lane count must be positive");
    blocked = std::clamp(blocked, 0, n_lanes - 1);
    return static_cast<double>(n_lanes - blocked) / n_lanes;
}

CorridorConfig sample_acc_mainline(const CorridorConfig& base, std::uint64_t seed, const ScenarioParams& p,
                                   ScenarioSpec* spec) {
    begin(spec, Kind::ACC_MAINLINE, seed, base);
    Rng rng(seed);
    const double u = rng.uniform();
    int sev = 2;
    if (u < p.severity_prob[0]) {
        sev = 0;
    } else if (u < p.severity_prob[0] + p.severity_prob[1]) {
        sev = 1;
    }
    const int cell = static_cast<int>(rng.below(base.num_cells()));
    const int steps = steps_for(rng.uniform(p.acc_duration_min_h, p.acc_duration_max_h), base);
    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(base.horizon_steps - steps + 1)));
    const double frac = remaining_lane_fraction(base.cells[cell].n_lanes, p.severity_lanes[sev]);

    CorridorConfig cfg = base;
    cfg.incidents.push_back({cell, start, start + steps, frac});
    if (spec) {
        spec->severity = static_cast<Severity>(sev + 1);
        spec->location_cell = cell;
        spec->start_step = start;
        spec->end_step = start + steps;
        record(spec, "/cells/" + std::to_string(cell) + "/rho_crit_veh_per_mi", "scale", frac, start, start + steps);
        record(spec, "/cells/" + std::to_string(cell) + "/rho_jam_veh_per_mi", "scale", frac, start, start + steps);
    }
    auto [lo, hi] = neighborhood(cfg, cell, p.neighbor_radius);
    for (int i = lo; i <= hi; ++i) {
        const double f = rng.uniform(p.acc_nearby_cap_min, p.acc_nearby_cap_max);
        auto& r = cfg.ramps[i];
        if (cfg.cells[i].has_on_ramp) {
            for (int t = start; t < start + steps; ++t) {
                r.on_ramp_max[t] *= f;
                r.on_ramp_demand[t] = std::min(r.on_ramp_demand[t], r.on_ramp_max[t]);
            }
            record(spec, "/ramps/" + std::to_string(i) + "/on_ramp_max_veh_per_h", "scale", f, start, start + steps);
        }
        if (cfg.cells[i].has_off_ramp) {
            for (int t = start; t < start + steps; ++t) r.off_ramp_max[t] *= f;
            record(spec, "/ramps/" + std::to_string(i) + "/off_ramp_max_veh_per_h", "scale", f, start, start + steps);
        }
    }
    jitter(cfg, rng, p, lo, hi, false, spec);
    return cfg;
}

CorridorConfig sample_acc_ramp(const CorridorConfig& base, std::uint64_t seed, const ScenarioParams& p,
                               ScenarioSpec* spec) {
    begin(spec, Kind::ACC_RAMP, seed, base);
    Rng rng(seed);
    const auto sites = cells_where(base, [](const corridor::CellParams& c) { return c.has_on_ramp; });
    if (sites.empty()) throw ConfigError("/cells", "ramp accident needs at least one on-ramp");
    const int cell = sites[rng.below(sites.size())];
    const int steps = steps_for(rng.uniform(p.ramp_closure_min_h, p.ramp_closure_max_h), base);
    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(base.horizon_steps - steps + 1)));
    CorridorConfig cfg = base;
    for (int t = start; t < start + steps; ++t) cfg.ramps[cell].on_ramp_max[t] = 0.0;
    if (spec) {
        spec->location_cell = cell;
        spec->start_step = start;
        spec->end_step = start + steps;
        record(spec, "/ramps/" + std::to_string(cell) + "/on_ramp_max_veh_per_h", "set", 0.0, start, start + steps);
    }
    return cfg;
}

CorridorConfig sample_ff(const CorridorConfig& base, std::uint64_t seed, const ScenarioParams& p,
                         ScenarioSpec* spec) {
    begin(spec, Kind::FF, seed, base);
    CorridorConfig cfg = base;
    for (double& v : cfg.downstream_supply) v = 0.0;
    for (double& v : cfg.upstream_demand) v *= p.ff_upstream_multiplier;
    record(spec, "/downstream_supply_veh_per_h", "set", 0.0);
    record(spec, "/upstream_demand_veh_per_h", "scale", p.ff_upstream_multiplier);
    return cfg;
}

CorridorConfig sample(Kind kind, const CorridorConfig& base, std::uint64_t seed, const ScenarioParams& params,
                      ScenarioSpec* spec) {
    switch (kind) {
        case Kind::NV: return sample_nv(base, seed, params, spec);
        case Kind::CW: return sample_cw(base, seed, params, spec);
        case Kind::ACC_MAINLINE: return sample_acc_mainline(base, seed, params, spec);
        case Kind::ACC_RAMP: return sample_acc_ramp(base, seed, params, spec);
        case Kind::FF: return sample_ff(base, seed, params, spec);
    }
    throw ConfigError("/kind", "unknown scenario kind");
}

std::vector<Scenario> generate_ensemble(const CorridorConfig& base, const EnsembleSpec& spec) {
    spec.validate();
    std::vector<Scenario> out;
    out.reserve(spec.total());
    const std::pair<Kind, int> plan[] = {{Kind::NV, spec.nv},
                                         {Kind::CW, spec.cw},
                                         {Kind::ACC_MAINLINE, spec.acc_mainline},
                                         {Kind::ACC_RAMP, spec.acc_ramp},
                                         {Kind::FF, spec.ff}};
    std::uint64_t counter = 0;
    for (auto [kind, count] : plan) {
        for (int k = 0; k < count; ++k) {
            Scenario s;
            s.spec.index = static_cast<int>(counter);
            const std::uint64_t seed = derive_seed(spec.master_seed, counter);
            s.config = sample(kind, base, seed, spec.params, &s.spec);
            s.config.validate();
            out.push_back(std::move(s));
            ++counter;
        }
    }
    return out;
}

}  // namespace dwc::scenarios
