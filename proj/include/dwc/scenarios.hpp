#pragma once

// Traffic disruption ensemble as parametric perturbations of a base corridor.

#include "dwc/corridor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dwc::scenarios {

enum class Kind { NV, CW, ACC_MAINLINE, ACC_RAMP, FF };
enum class Severity { None, Mild, Moderate, Severe };

std::string to_string(Kind kind);
std::string to_string(Severity severity);
Kind kind_from_string(const std::string& name);

struct Modifier {
    std::string path;       // JSON pointer into the corridor config
    std::string op;         // "scale" or "set"
    double value = 0.0;
    int start_step = -1;    // -1: whole horizon
    int end_step = -1;
};

struct ScenarioSpec {
    int index = 0;
    Kind kind = Kind::NV;
    std::uint64_t seed = 0;
    Severity severity = Severity::None;
    int location_cell = -1;
    int start_step = 0;
    int end_step = 0;
    std::vector<Modifier> modifiers;

    std::string name() const;
};

struct ScenarioParams {
    double nv_sigma = 0.1;
    double nv_truncation_sigmas = 3.0;
    double cw_factor_min = 0.3;
    double cw_factor_max = 0.8;
    int neighbor_radius = 1;
    double acc_duration_min_h = 1.0;
    double acc_duration_max_h = 4.0;
    double severity_prob[3] = {0.3, 0.3, 0.4};  // mild, moderate, severe
    int severity_lanes[3] = {1, 2, 3};
    double acc_nearby_cap_min = 0.5;
    double acc_nearby_cap_max = 1.0;
    double ramp_closure_min_h = 1.0;
    double ramp_closure_max_h = 3.0;
    double ff_upstream_multiplier = 2.0;

    void validate() const;
};

struct EnsembleSpec {
    int nv = 30;
    int cw = 20;
    int acc_mainline = 30;
    int acc_ramp = 5;
    int ff = 15;
    std::uint64_t master_seed = 2024;
    ScenarioParams params;

    int total() const { return nv + cw + acc_mainline + acc_ramp + ff; }
    void validate() const;
};

struct Scenario {
    ScenarioSpec spec;
    corridor::CorridorConfig config;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
// Seed of the scenario at position `counter` of an ensemble.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t counter);

// mt19937_64 with hand-rolled uniform/normal transforms so draws do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
    double uniform();  // [0, 1), 53-bit
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t below(std::uint64_t n);  // [0, n)
    double normal();   // Box-Muller

private:
    std::mt19937_64 engine_;
};

// Each function returns the perturbed config and fills `spec` (kind, seed,
// window, modifiers).
corridor::CorridorConfig sample_nv(const corridor::CorridorConfig& base, std::uint64_t seed,
                                   const ScenarioParams& params, ScenarioSpec* spec = nullptr);
corridor::CorridorConfig sample_cw(const corridor::CorridorConfig& base, std::uint64_t seed,
                                   const ScenarioParams& params, ScenarioSpec* spec = nullptr);
corridor::CorridorConfig sample_acc_mainline(const corridor::CorridorConfig& base, std::uint64_t seed,
                                             const ScenarioParams& params, ScenarioSpec* spec = nullptr);
corridor::CorridorConfig sample_acc_ramp(const corridor::CorridorConfig& base, std::uint64_t seed,
                                         const ScenarioParams& params, ScenarioSpec* spec = nullptr);
corridor::CorridorConfig sample_ff(const corridor::CorridorConfig& base, std::uint64_t seed,
                                   const ScenarioParams& params, ScenarioSpec* spec = nullptr);

// Deterministic reduction of ramp caps at cells [cell - radius, cell + radius].
corridor::CorridorConfig scale_ramp_caps(const corridor::CorridorConfig& base, int cell, int radius, double factor,
                                         ScenarioSpec* spec = nullptr);
// Lane-proportional incident: remaining fraction (lanes - blocked) / lanes.
double remaining_lane_fraction(int n_lanes, int blocked);

corridor::CorridorConfig sample(Kind kind, const corridor::CorridorConfig& base, std::uint64_t seed,
                                const ScenarioParams& params, ScenarioSpec* spec = nullptr);

// Order: NV, CW, ACC_MAINLINE, ACC_RAMP, FF; the scenario counter runs over
// the whole list.
std::vector<Scenario> generate_ensemble(const corridor::CorridorConfig& base, const EnsembleSpec& spec);

}  // namespace dwc::scenarios
