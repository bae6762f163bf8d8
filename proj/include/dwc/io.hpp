#pragma once

// JSON configuration schemas, run manifests and CSV result tables.
//
// Numeric keys carry their unit as a suffix (length_mi, b_g_usd_per_mwh).
// Objects are strict: unknown keys and missing required keys raise
// ConfigError whose path is a JSON pointer, prefixed with the file name
// when the document came from disk ("corridor.json#/cells/3/rho_jam_veh_per_mi").

#include "dwc/case_study.hpp"
#include "dwc/conic.hpp"
#include "dwc/corridor.hpp"
#include "dwc/energy.hpp"
#include "dwc/grid.hpp"
#include "dwc/planner.hpp"
#include "dwc/scenarios.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dwc::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kSolverEnvVar = "DWCPLAN_SOLVER_OPTIONS";

// Syntax errors report line and column.
Json parse_json(const std::string& text, const std::string& source = "<string>");
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

corridor::CorridorConfig corridor_from_json(const Json& doc);
Json to_json(const corridor::CorridorConfig& cfg);

grid::GridSpec grid_from_json(const Json& doc);
Json to_json(const grid::GridSpec& spec);

energy::VehicleParams vehicle_from_json(const Json& doc);
Json to_json(const energy::VehicleParams& vp);
energy::FleetScaling fleet_from_json(const Json& doc);
Json to_json(const energy::FleetScaling& fs);

scenarios::EnsembleSpec ensemble_from_json(const Json& doc);
Json to_json(const scenarios::EnsembleSpec& spec);

// Overrides fields of `base` present in `doc`.
conic::SolverOptions solver_from_json(const Json& doc, const conic::SolverOptions& base = {});
Json to_json(const conic::SolverOptions& opts);
// Defaults overridden by the JSON object in $DWCPLAN_SOLVER_OPTIONS, if set.
conic::SolverOptions solver_options_from_env();

// {"availability": [...]} or {"clear_sky_peak": 0.85}; every factor in [0, 1]
// and the series covers `steps` intervals of `dt_h`.
std::vector<double> solar_from_json(const Json& doc, std::size_t steps, double dt_h);
Json solar_to_json(const std::vector<double>& availability);

energy::DemandProfile demand_from_json(const Json& doc);
Json to_json(const energy::DemandProfile& profile);

planner::PlanningDesign design_from_json(const Json& doc);
Json to_json(const planner::PlanningDesign& design);

struct RunConfig {
    std::filesystem::path source;  // run file, empty for in-memory configs
    std::filesystem::path corridor_path;
    std::filesystem::path grid_path;
    scenarios::EnsembleSpec ensemble;
    conic::SolverOptions solver;
    std::filesystem::path output_dir = "out";
    bool strict_validation = false;
    int aggregation = 1;
    double power_factor = 0.95;
    // Line caps sized on the baseline demand; unset keeps the grid file's.
    std::optional<double> ampacity_utilization;
    double loss_penalty = 0.1;
    double service_threshold = 1.0;
    double scale_increment = 0.05;
    int max_scale_iterations = 40;
    std::vector<int> k_values;
    std::string family;
    double siting_threshold = 0.5;
    double shortfall_tolerance_mw = 1e-3;
    double gap_tolerance = 1e-3;
    int node_limit = 64;
    // compare: "sizing" designs both profiles, "operational" only prices them.
    std::string compare_mode = "sizing";
    double compare_peak_mw = -1.0;  // negative keeps the simulated peak
};

// Everything a subcommand needs, fully validated.
struct LoadedRun {
    RunConfig run;
    case_study::CaseStudy cs;
    bool has_corridor = false;
    // Explicit demand replaces the corridor pipeline when present.
    std::optional<energy::DemandProfile> demand;
    energy::DemandProfile baseline;
    // Resolved object graph echoed into the manifest.
    Json resolved;
};

// Relative paths resolve against the run file's directory.
LoadedRun load_configs(const std::filesystem::path& run_path);
LoadedRun load_configs(const Json& run_doc, const std::filesystem::path& base_dir);

// Manifest stored next to every set of results; `command` is argv joined.
Json make_manifest(const LoadedRun& run, const std::string& command, const Json& outputs);

// Columnar text with a header row; numbers use %.10g so repeated runs are
// byte-identical.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    Table& row();
    Table& add(double v);
    Table& add(int v);
    Table& add(std::size_t v) { return add(static_cast<int>(v)); }
    Table& add(const std::string& v);
    Table& add(const char* v) { return add(std::string(v)); }

    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string format_number(double v);

// Stable 64-bit FNV-1a digest, hex encoded.
std::string digest(const std::string& bytes);

}  // namespace dwc::io
