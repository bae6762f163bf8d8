#pragma once

// Radial microgrid description and its per-unit network form.

#include <limits>
#include <string>
#include <vector>

namespace dwc::grid {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class BusKind { Slack, Junction, Roadway };

std::string to_string(BusKind kind);
BusKind bus_kind_from_string(const std::string& name);

struct BusSpec {
    int id = 0;
    BusKind kind = BusKind::Roadway;
    std::vector<int> mapped_cells;
    double v_min_pu = 0.95;
    double v_max_pu = 1.05;
    bool has_solar = false;
    int es_units = 0;
};

struct LineSpec {
    int from = 0;
    int to = 0;
    double length_mi = 0.0;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    // Squared-current cap in pu; +inf means unconstrained.
    double ampacity_pu = kInf;
};

struct CostSpec {
    double c_solar = 1.17e6;     // $/MW
    double c_batt = 1.2e6;       // $/ES unit, installed
    double c_coupling = 1.8e6;   // $/MW
    // Operational rates are per hour; a step of dt hours is charged dt times
    // the rate, which is the per-step sum itself at hourly steps.
    double a_g = 0.002;            // $/MW^2h
    double b_g = 40.0;             // $/MWh
    double c_g = 0.0;              // $/h
    double cycling_penalty = 1.0;  // $/MWh of charge plus discharge
    double planning_years = 20.0;
    double days_per_year = 365.0;

    // Number of representative days over the planning horizon.
    double planning_periods() const { return planning_years * days_per_year; }
    void validate() const;
};

struct ESUnitSpec {
    double e_unit_mwh = 3.9;
    double p_ch_max = 1.9;   // MW per unit
    double p_dis_max = 1.9;  // MW per unit
    double q_lim = 0.95;     // MVAr per unit
    double eta_ch = 0.95;
    double eta_dis = 0.95;

    void validate() const;
};

struct LineImpedance {
    double r_ohm_per_mi = 0.1679;
    double x_ohm_per_mi = 0.432;
};

LineSpec make_line(int from, int to, double length_mi, const LineImpedance& z = {});

struct GridSpec {
    std::vector<BusSpec> buses;
    std::vector<LineSpec> lines;
    double base_mva = 100.0;
    double base_kv = 69.0;
    ESUnitSpec es;
    CostSpec costs;
    double solar_q_fraction = 0.3;   // |Q_solar| <= fraction * installed MW
    double grid_q_ratio = 1.0;       // |Q_g| <= ratio * P_g cap
    double grid_p_max_mw = kInf;     // coupling cap for operational runs
    double solar_max_mw = 500.0;     // sizing bound per solar bus
    int es_max_units_per_bus = 200;  // sizing bound
    // Buses forbidden from hosting ES (none by default).
    std::vector<int> es_excluded;

    std::size_t num_buses() const { return buses.size(); }
    int slack_bus() const;
    std::vector<int> solar_buses() const;
    void validate() const;
};

// Per-unit radial network. Lines are re-indexed so that line k feeds bus
// line_to[k] from its parent line_from[k].
struct Network {
    int num_buses = 0;
    int slack = 0;
    double base_mva = 0.0;
    double base_kv = 0.0;
    double z_base_ohm = 0.0;
    std::vector<int> parent;       // -1 at slack
    std::vector<int> parent_line;  // line feeding each bus, -1 at slack
    std::vector<std::vector<int>> child_lines;
    std::vector<int> order;        // breadth-first from slack
    std::vector<int> line_from;
    std::vector<int> line_to;
    std::vector<int> line_spec_index;  // position in GridSpec::lines
    std::vector<double> r_pu;
    std::vector<double> x_pu;
    std::vector<double> l_max_pu;
    std::vector<bool> degenerate;      // zero-impedance line
    std::vector<double> v_min_sq;
    std::vector<double> v_max_sq;

    std::size_t num_lines() const { return line_from.size(); }
    // Buses in the subtree rooted at `bus`, inclusive.
    std::vector<int> subtree(int bus) const;
};

double ohm_to_pu(double ohm, double base_kv, double base_mva);
double pu_to_ohm(double pu, double base_kv, double base_mva);

// Throws TopologyError unless the lines form a tree spanning every bus.
Network build_network(const GridSpec& spec);

// Sets every line's squared-current cap so that the peak apparent power of
// its downstream load flows at `utilization` of the current cap at v_min.
// Loads are [bus][t]; lines without downstream load stay unconstrained.
void size_ampacity(GridSpec& spec, const std::vector<std::vector<double>>& p_mw,
                   const std::vector<std::vector<double>>& q_mvar, double utilization = 0.6);

}  // namespace dwc::grid
