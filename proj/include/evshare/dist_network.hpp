#pragma once

#include "evshare/convex_program.hpp"
#include "evshare/scenario.hpp"

#include <string>
#include <vector>

namespace evshare {

// Line quantities are indexed like NetworkSpec::lines, bus quantities like
// NetworkSpec::buses. bus_p / bus_q are net injections in p.u. (generation
// positive); at the slack bus they equal the power leaving into the feeder.
struct FlowState {
  std::vector<std::vector<double>> line_p, line_q, current_sq;  // [line][t]
  std::vector<std::vector<double>> volt_sq;                     // [bus][t]
  std::vector<std::vector<double>> bus_p, bus_q;                // [bus][t]
  std::vector<double> grid_buy, grid_sell;                      // kW
  std::vector<std::vector<double>> station_exchange;            // [station][t], kW sent by the station
  std::vector<std::vector<double>> storage_exchange;            // [storage][t], kW the grid receives from the storage
};

struct NetworkLayout {
  std::vector<std::vector<int>> line_p, line_q, current_sq;  // [line][t]
  std::vector<std::vector<int>> cone_head, cone_diff;        // (l+v)/2 and (l-v)/2
  std::vector<std::vector<int>> volt_sq;                     // [bus][t], -1 at the slack
  std::vector<int> grid_buy, grid_sell;                      // [t]
  std::vector<std::vector<int>> station_exchange;            // [station][t]
  std::vector<std::vector<int>> storage_exchange;            // [storage][t], -1 without grid access
};

// Adds the relaxed branch-flow model, the exchange variables of every
// station and storage, and the grid energy cost.
NetworkLayout add_network_model(kernel::ProgramBuilder& b, const Scenario& s);
FlowState decode_flow(const NetworkLayout& lay, const Scenario& s, const kernel::Vector& x);

struct RelaxationGap {
  double max_gap = 0.0;
  std::vector<std::vector<double>> gaps;  // [line][t], l - (P^2 + Q^2) / v_from
};
RelaxationGap relaxation_gap(const FlowState& fs, const NetworkSpec& net);

double dso_energy_cost(const std::vector<double>& grid_buy, const std::vector<double>& grid_sell, const Tariff& tariff, const TimeGrid& grid);

std::vector<std::string> check_network_feasibility(const FlowState& fs, const Scenario& s, double tol = 1e-6);

struct DsoInputs {
  std::vector<std::vector<double>> lambda;           // [station][t]
  std::vector<std::vector<double>> mu;               // [storage][t]
  std::vector<std::vector<double>> anchor_demand;    // [station][t]
  std::vector<std::vector<double>> anchor_storage;   // [station][t]
  std::vector<std::vector<double>> anchor_storage_grid;  // [storage][t], p_b,g
};

struct DsoProgram {
  kernel::ConvexProgram program;
  NetworkLayout layout;
};

// grid cost - sum lambda p_g - sum mu p_g,b
//   + beta/2 sum (demand + storage + p_g - pv)^2 + beta/2 sum (p_g,b + p_b,g)^2
DsoProgram assemble_dso_subproblem(const Scenario& s, const DsoInputs& in, double beta);

}  // namespace evshare
