#pragma once

#include "evshare/convex_program.hpp"
#include "evshare/scenario.hpp"

#include <string>
#include <vector>

namespace evshare {

// energy has horizon_slots + 1 entries: energy[t] is the level at the start
// of slot t, so energy[departure_slot] is the level handed back to the driver.
struct EvSchedule {
  std::vector<double> charge_power;     // kW
  std::vector<double> discharge_power;  // kW
  std::vector<double> net_power;        // kW
  std::vector<double> energy;           // kWh
};

struct StationState {
  std::vector<double> demand;      // p_d, kW
  std::vector<double> to_grid;     // p_g, kW
  std::vector<double> to_storage;  // p_b, kW
};

double min_charge_time(const EvTask& task);

// Full-power charging from arrival, then one partial slot. Throws
// std::domain_error if the partial slot would fall at or after departure.
std::vector<double> casap_profile(const EvTask& task, const TimeGrid& grid);
bool casap_fits(const EvTask& task, const TimeGrid& grid);

// Builds net power and the energy trajectory from charge/discharge powers.
EvSchedule make_schedule(const EvTask& task, const TimeGrid& grid, std::vector<double> charge, std::vector<double> discharge);

std::vector<std::string> check_ev_feasibility(const EvSchedule& sch, const EvTask& task, const TimeGrid& grid, double tol = 1e-6);

double ev_cost(const EvSchedule& sch, const EvTask& task, const TimeGrid& grid);
double station_cost(const std::vector<EvSchedule>& schedules, const std::vector<EvTask>& tasks, const TimeGrid& grid);

std::vector<double> aggregate_demand(const std::vector<EvSchedule>& schedules, int horizon_slots);

// Variable indices of one station inside a program; -1 marks a slot outside
// the EV's charging window (the quantity is identically zero there).
struct StationLayout {
  std::vector<std::vector<int>> charge;     // [ev][t]
  std::vector<std::vector<int>> discharge;  // [ev][t]
  std::vector<std::vector<int>> energy;     // [ev][t], level at the start of t
  std::vector<int> demand;                  // [t]
};

// Adds the EV models, the aggregation rows and the station's own cost.
StationLayout add_station_model(kernel::ProgramBuilder& b, const StationSpec& st, const TimeGrid& grid);

std::vector<EvSchedule> decode_fleet(const StationLayout& lay, const StationSpec& st, const TimeGrid& grid, const kernel::Vector& x);
std::vector<double> decode_series(const std::vector<int>& idx, const kernel::Vector& x);

struct CsoProgram {
  kernel::ConvexProgram program;
  StationLayout layout;
};

// Local problem of one station for given prices and anchors:
//   station cost - sum_t lambda_t p_d,t + beta/2 sum_t (p_d,t + grid_t + storage_t - pv_t)^2
CsoProgram assemble_cso_subproblem(const StationSpec& st, const TimeGrid& grid, const std::vector<double>& lambda,
                                   const std::vector<double>& anchor_grid, const std::vector<double>& anchor_storage, double beta);

}  // namespace evshare
