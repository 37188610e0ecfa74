#pragma once

#include "evshare/convex_program.hpp"
#include "evshare/scenario.hpp"

#include <string>
#include <vector>

namespace evshare {

// Positive net flows go into the storage. soc has horizon_slots + 1 entries
// (level at the start of every slot plus the final level).
struct StorageSchedule {
  std::vector<std::vector<double>> station_charge;     // [station][t], kW
  std::vector<std::vector<double>> station_discharge;  // [station][t], kW
  std::vector<double> grid_charge;                     // kW
  std::vector<double> grid_discharge;                  // kW
  std::vector<std::vector<double>> net_from_station;   // [station][t], kW
  std::vector<double> net_from_grid;                   // kW
  std::vector<double> soc;                             // kWh
};

// Fills the net flows and the energy trajectory from the four components.
StorageSchedule make_storage_schedule(const StorageSpec& spec, const TimeGrid& grid, std::vector<std::vector<double>> station_charge,
                                      std::vector<std::vector<double>> station_discharge, std::vector<double> grid_charge,
                                      std::vector<double> grid_discharge);

// True when the storage cannot move energy (zero capacity or zero power).
// Such storages contribute no variables; their flows are identically zero.
bool storage_is_degenerate(const StorageSpec& spec);
StorageSchedule idle_storage_schedule(const StorageSpec& spec, const TimeGrid& grid);

double degradation_cost(const StorageSchedule& sch, const StorageSpec& spec, const TimeGrid& grid);
std::vector<double> simulate_soc(const StorageSchedule& sch, const StorageSpec& spec, const TimeGrid& grid);
std::vector<std::string> check_storage_feasibility(const StorageSchedule& sch, const StorageSpec& spec, const TimeGrid& grid,
                                                   bool cyclic = true, double tol = 1e-6);

// -1 entries: no grid-exchange variables (individual storages), or the
// fixed initial level energy[0].
struct StorageLayout {
  std::vector<std::vector<int>> station_charge;     // [station][t]
  std::vector<std::vector<int>> station_discharge;  // [station][t]
  std::vector<int> grid_charge;                     // [t]
  std::vector<int> grid_discharge;                  // [t]
  std::vector<int> energy;                          // [t], T + 1 entries

  // Signed terms of p_b,i,t and p_b,g,t.
  std::vector<kernel::Term> station_net(size_t station, size_t t) const;
  std::vector<kernel::Term> grid_net(size_t t) const;
};

StorageLayout add_storage_model(kernel::ProgramBuilder& b, const StorageSpec& spec, const TimeGrid& grid, bool cyclic);
StorageSchedule decode_storage(const StorageLayout& lay, const StorageSpec& spec, const TimeGrid& grid, const kernel::Vector& x);

struct SesoInputs {
  std::vector<std::vector<double>> lambda;          // [station][t]
  std::vector<double> mu;                           // [t]
  std::vector<std::vector<double>> anchor_demand;   // [station][t]
  std::vector<std::vector<double>> anchor_grid;     // [station][t]
  std::vector<std::vector<double>> pv;              // [station][t]
  std::vector<double> anchor_grid_to_storage;       // [t]
};

struct SesoProgram {
  kernel::ConvexProgram program;
  StorageLayout layout;
};

// Local problem of one storage operator:
//   degradation - sum lambda p_b,i - sum mu p_b,g
//   + beta/2 sum (demand + grid + p_b,i - pv)^2 + beta/2 sum (p_g,b + p_b,g)^2
SesoProgram assemble_seso_subproblem(const StorageSpec& spec, const TimeGrid& grid, bool cyclic, const SesoInputs& in, double beta);

}  // namespace evshare
