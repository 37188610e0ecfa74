#pragma once

#include "evshare/conic_solver.hpp"
#include "evshare/dist_network.hpp"
#include "evshare/ev_station.hpp"
#include "evshare/scenario.hpp"
#include "evshare/shared_storage.hpp"

#include <vector>

namespace evshare {

struct Allocation {
  std::vector<std::vector<EvSchedule>> ev;  // [station][ev]
  std::vector<StationState> stations;
  std::vector<StorageSchedule> storages;
  FlowState flow;
};

// Multipliers of the station balance and storage-grid coupling rows in $/kWh,
// signed as in the Lagrangian (which subtracts price * residual * dt). A
// station selling p kW for one slot therefore books price * p * dt, so the
// economic selling price is -price.
struct PriceSystem {
  std::vector<std::vector<double>> station_price;  // [station][t]
  std::vector<std::vector<double>> storage_price;  // [storage][t]
};

struct ModelOptions {
  // Pins each station's aggregate demand to its charge-as-soon-as-possible
  // profile (inelastic charging).
  bool fix_casap_demand = false;
};

// All agents in one program, coupled by station balance and storage-grid
// exchange rows.
struct SystemModel {
  kernel::ConvexProgram program;
  std::vector<StationLayout> stations;
  std::vector<StorageLayout> storages;
  NetworkLayout network;
  std::vector<std::vector<int>> balance_rows;   // [station][t]
  std::vector<std::vector<int>> exchange_rows;  // [storage][t], -1 without grid access
};

SystemModel build_system_model(const Scenario& s, const ModelOptions& opt = {});
Allocation decode_allocation(const SystemModel& m, const Scenario& s, const kernel::Vector& x);
PriceSystem decode_prices(const SystemModel& m, const Scenario& s, const kernel::Vector& eq_duals);

// p_b of station i in an allocation (zero without a storage).
std::vector<double> station_storage_flow(const Scenario& s, const Allocation& a, int station);

struct CouplingResidual {
  double station_balance = 0.0;   // max |p_d + p_g + p_b - pv|, kW
  double storage_exchange = 0.0;  // max |p_g,b + p_b,g|, kW
};
CouplingResidual coupling_residual(const Scenario& s, const Allocation& a);

// Every component check plus the coupling rows.
std::vector<std::string> check_allocation(const Scenario& s, const Allocation& a, double tol = 1e-6, double coupling_tol = 1e-6);

PriceSystem zero_prices(const Scenario& s);

}  // namespace evshare
