#pragma once

#include "json.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace evshare {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct TimeGrid {
  int horizon_slots = 24;
  double slot_hours = 1.0;
  bool operator==(const TimeGrid&) const = default;
};

// Charging window is [arrival_slot, departure_slot); energy at the start of
// departure_slot must equal required_energy.
struct EvTask {
  std::string id;
  int arrival_slot = 0;
  int departure_slot = 1;
  double initial_energy = 0.0;   // kWh
  double required_energy = 0.0;  // kWh
  double energy_min = 0.0;
  double energy_max = 60.0;
  double power_max = 6.6;  // kW
  double eff_charge = 0.95;
  double eff_discharge = 0.95;
  double inconvenience_coeff = 1e-4;  // $/kWh^2
  double depreciation_coeff = 0.01;   // $/kWh
  bool operator==(const EvTask&) const = default;
};

struct StationSpec {
  std::string id;
  int bus_id = 0;
  std::vector<double> pv_profile;  // kW
  std::vector<EvTask> fleet;
  bool operator==(const StationSpec&) const = default;
};

struct StorageSpec {
  std::string id;
  int bus_id = 0;
  std::vector<std::string> connected_stations;
  double capacity = 0.0;  // kWh
  double energy_min = 0.0;
  double energy_max = 0.0;
  double power_charge_max = 0.0;  // kW
  double power_discharge_max = 0.0;
  double eff_charge = 0.95;
  double eff_discharge = 0.95;
  double degradation_coeff = 0.01;  // $/kWh
  double initial_energy = 0.0;
  // Individual (per-station) storages trade with their station only.
  bool grid_exchange = true;
  bool operator==(const StorageSpec&) const = default;
};

// Bus bounds and loads are kept in physical units (kW, kvar); squared
// voltages in p.u.^2. Conversion to p.u. happens when the flow model is built.
struct BusSpec {
  int id = 0;
  double p_min = -kUnbounded, p_max = kUnbounded;  // net injection, kW
  double q_min = -kUnbounded, q_max = kUnbounded;  // kvar
  double v_min = 0.81, v_max = 1.21;               // p.u.^2
  std::vector<double> load_p;                      // kW
  std::vector<double> load_q;                      // kvar
  bool operator==(const BusSpec&) const = default;
};

struct LineSpec {
  int from = 0;
  int to = 0;
  double r = 0.0;  // p.u.
  double x = 0.0;  // p.u.
  double l_max = kUnbounded;  // squared current, p.u.
  bool operator==(const LineSpec&) const = default;
};

struct NetworkSpec {
  std::vector<BusSpec> buses;
  std::vector<LineSpec> lines;
  int slack_bus_id = 1;
  double s_base = 1000.0;  // kVA
  double v_base = 12.66;   // kV

  int bus_index(int bus_id) const;  // -1 if absent
  bool operator==(const NetworkSpec&) const = default;
};

struct Tariff {
  std::vector<double> buy_price;   // $/kWh
  std::vector<double> sell_price;  // $/kWh
  bool operator==(const Tariff&) const = default;
};

struct Scenario {
  std::string name;
  TimeGrid time;
  NetworkSpec network;
  std::vector<StationSpec> stations;
  std::vector<StorageSpec> storages;
  Tariff tariff;
  // End-of-horizon storage energy equals the initial energy.
  bool storage_cyclic = true;

  int station_index(const std::string& id) const;
  // Index of the storage serving station i, or -1.
  int storage_of_station(int station) const;
  std::vector<int> stations_of_storage(int storage) const;
  int total_evs() const;
  bool operator==(const Scenario&) const = default;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& s);

// Parses and validates; throws ScenarioError naming the field or entity.
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

// One entry per violated invariant; empty means well formed.
std::vector<std::string> validate_scenario(const Scenario& s);

enum class FleetPattern { residential, workplace, leisure };
FleetPattern parse_fleet_pattern(const std::string& name);
std::string to_string(FleetPattern p);

// Pure function of its arguments. Every task is reachable and leaves room
// for the charge-as-soon-as-possible profile before departure.
std::vector<EvTask> synthesize_fleet(int count, FleetPattern pattern, std::uint64_t seed, const TimeGrid& grid = {});

}  // namespace evshare
