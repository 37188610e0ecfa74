#pragma once

#include "evshare/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evshare {

// Standard 33-bus radial feeder with nominal loads scaled by a daily shape.
NetworkSpec ieee33_network(const TimeGrid& grid = {});

// Hourly tariff: buy price with morning and evening peaks, flat sell price.
Tariff default_tariff(const TimeGrid& grid = {});

// One shared storage with four stations (residential, workplace and two
// leisure sites) on adjacent buses. seed only changes the synthesized fleets.
Scenario make_ieee33_scenario(std::uint64_t seed = 1);

// Recipe for replicating the template's storage cluster over several buses.
struct ScaleTemplate {
  Scenario base;  // first storage and its stations form the cluster
  std::vector<int> cluster_buses;
  std::vector<FleetPattern> patterns;  // one per station of the cluster
  int evs_per_station = 44;
  std::uint64_t seed = 1;
};

ScaleTemplate make_scale_template();
ScaleTemplate load_scale_template(const std::string& path);
void save_scale_template(const ScaleTemplate& t, const std::string& path);

// Throws ScenarioError when groups exceeds the available cluster buses.
Scenario scale_scenario(const ScaleTemplate& t, int groups);

}  // namespace evshare
