#pragma once

#include "evshare/ieee33.hpp"
#include "evshare/scenario.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace evshare::testing {

inline std::string data_path(const std::string& name) { return std::string(EVSHARE_DATA_DIR) + "/" + name; }

inline const Scenario& bundled() {
  static const Scenario s = load_scenario(data_path("ieee33_4cs_1ses.json"));
  return s;
}

// Bundled topology with no EVs, no PV, no base load and no export revenue.
// With a positive sell price a zero station price could not support the
// zero allocation (the grid would buy station energy for free and export it).
inline Scenario zero_scenario() {
  Scenario s = bundled();
  s.name = "zero";
  std::fill(s.tariff.sell_price.begin(), s.tariff.sell_price.end(), 0.0);
  for (auto& st : s.stations) {
    st.fleet.clear();
    std::fill(st.pv_profile.begin(), st.pv_profile.end(), 0.0);
  }
  for (auto& b : s.network.buses) {
    std::fill(b.load_p.begin(), b.load_p.end(), 0.0);
    std::fill(b.load_q.begin(), b.load_q.end(), 0.0);
  }
  return s;
}

// The worked example EV: 10 kWh to 30 kWh at 6.6 kW, charging efficiency 0.95.
inline EvTask example_ev() {
  EvTask t;
  t.id = "ev";
  t.arrival_slot = 0;
  t.departure_slot = 8;
  t.initial_energy = 10.0;
  t.required_energy = 30.0;
  t.power_max = 6.6;
  t.eff_charge = 0.95;
  t.depreciation_coeff = 0.01;
  return t;
}

inline TimeGrid grid_of(int slots) { return TimeGrid{slots, 1.0}; }

inline bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace evshare::testing
