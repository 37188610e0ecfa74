#include "evshare/ieee33.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

namespace evshare {

using nlohmann::json;

namespace {

struct Branch {
  int from, to;
  double r_ohm, x_ohm;
};

// Standard 33-bus test feeder, impedances in ohm.
constexpr std::array<Branch, 32> kBranches{{
    {1, 2, 0.0922, 0.0470},  {2, 3, 0.4930, 0.2511},   {3, 4, 0.3660, 0.1864},   {4, 5, 0.3811, 0.1941},
    {5, 6, 0.8190, 0.7070},  {6, 7, 0.1872, 0.6188},   {7, 8, 0.7114, 0.2351},   {8, 9, 1.0300, 0.7400},
    {9, 10, 1.0440, 0.7400}, {10, 11, 0.1966, 0.0650}, {11, 12, 0.3744, 0.1238}, {12, 13, 1.4680, 1.1550},
    {13, 14, 0.5416, 0.7129}, {14, 15, 0.5910, 0.5260}, {15, 16, 0.7463, 0.5450}, {16, 17, 1.2890, 1.7210},
    {17, 18, 0.7320, 0.5740}, {2, 19, 0.1640, 0.1565},  {19, 20, 1.5042, 1.3554}, {20, 21, 0.4095, 0.4784},
    {21, 22, 0.7089, 0.9373}, {3, 23, 0.4512, 0.3083},  {23, 24, 0.8980, 0.7091}, {24, 25, 0.8960, 0.7011},
    {6, 26, 0.2030, 0.1034},  {26, 27, 0.2842, 0.1447}, {27, 28, 1.0590, 0.9337}, {28, 29, 0.8042, 0.7006},
    {29, 30, 0.5075, 0.2585}, {30, 31, 0.9744, 0.9630}, {31, 32, 0.3105, 0.3619}, {32, 33, 0.3410, 0.5302},
}};

// Nominal (kW, kvar) at buses 2..33.
constexpr std::array<std::array<double, 2>, 32> kLoads{{
    {100, 60}, {90, 40},  {120, 80}, {60, 30},  {60, 20},   {200, 100}, {200, 100}, {60, 20},
    {60, 20},  {45, 30},  {60, 35},  {60, 35},  {120, 80},  {60, 10},   {60, 20},   {60, 20},
    {90, 40},  {90, 40},  {90, 40},  {90, 40},  {90, 40},   {90, 50},   {420, 200}, {420, 200},
    {60, 25},  {60, 25},  {60, 20},  {120, 70}, {200, 600}, {150, 70},  {210, 100}, {60, 40},
}};

constexpr std::array<double, 24> kLoadShape{0.42, 0.39, 0.37, 0.36, 0.37, 0.40, 0.45, 0.50, 0.52, 0.52, 0.51, 0.50,
                                            0.49, 0.48, 0.48, 0.49, 0.52, 0.55, 0.55, 0.54, 0.52, 0.49, 0.46, 0.44};

// $/kWh, shaped after a day-ahead market day.
constexpr std::array<double, 24> kBuyPrice{0.022, 0.020, 0.019, 0.018, 0.019, 0.022, 0.030, 0.038, 0.040, 0.038, 0.036, 0.035,
                                           0.034, 0.034, 0.036, 0.040, 0.052, 0.068, 0.078, 0.080, 0.076, 0.070, 0.062, 0.050};

constexpr double kSellPrice = 0.01;
constexpr double kLineLimit = 25.0;  // squared current, p.u.
constexpr int kStorageBus = 12;

// Samples a 24 h profile at the start of every slot.
double hourly(const std::array<double, 24>& shape, const TimeGrid& grid, int t) {
  const double hour = std::fmod(t * grid.slot_hours, 24.0);
  return shape[static_cast<size_t>(std::clamp(static_cast<int>(hour), 0, 23))];
}

std::vector<double> pv_profile(double peak_kw, const TimeGrid& grid) {
  std::vector<double> pv(static_cast<size_t>(grid.horizon_slots), 0.0);
  for (int t = 0; t < grid.horizon_slots; ++t) {
    const double hour = std::fmod((t + 0.5) * grid.slot_hours, 24.0);
    const double phase = (hour - 6.0) / 13.0;
    if (phase <= 0.0 || phase >= 1.0) continue;
    pv[static_cast<size_t>(t)] = std::round(peak_kw * std::pow(std::sin(std::numbers::pi * phase), 1.5) * 100.0) / 100.0;
  }
  return pv;
}

struct StationRecipe {
  const char* id;
  FleetPattern pattern;
  int evs;
  double pv_peak;
  int bus;
};

constexpr std::array<StationRecipe, 4> kCluster{{
    {"cs1", FleetPattern::residential, 20, 60.0, 11},
    {"cs2", FleetPattern::workplace, 16, 90.0, 12},
    {"cs3", FleetPattern::leisure, 20, 50.0, 13},
    {"cs4", FleetPattern::leisure, 18, 70.0, 14},
}};

StorageSpec shared_storage(const std::string& id, int bus, std::vector<std::string> stations) {
  StorageSpec b;
  b.id = id;
  b.bus_id = bus;
  b.connected_stations = std::move(stations);
  b.capacity = 650.0;
  b.energy_min = 0.1 * b.capacity;
  b.energy_max = 0.9 * b.capacity;
  b.power_charge_max = 0.3 * b.capacity;
  b.power_discharge_max = 0.3 * b.capacity;
  b.eff_charge = 0.95;
  b.eff_discharge = 0.95;
  b.degradation_coeff = 0.01;
  b.initial_energy = 0.5 * b.capacity;
  b.grid_exchange = true;
  return b;
}

}  // namespace

NetworkSpec ieee33_network(const TimeGrid& grid) {
  NetworkSpec n;
  n.s_base = 1000.0;
  n.v_base = 12.66;
  n.slack_bus_id = 1;
  const double z_base = n.v_base * n.v_base / (n.s_base / 1000.0);
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  for (int id = 1; id <= 33; ++id) {
    BusSpec b;
    b.id = id;
    b.v_min = 0.94 * 0.94;
    b.v_max = 1.06 * 1.06;
    b.load_p.assign(T, 0.0);
    b.load_q.assign(T, 0.0);
    if (id > 1) {
      const auto& nominal = kLoads[static_cast<size_t>(id - 2)];
      for (size_t t = 0; t < T; ++t) {
        const double f = hourly(kLoadShape, grid, static_cast<int>(t));
        b.load_p[t] = std::round(nominal[0] * f * 1000.0) / 1000.0;
        b.load_q[t] = std::round(nominal[1] * f * 1000.0) / 1000.0;
      }
    }
    n.buses.push_back(std::move(b));
  }
  for (const auto& br : kBranches) n.lines.push_back({br.from, br.to, br.r_ohm / z_base, br.x_ohm / z_base, kLineLimit});
  return n;
}

Tariff default_tariff(const TimeGrid& grid) {
  Tariff t;
  for (int k = 0; k < grid.horizon_slots; ++k) {
    t.buy_price.push_back(hourly(kBuyPrice, grid, k));
    t.sell_price.push_back(kSellPrice);
  }
  return t;
}

Scenario make_ieee33_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = seed == 1 ? "ieee33_4cs_1ses" : "ieee33_4cs_1ses_seed" + std::to_string(seed);
  s.network = ieee33_network(s.time);
  s.tariff = default_tariff(s.time);
  std::vector<std::string> ids;
  for (size_t j = 0; j < kCluster.size(); ++j) {
    const auto& r = kCluster[j];
    StationSpec st;
    st.id = r.id;
    st.bus_id = r.bus;
    st.pv_profile = pv_profile(r.pv_peak, s.time);
    st.fleet = synthesize_fleet(r.evs, r.pattern, seed * 16 + j, s.time);
    ids.push_back(st.id);
    s.stations.push_back(std::move(st));
  }
  s.storages.push_back(shared_storage("ses1", kStorageBus, ids));
  return s;
}

ScaleTemplate make_scale_template() {
  ScaleTemplate t;
  t.base = make_ieee33_scenario(1);
  t.base.name = "ieee33_scale_template";
  // Buses close to the substation keep voltages inside limits with many clusters.
  t.cluster_buses = {2, 19, 3, 23, 4, 26};
  for (const auto& r : kCluster) t.patterns.push_back(r.pattern);
  t.evs_per_station = 44;
  t.seed = 1;
  return t;
}

ScaleTemplate load_scale_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError("schema: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  ScaleTemplate t;
  t.base = scenario_from_json(doc);
  if (!doc.contains("scale")) throw ScenarioError("schema: scale template is missing field 'scale'");
  const json& sc = doc.at("scale");
  try {
    t.cluster_buses = sc.at("cluster_buses").get<std::vector<int>>();
    t.patterns.clear();
    for (const auto& p : sc.at("patterns")) t.patterns.push_back(parse_fleet_pattern(p.get<std::string>()));
    t.evs_per_station = sc.at("evs_per_station").get<int>();
    t.seed = sc.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("schema: field of 'scale' is missing or has the wrong type (") + e.what() + ")");
  }
  return t;
}

void save_scale_template(const ScaleTemplate& t, const std::string& path) {
  json doc = scenario_to_json(t.base);
  json patterns = json::array();
  for (auto p : t.patterns) patterns.push_back(to_string(p));
  doc["scale"] = {{"cluster_buses", t.cluster_buses}, {"patterns", patterns}, {"evs_per_station", t.evs_per_station}, {"seed", t.seed}};
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write '" + path + "'");
  out << doc.dump(1) << "\n";
}

Scenario scale_scenario(const ScaleTemplate& t, int groups) {
  if (groups < 1) throw ScenarioError("scale: at least one group is required");
  if (static_cast<size_t>(groups) > t.cluster_buses.size()) {
    throw ScenarioError("scale: " + std::to_string(groups) + " groups requested but only " + std::to_string(t.cluster_buses.size()) +
                        " cluster buses are available");
  }
  if (t.base.storages.empty()) throw ScenarioError("scale: template has no storage cluster");
  const StorageSpec& proto = t.base.storages.front();
  std::vector<const StationSpec*> members;
  for (const auto& id : proto.connected_stations) {
    const int i = t.base.station_index(id);
    if (i < 0) throw ScenarioError("scale: template storage references unknown station '" + id + "'");
    members.push_back(&t.base.stations[static_cast<size_t>(i)]);
  }
  if (t.patterns.size() != members.size()) throw ScenarioError("scale: one fleet pattern per cluster station is required");

  Scenario s = t.base;
  s.name = t.base.name + "_x" + std::to_string(groups);
  s.stations.clear();
  s.storages.clear();
  for (int g = 0; g < groups; ++g) {
    const int bus = t.cluster_buses[static_cast<size_t>(g)];
    const std::string prefix = "g" + std::to_string(g + 1);
    std::vector<std::string> ids;
    for (size_t j = 0; j < members.size(); ++j) {
      StationSpec st = *members[j];
      st.id = prefix + members[j]->id;
      st.bus_id = bus;
      st.fleet = synthesize_fleet(t.evs_per_station, t.patterns[j], t.seed * 1000 + static_cast<std::uint64_t>(g) * 16 + j, s.time);
      ids.push_back(st.id);
      s.stations.push_back(std::move(st));
    }
    StorageSpec b = proto;
    b.id = prefix + proto.id;
    b.bus_id = bus;
    b.connected_stations = ids;
    s.storages.push_back(std::move(b));
  }
  return s;
}

}  // namespace evshare
