#include "evshare/scenario.hpp"

#include "evshare/ev_station.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace evshare {

using nlohmann::json;

int NetworkSpec::bus_index(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == bus_id) return static_cast<int>(i);
  }
  return -1;
}

int Scenario::station_index(const std::string& id) const {
  for (size_t i = 0; i < stations.size(); ++i) {
    if (stations[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int Scenario::storage_of_station(int station) const {
  const std::string& id = stations.at(static_cast<size_t>(station)).id;
  for (size_t b = 0; b < storages.size(); ++b) {
    for (const auto& s : storages[b].connected_stations) {
      if (s == id) return static_cast<int>(b);
    }
  }
  return -1;
}

std::vector<int> Scenario::stations_of_storage(int storage) const {
  std::vector<int> out;
  for (const auto& id : storages.at(static_cast<size_t>(storage)).connected_stations) out.push_back(station_index(id));
  return out;
}

int Scenario::total_evs() const {
  int n = 0;
  for (const auto& st : stations) n += static_cast<int>(st.fleet.size());
  return n;
}

namespace {

// JSON has no infinity; unbounded limits are written as null.
json bound_to_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

double bound_from_json(const json& j, double unbounded) { return j.is_null() ? unbounded : j.get<double>(); }

const json& field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw ScenarioError("schema: " + ctx + " is missing field '" + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ScenarioError("schema: field '" + std::string(key) + "' of " + ctx + " has the wrong type (" + e.what() + ")");
  }
}

template <class T>
T get_or(const json& j, const char* key, const std::string& ctx, T fallback) {
  return j.contains(key) ? get<T>(j, key, ctx) : fallback;
}

EvTask ev_from_json(const json& j, const std::string& ctx) {
  EvTask t;
  t.id = get<std::string>(j, "id", ctx);
  const std::string c = ctx + " ev '" + t.id + "'";
  t.arrival_slot = get<int>(j, "arrival_slot", c);
  t.departure_slot = get<int>(j, "departure_slot", c);
  t.initial_energy = get<double>(j, "initial_energy", c);
  t.required_energy = get<double>(j, "required_energy", c);
  t.energy_min = get_or<double>(j, "energy_min", c, t.energy_min);
  t.energy_max = get_or<double>(j, "energy_max", c, t.energy_max);
  t.power_max = get_or<double>(j, "power_max", c, t.power_max);
  t.eff_charge = get_or<double>(j, "eff_charge", c, t.eff_charge);
  t.eff_discharge = get_or<double>(j, "eff_discharge", c, t.eff_discharge);
  t.inconvenience_coeff = get_or<double>(j, "inconvenience_coeff", c, t.inconvenience_coeff);
  t.depreciation_coeff = get_or<double>(j, "depreciation_coeff", c, t.depreciation_coeff);
  return t;
}

json ev_to_json(const EvTask& t) {
  return json{{"id", t.id},
              {"arrival_slot", t.arrival_slot},
              {"departure_slot", t.departure_slot},
              {"initial_energy", t.initial_energy},
              {"required_energy", t.required_energy},
              {"energy_min", t.energy_min},
              {"energy_max", t.energy_max},
              {"power_max", t.power_max},
              {"eff_charge", t.eff_charge},
              {"eff_discharge", t.eff_discharge},
              {"inconvenience_coeff", t.inconvenience_coeff},
              {"depreciation_coeff", t.depreciation_coeff}};
}

std::pair<double, double> pair_from_json(const json& j, const char* key, const std::string& ctx, double lo, double hi) {
  if (!j.contains(key)) return {lo, hi};
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ScenarioError("schema: field '" + std::string(key) + "' of " + ctx + " must be a [low, high] pair");
  return {bound_from_json(v[0], lo), bound_from_json(v[1], hi)};
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ScenarioError("schema: document is not an object");
  if (!doc.contains("schema")) throw ScenarioError("schema: missing field 'schema'");
  if (doc.at("schema") != 1) throw ScenarioError("schema: unsupported schema version " + doc.at("schema").dump());

  Scenario s;
  s.name = get_or<std::string>(doc, "name", "scenario", "");
  const json& time = field(doc, "time", "scenario");
  s.time.horizon_slots = get<int>(time, "slots", "time");
  s.time.slot_hours = get<double>(time, "slot_hours", "time");

  const json& net = field(doc, "network", "scenario");
  s.network.s_base = get_or<double>(net, "s_base_kva", "network", s.network.s_base);
  s.network.v_base = get_or<double>(net, "v_base_kv", "network", s.network.v_base);
  s.network.slack_bus_id = get<int>(net, "slack_bus", "network");
  for (const json& jb : field(net, "buses", "network")) {
    BusSpec b;
    b.id = get<int>(jb, "id", "bus");
    const std::string ctx = "bus " + std::to_string(b.id);
    std::tie(b.p_min, b.p_max) = pair_from_json(jb, "p_bounds", ctx, -kUnbounded, kUnbounded);
    std::tie(b.q_min, b.q_max) = pair_from_json(jb, "q_bounds", ctx, -kUnbounded, kUnbounded);
    std::tie(b.v_min, b.v_max) = pair_from_json(jb, "v_bounds", ctx, b.v_min, b.v_max);
    b.load_p = get<std::vector<double>>(jb, "load_p", ctx);
    b.load_q = get<std::vector<double>>(jb, "load_q", ctx);
    s.network.buses.push_back(std::move(b));
  }
  for (const json& jl : field(net, "lines", "network")) {
    if (!jl.is_array() || jl.size() != 5) throw ScenarioError("schema: network line must be [from, to, r, x, l_max]");
    LineSpec l;
    l.from = jl[0].get<int>();
    l.to = jl[1].get<int>();
    l.r = jl[2].get<double>();
    l.x = jl[3].get<double>();
    l.l_max = bound_from_json(jl[4], kUnbounded);
    s.network.lines.push_back(l);
  }

  for (const json& js : field(doc, "stations", "scenario")) {
    StationSpec st;
    st.id = get<std::string>(js, "id", "station");
    const std::string ctx = "station '" + st.id + "'";
    st.bus_id = get<int>(js, "bus", ctx);
    st.pv_profile = get<std::vector<double>>(js, "pv", ctx);
    for (const json& je : field(js, "fleet", ctx)) st.fleet.push_back(ev_from_json(je, ctx));
    s.stations.push_back(std::move(st));
  }

  for (const json& jb : field(doc, "storages", "scenario")) {
    StorageSpec b;
    b.id = get<std::string>(jb, "id", "storage");
    const std::string ctx = "storage '" + b.id + "'";
    b.bus_id = get<int>(jb, "bus", ctx);
    b.connected_stations = get<std::vector<std::string>>(jb, "stations", ctx);
    b.capacity = get<double>(jb, "capacity", ctx);
    b.energy_min = get_or<double>(jb, "e_min", ctx, 0.1 * b.capacity);
    b.energy_max = get_or<double>(jb, "e_max", ctx, 0.9 * b.capacity);
    b.power_charge_max = get_or<double>(jb, "p_charge_max", ctx, 0.3 * b.capacity);
    b.power_discharge_max = get_or<double>(jb, "p_discharge_max", ctx, 0.3 * b.capacity);
    b.eff_charge = get_or<double>(jb, "eta_c", ctx, b.eff_charge);
    b.eff_discharge = get_or<double>(jb, "eta_d", ctx, b.eff_discharge);
    b.degradation_coeff = get_or<double>(jb, "c_deg", ctx, b.degradation_coeff);
    b.initial_energy = get_or<double>(jb, "e_init", ctx, 0.5 * b.capacity);
    b.grid_exchange = get_or<bool>(jb, "grid_exchange", ctx, true);
    s.storages.push_back(std::move(b));
  }

  const json& tariff = field(doc, "tariff", "scenario");
  s.tariff.buy_price = get<std::vector<double>>(tariff, "buy", "tariff");
  s.tariff.sell_price = get<std::vector<double>>(tariff, "sell", "tariff");

  if (doc.contains("options")) s.storage_cyclic = get_or<bool>(doc.at("options"), "storage_cyclic", "options", true);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["schema"] = 1;
  doc["name"] = s.name;
  doc["time"] = {{"slots", s.time.horizon_slots}, {"slot_hours", s.time.slot_hours}};
  json buses = json::array();
  for (const auto& b : s.network.buses) {
    buses.push_back({{"id", b.id},
                     {"p_bounds", {bound_to_json(b.p_min), bound_to_json(b.p_max)}},
                     {"q_bounds", {bound_to_json(b.q_min), bound_to_json(b.q_max)}},
                     {"v_bounds", {b.v_min, b.v_max}},
                     {"load_p", b.load_p},
                     {"load_q", b.load_q}});
  }
  json lines = json::array();
  for (const auto& l : s.network.lines) lines.push_back({l.from, l.to, l.r, l.x, bound_to_json(l.l_max)});
  doc["network"] = {{"s_base_kva", s.network.s_base},
                    {"v_base_kv", s.network.v_base},
                    {"slack_bus", s.network.slack_bus_id},
                    {"buses", buses},
                    {"lines", lines}};
  json stations = json::array();
  for (const auto& st : s.stations) {
    json fleet = json::array();
    for (const auto& t : st.fleet) fleet.push_back(ev_to_json(t));
    stations.push_back({{"id", st.id}, {"bus", st.bus_id}, {"pv", st.pv_profile}, {"fleet", fleet}});
  }
  doc["stations"] = stations;
  json storages = json::array();
  for (const auto& b : s.storages) {
    storages.push_back({{"id", b.id},
                        {"bus", b.bus_id},
                        {"stations", b.connected_stations},
                        {"capacity", b.capacity},
                        {"e_min", b.energy_min},
                        {"e_max", b.energy_max},
                        {"p_charge_max", b.power_charge_max},
                        {"p_discharge_max", b.power_discharge_max},
                        {"eta_c", b.eff_charge},
                        {"eta_d", b.eff_discharge},
                        {"c_deg", b.degradation_coeff},
                        {"e_init", b.initial_energy},
                        {"grid_exchange", b.grid_exchange}});
  }
  doc["storages"] = storages;
  doc["tariff"] = {{"buy", s.tariff.buy_price}, {"sell", s.tariff.sell_price}};
  doc["options"] = {{"storage_cyclic", s.storage_cyclic}};
  return doc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("schema: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  Scenario s = scenario_from_json(doc);
  const auto report = validate_scenario(s);
  if (!report.empty()) {
    std::string msg = report.front();
    for (size_t i = 1; i < report.size(); ++i) msg += "; " + report[i];
    throw ScenarioError(msg);
  }
  return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file '" + path + "'");
  out << scenario_to_json(s).dump(1) << "\n";
}

namespace {

void check_network(const Scenario& s, std::vector<std::string>& rep) {
  const auto& net = s.network;
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  std::set<int> ids;
  for (const auto& b : net.buses) {
    const std::string name = "bus " + std::to_string(b.id);
    if (!ids.insert(b.id).second) rep.push_back(name + ": duplicate bus id");
    if (!(b.v_min > 0 && b.v_min < b.v_max)) rep.push_back(name + ": voltage bounds must satisfy 0 < v_min < v_max");
    if (b.p_min > b.p_max || b.q_min > b.q_max) rep.push_back(name + ": injection bounds are inverted");
    if (b.load_p.size() != T || b.load_q.size() != T) rep.push_back(name + ": load profiles must have one entry per slot");
  }
  if (net.bus_index(net.slack_bus_id) < 0) rep.push_back("network: slack bus " + std::to_string(net.slack_bus_id) + " does not exist");
  if (!(net.s_base > 0 && net.v_base > 0)) rep.push_back("network: base values must be positive");
  for (const auto& l : net.lines) {
    const std::string name = "line " + std::to_string(l.from) + "-" + std::to_string(l.to);
    if (net.bus_index(l.from) < 0 || net.bus_index(l.to) < 0) rep.push_back(name + ": endpoint bus does not exist");
    if (l.r < 0 || l.x < 0 || !(l.l_max > 0)) rep.push_back(name + ": impedance must be nonnegative and current limit positive");
  }
  // Radial: n-1 lines, and every bus reachable from the slack through lines
  // oriented away from it.
  bool radial = net.lines.size() + 1 == net.buses.size();
  if (radial) {
    std::map<int, int> parent_count;
    for (const auto& l : net.lines) parent_count[l.to]++;
    std::set<int> seen{net.slack_bus_id};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& l : net.lines) {
        if (seen.count(l.from) && !seen.count(l.to)) {
          seen.insert(l.to);
          grew = true;
        }
      }
    }
    radial = seen.size() == net.buses.size() && parent_count.count(net.slack_bus_id) == 0;
    for (const auto& [bus, n] : parent_count) radial = radial && n == 1;
  }
  if (!radial) rep.push_back("network not radial");
}

void check_ev(const EvTask& t, const TimeGrid& g, const std::string& owner, std::vector<std::string>& rep) {
  const std::string name = owner + " ev '" + t.id + "'";
  const int T = g.horizon_slots;
  if (!(0 <= t.arrival_slot && t.arrival_slot < t.departure_slot && t.departure_slot <= T)) {
    rep.push_back(name + ": need 0 <= arrival < departure <= horizon");
    return;
  }
  if (!(t.energy_min <= t.initial_energy && t.initial_energy <= t.energy_max)) rep.push_back(name + ": initial energy outside [E_min, E_max]");
  if (!(t.energy_min <= t.required_energy && t.required_energy <= t.energy_max)) rep.push_back(name + ": required energy outside [E_min, E_max]");
  if (t.required_energy < t.initial_energy) rep.push_back(name + ": required energy below initial energy");
  if (!(t.power_max > 0) || !(t.eff_charge > 0 && t.eff_charge <= 1) || !(t.eff_discharge > 0 && t.eff_discharge <= 1)) {
    rep.push_back(name + ": power limit and efficiencies must lie in (0, 1]");
    return;
  }
  if (t.inconvenience_coeff < 0 || t.depreciation_coeff < 0) rep.push_back(name + ": cost coefficients must be nonnegative");
  const double window = (t.departure_slot - t.arrival_slot) * g.slot_hours;
  if (min_charge_time(t) > window + 1e-12) {
    rep.push_back(name + ": required energy unreachable before departure");
  } else if (t.required_energy >= t.initial_energy && !casap_fits(t, g)) {
    rep.push_back(name + ": charge-as-soon-as-possible profile extends past departure");
  }
}

}  // namespace

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> rep;
  const int T = s.time.horizon_slots;
  if (T < 1) rep.push_back("time: horizon must have at least one slot");
  if (!(s.time.slot_hours > 0)) rep.push_back("time: slot length must be positive");
  if (!rep.empty()) return rep;
  const size_t Tn = static_cast<size_t>(T);

  check_network(s, rep);

  if (s.tariff.buy_price.size() != Tn || s.tariff.sell_price.size() != Tn) {
    rep.push_back("tariff: price series must have one entry per slot");
  } else {
    for (size_t t = 0; t < Tn; ++t) {
      if (!(s.tariff.sell_price[t] < s.tariff.buy_price[t])) {
        rep.push_back("tariff no-arbitrage violated at slot " + std::to_string(t));
      }
    }
  }

  std::set<std::string> station_ids;
  for (const auto& st : s.stations) {
    const std::string name = "station '" + st.id + "'";
    if (!station_ids.insert(st.id).second) rep.push_back(name + ": duplicate station id");
    if (s.network.bus_index(st.bus_id) < 0) rep.push_back(name + ": bus " + std::to_string(st.bus_id) + " does not exist");
    if (st.pv_profile.size() != Tn) {
      rep.push_back(name + ": pv profile must have one entry per slot");
    } else {
      for (double v : st.pv_profile) {
        if (v < 0) {
          rep.push_back(name + ": pv profile must be nonnegative");
          break;
        }
      }
    }
    std::set<std::string> ev_ids;
    for (const auto& ev : st.fleet) {
      if (!ev_ids.insert(ev.id).second) rep.push_back(name + ": duplicate ev id '" + ev.id + "'");
      check_ev(ev, s.time, name, rep);
    }
  }

  std::map<std::string, std::string> owner;
  std::set<std::string> storage_ids;
  for (const auto& b : s.storages) {
    const std::string name = "storage '" + b.id + "'";
    if (!storage_ids.insert(b.id).second) rep.push_back(name + ": duplicate storage id");
    if (s.network.bus_index(b.bus_id) < 0) rep.push_back(name + ": bus " + std::to_string(b.bus_id) + " does not exist");
    if (!(0 <= b.energy_min && b.energy_min <= b.initial_energy && b.initial_energy <= b.energy_max && b.energy_max <= b.capacity)) {
      rep.push_back(name + ": need 0 <= E_min <= E_init <= E_max <= capacity");
    }
    if (!(b.power_charge_max > 0 && b.power_discharge_max > 0)) rep.push_back(name + ": power limits must be positive");
    if (!(b.eff_charge > 0 && b.eff_charge <= 1 && b.eff_discharge > 0 && b.eff_discharge <= 1)) rep.push_back(name + ": efficiencies must lie in (0, 1]");
    if (b.degradation_coeff < 0) rep.push_back(name + ": degradation coefficient must be nonnegative");
    if (b.connected_stations.empty()) rep.push_back(name + ": no connected stations");
    for (const auto& sid : b.connected_stations) {
      if (!station_ids.count(sid)) {
        rep.push_back(name + ": connected station '" + sid + "' does not exist");
      } else if (!owner.emplace(sid, b.id).second) {
        rep.push_back("station '" + sid + "' is connected to more than one storage");
      }
    }
  }
  return rep;
}

}  // namespace evshare
