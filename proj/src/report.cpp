#include "evshare/report.hpp"

#include "json.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

namespace evshare {

using nlohmann::json;
using Grid = std::vector<std::vector<double>>;

namespace {

void set_precision(std::ostream& out) { out << std::setprecision(10); }

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  set_precision(out);
  out << "k,cso_total,seso_total,dso,total,lambda_gap,mu_gap,coupling_resid\n";
  for (const auto& r : trace.rows) {
    out << r.k << ',' << r.cso_total << ',' << r.seso_total << ',' << r.dso << ',' << r.total << ',' << r.lambda_gap << ',' << r.mu_gap << ','
        << r.coupling_resid << '\n';
  }
}

void write_cost_table_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  set_precision(out);
  out << "variant,stakeholder,cost\n";
  for (const auto& r : results) {
    for (size_t i = 0; i < r.cso.size(); ++i) out << r.variant << ',' << r.station_ids[i] << ',' << r.cso[i] << '\n';
    for (size_t k = 0; k < r.seso.size(); ++k) out << r.variant << ',' << r.storage_ids[k] << ',' << r.seso[k] << '\n';
    out << r.variant << ",DSO," << r.dso << '\n';
    out << r.variant << ",total," << r.total << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  set_precision(out);
  out << "variant,total,reduction_pct,seconds,iterations,converged,relaxation_gap\n";
  for (const auto& r : results) {
    out << r.variant << ',' << r.total << ',' << 100.0 * r.reduction << ',' << r.seconds << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
        << r.relaxation_gap << '\n';
  }
}

void write_payments_csv(std::ostream& out, const ProfitAllocation& pa) {
  set_precision(out);
  out << "payer";
  for (const auto& p : pa.parties) out << ',' << p;
  out << ",own,total\n";
  const size_t ni = pa.station_own.size(), nb = pa.storage_own.size();
  for (size_t x = 0; x < pa.parties.size(); ++x) {
    out << pa.parties[x];
    for (double v : pa.payments[x]) out << ',' << v;
    double own = 0.0, total = 0.0;
    if (x < ni) {
      own = pa.station_own[x];
      total = pa.cso[x];
    } else if (x < ni + nb) {
      own = pa.storage_own[x - ni];
      total = pa.seso[x - ni];
    } else {
      own = pa.network_own;
      total = pa.dso;
    }
    out << ',' << own << ',' << total << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  set_precision(out);
  out << "value,variant,total,cso_total,seso_total,dso,storage_throughput\n";
  for (const auto& r : rows) {
    out << r.value << ',' << r.variant << ',' << r.result.total << ',' << sum(r.result.cso) << ',' << sum(r.result.seso) << ',' << r.result.dso << ','
        << r.storage_throughput << '\n';
  }
}

void write_scalability_csv(std::ostream& out, const std::vector<ScalabilityRow>& rows) {
  set_precision(out);
  out << "groups,stations,storages,evs,iterations,converged,wall_seconds,mean_cso_seconds,mean_seso_seconds,mean_dso_seconds,total_cost\n";
  for (const auto& r : rows) {
    out << r.groups << ',' << r.stations << ',' << r.storages << ',' << r.evs << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
        << r.wall_seconds << ',' << r.mean_cso_seconds << ',' << r.mean_seso_seconds << ',' << r.mean_dso_seconds << ',' << r.total_cost << '\n';
  }
}

namespace {

json ev_json(const EvSchedule& e) {
  return {{"charge_power", e.charge_power}, {"discharge_power", e.discharge_power}, {"net_power", e.net_power}, {"energy", e.energy}};
}

json storage_json(const StorageSchedule& b) {
  return {{"station_charge", b.station_charge},       {"station_discharge", b.station_discharge}, {"grid_charge", b.grid_charge},
          {"grid_discharge", b.grid_discharge},       {"net_from_station", b.net_from_station},   {"net_from_grid", b.net_from_grid},
          {"soc", b.soc}};
}

json flow_json(const FlowState& f) {
  return {{"line_p", f.line_p},     {"line_q", f.line_q},     {"current_sq", f.current_sq}, {"volt_sq", f.volt_sq},
          {"bus_p", f.bus_p},       {"bus_q", f.bus_q},       {"grid_buy", f.grid_buy},     {"grid_sell", f.grid_sell},
          {"station_exchange", f.station_exchange},           {"storage_exchange", f.storage_exchange}};
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) throw ScenarioError("solution: " + where + " is missing field '" + key + "'");
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError("solution: field '" + std::string(key) + "' of " + where + " has the wrong type");
  }
}

void expect_rows(const Grid& g, size_t rows, size_t T, const std::string& what) {
  bool ok = g.size() == rows;
  for (const auto& r : g) ok = ok && r.size() == T;
  if (!ok) throw ScenarioError("solution: " + what + " does not match the scenario shape");
}

void expect_len(const std::vector<double>& v, size_t n, const std::string& what) {
  if (v.size() != n) throw ScenarioError("solution: " + what + " does not match the scenario shape");
}

}  // namespace

void save_solution(const std::string& path, const Scenario& s, const Allocation& a, const PriceSystem& p) {
  json stations = json::array();
  for (size_t i = 0; i < a.stations.size(); ++i) {
    json evs = json::array();
    for (const auto& e : a.ev[i]) evs.push_back(ev_json(e));
    stations.push_back({{"id", s.stations[i].id},
                        {"demand", a.stations[i].demand},
                        {"to_grid", a.stations[i].to_grid},
                        {"to_storage", a.stations[i].to_storage},
                        {"evs", evs}});
  }
  json storages = json::array();
  for (size_t k = 0; k < a.storages.size(); ++k) {
    json b = storage_json(a.storages[k]);
    b["id"] = s.storages[k].id;
    storages.push_back(b);
  }
  const json doc = {{"scenario", s.name},
                    {"stations", stations},
                    {"storages", storages},
                    {"flow", flow_json(a.flow)},
                    {"prices", {{"station_price", p.station_price}, {"storage_price", p.storage_price}}}};
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write '" + path + "'");
  out << std::setprecision(17) << doc.dump(1) << "\n";
}

Solution load_solution(const std::string& path, const Scenario& s) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError("solution: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const size_t ni = s.stations.size(), nb = s.storages.size();
  Solution sol;
  Allocation& a = sol.allocation;

  std::vector<json> stations;
  read(doc, "stations", stations, "document");
  if (stations.size() != ni) throw ScenarioError("solution: expected " + std::to_string(ni) + " stations");
  for (size_t i = 0; i < ni; ++i) {
    const auto& st = s.stations[i];
    const std::string where = "station '" + st.id + "'";
    StationState ss;
    read(stations[i], "demand", ss.demand, where);
    read(stations[i], "to_grid", ss.to_grid, where);
    read(stations[i], "to_storage", ss.to_storage, where);
    expect_len(ss.demand, T, where + " demand");
    expect_len(ss.to_grid, T, where + " to_grid");
    expect_len(ss.to_storage, T, where + " to_storage");
    std::vector<json> evs;
    read(stations[i], "evs", evs, where);
    if (evs.size() != st.fleet.size()) throw ScenarioError("solution: " + where + " has the wrong number of EV schedules");
    std::vector<EvSchedule> sched;
    for (const auto& e : evs) {
      EvSchedule es;
      read(e, "charge_power", es.charge_power, where);
      read(e, "discharge_power", es.discharge_power, where);
      read(e, "net_power", es.net_power, where);
      read(e, "energy", es.energy, where);
      expect_len(es.charge_power, T, where + " EV charge power");
      expect_len(es.discharge_power, T, where + " EV discharge power");
      expect_len(es.net_power, T, where + " EV net power");
      expect_len(es.energy, T + 1, where + " EV energy");
      sched.push_back(std::move(es));
    }
    a.ev.push_back(std::move(sched));
    a.stations.push_back(std::move(ss));
  }

  std::vector<json> storages;
  read(doc, "storages", storages, "document");
  if (storages.size() != nb) throw ScenarioError("solution: expected " + std::to_string(nb) + " storages");
  for (size_t k = 0; k < nb; ++k) {
    const std::string where = "storage '" + s.storages[k].id + "'";
    const size_t nc = s.storages[k].connected_stations.size();
    StorageSchedule b;
    read(storages[k], "station_charge", b.station_charge, where);
    read(storages[k], "station_discharge", b.station_discharge, where);
    read(storages[k], "grid_charge", b.grid_charge, where);
    read(storages[k], "grid_discharge", b.grid_discharge, where);
    read(storages[k], "net_from_station", b.net_from_station, where);
    read(storages[k], "net_from_grid", b.net_from_grid, where);
    read(storages[k], "soc", b.soc, where);
    expect_rows(b.station_charge, nc, T, where + " station charge");
    expect_rows(b.station_discharge, nc, T, where + " station discharge");
    expect_rows(b.net_from_station, nc, T, where + " net station flow");
    expect_len(b.net_from_grid, T, where + " net grid flow");
    expect_len(b.soc, T + 1, where + " energy level");
    a.storages.push_back(std::move(b));
  }

  json flow;
  read(doc, "flow", flow, "document");
  FlowState& f = a.flow;
  read(flow, "line_p", f.line_p, "flow");
  read(flow, "line_q", f.line_q, "flow");
  read(flow, "current_sq", f.current_sq, "flow");
  read(flow, "volt_sq", f.volt_sq, "flow");
  read(flow, "bus_p", f.bus_p, "flow");
  read(flow, "bus_q", f.bus_q, "flow");
  read(flow, "grid_buy", f.grid_buy, "flow");
  read(flow, "grid_sell", f.grid_sell, "flow");
  read(flow, "station_exchange", f.station_exchange, "flow");
  read(flow, "storage_exchange", f.storage_exchange, "flow");
  const size_t nl = s.network.lines.size(), nbus = s.network.buses.size();
  expect_rows(f.line_p, nl, T, "line active power");
  expect_rows(f.line_q, nl, T, "line reactive power");
  expect_rows(f.current_sq, nl, T, "line current");
  expect_rows(f.volt_sq, nbus, T, "bus voltage");
  expect_rows(f.bus_p, nbus, T, "bus active injection");
  expect_rows(f.bus_q, nbus, T, "bus reactive injection");
  expect_len(f.grid_buy, T, "grid purchase");
  expect_len(f.grid_sell, T, "grid sale");
  expect_rows(f.station_exchange, ni, T, "station exchange");
  expect_rows(f.storage_exchange, nb, T, "storage exchange");

  json prices;
  read(doc, "prices", prices, "document");
  read(prices, "station_price", sol.prices.station_price, "prices");
  read(prices, "storage_price", sol.prices.storage_price, "prices");
  expect_rows(sol.prices.station_price, ni, T, "station prices");
  expect_rows(sol.prices.storage_price, nb, T, "storage prices");
  return sol;
}

}  // namespace evshare
