#include "evshare/system_model.hpp"

#include <algorithm>
#include <cmath>

namespace evshare {

using kernel::ProgramBuilder;
using kernel::Term;

SystemModel build_system_model(const Scenario& s, const ModelOptions& opt) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  ProgramBuilder b;
  SystemModel m;
  for (const auto& st : s.stations) m.stations.push_back(add_station_model(b, st, s.time));
  for (const auto& sto : s.storages) {
    m.storages.push_back(storage_is_degenerate(sto) ? StorageLayout{} : add_storage_model(b, sto, s.time, s.storage_cyclic));
  }
  m.network = add_network_model(b, s);

  m.balance_rows.assign(s.stations.size(), std::vector<int>(T, -1));
  for (size_t i = 0; i < s.stations.size(); ++i) {
    const int bat = s.storage_of_station(static_cast<int>(i));
    size_t pos = 0;
    if (bat >= 0) {
      const auto& ids = s.storages[static_cast<size_t>(bat)].connected_stations;
      pos = static_cast<size_t>(std::find(ids.begin(), ids.end(), s.stations[i].id) - ids.begin());
    }
    const std::vector<double> casap = opt.fix_casap_demand ? aggregate_demand([&] {
      std::vector<EvSchedule> v;
      for (const auto& ev : s.stations[i].fleet) {
        auto p = casap_profile(ev, s.time);
        v.push_back(make_schedule(ev, s.time, p, std::vector<double>(T, 0.0)));
      }
      return v;
    }(), static_cast<int>(T))
                                                           : std::vector<double>();
    for (size_t t = 0; t < T; ++t) {
      std::vector<Term> row{{m.stations[i].demand[t], 1.0}, {m.network.station_exchange[i][t], 1.0}};
      if (bat >= 0 && !storage_is_degenerate(s.storages[static_cast<size_t>(bat)])) {
        for (const auto& term : m.storages[static_cast<size_t>(bat)].station_net(pos, t)) row.push_back(term);
      }
      m.balance_rows[i][t] = b.add_equality(row, s.stations[i].pv_profile[t]);
      if (opt.fix_casap_demand) b.add_equality({{m.stations[i].demand[t], 1.0}}, casap[t]);
    }
  }
  m.exchange_rows.assign(s.storages.size(), std::vector<int>(T, -1));
  for (size_t k = 0; k < s.storages.size(); ++k) {
    if (m.network.storage_exchange[k].empty() || m.network.storage_exchange[k][0] < 0) continue;
    for (size_t t = 0; t < T; ++t) {
      std::vector<Term> row = m.storages[k].grid_net(t);
      row.push_back({m.network.storage_exchange[k][t], 1.0});
      m.exchange_rows[k][t] = b.add_equality(row, 0.0);
    }
  }
  m.program = b.build();
  return m;
}

Allocation decode_allocation(const SystemModel& m, const Scenario& s, const kernel::Vector& x) {
  Allocation a;
  for (size_t i = 0; i < s.stations.size(); ++i) a.ev.push_back(decode_fleet(m.stations[i], s.stations[i], s.time, x));
  for (size_t k = 0; k < s.storages.size(); ++k) {
    a.storages.push_back(storage_is_degenerate(s.storages[k]) ? idle_storage_schedule(s.storages[k], s.time)
                                                              : decode_storage(m.storages[k], s.storages[k], s.time, x));
  }
  a.flow = decode_flow(m.network, s, x);
  for (size_t i = 0; i < s.stations.size(); ++i) {
    StationState st;
    st.demand = decode_series(m.stations[i].demand, x);
    st.to_grid = a.flow.station_exchange[i];
    a.stations.push_back(std::move(st));
  }
  for (size_t i = 0; i < s.stations.size(); ++i) a.stations[i].to_storage = station_storage_flow(s, a, static_cast<int>(i));
  return a;
}

PriceSystem decode_prices(const SystemModel& m, const Scenario& s, const kernel::Vector& eq_duals) {
  PriceSystem p = zero_prices(s);
  for (size_t i = 0; i < m.balance_rows.size(); ++i)
    for (size_t t = 0; t < m.balance_rows[i].size(); ++t) p.station_price[i][t] = kernel::price_from_dual(eq_duals[m.balance_rows[i][t]]) / s.time.slot_hours;
  for (size_t k = 0; k < m.exchange_rows.size(); ++k)
    for (size_t t = 0; t < m.exchange_rows[k].size(); ++t) {
      if (m.exchange_rows[k][t] >= 0) p.storage_price[k][t] = kernel::price_from_dual(eq_duals[m.exchange_rows[k][t]]) / s.time.slot_hours;
    }
  return p;
}

PriceSystem zero_prices(const Scenario& s) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  PriceSystem p;
  p.station_price.assign(s.stations.size(), std::vector<double>(T, 0.0));
  p.storage_price.assign(s.storages.size(), std::vector<double>(T, 0.0));
  return p;
}

std::vector<double> station_storage_flow(const Scenario& s, const Allocation& a, int station) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const int bat = s.storage_of_station(station);
  if (bat < 0 || static_cast<size_t>(bat) >= a.storages.size()) return std::vector<double>(T, 0.0);
  const auto& ids = s.storages[static_cast<size_t>(bat)].connected_stations;
  const size_t pos = static_cast<size_t>(std::find(ids.begin(), ids.end(), s.stations[static_cast<size_t>(station)].id) - ids.begin());
  return a.storages[static_cast<size_t>(bat)].net_from_station[pos];
}

CouplingResidual coupling_residual(const Scenario& s, const Allocation& a) {
  CouplingResidual r;
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  for (size_t i = 0; i < s.stations.size(); ++i) {
    const auto pb = station_storage_flow(s, a, static_cast<int>(i));
    for (size_t t = 0; t < T; ++t) {
      const double res = a.stations[i].demand[t] + a.flow.station_exchange[i][t] + pb[t] - s.stations[i].pv_profile[t];
      r.station_balance = std::max(r.station_balance, std::abs(res));
    }
  }
  for (size_t k = 0; k < s.storages.size(); ++k) {
    for (size_t t = 0; t < T; ++t) {
      r.storage_exchange = std::max(r.storage_exchange, std::abs(a.flow.storage_exchange[k][t] + a.storages[k].net_from_grid[t]));
    }
  }
  return r;
}

std::vector<std::string> check_allocation(const Scenario& s, const Allocation& a, double tol, double coupling_tol) {
  std::vector<std::string> v;
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  for (size_t i = 0; i < s.stations.size(); ++i) {
    const auto& st = s.stations[i];
    for (size_t e = 0; e < st.fleet.size(); ++e) {
      for (auto& msg : check_ev_feasibility(a.ev[i][e], st.fleet[e], s.time, tol)) v.push_back("station '" + st.id + "' " + msg);
    }
    const auto agg = aggregate_demand(a.ev[i], static_cast<int>(T));
    for (size_t t = 0; t < T; ++t) {
      if (std::abs(agg[t] - a.stations[i].demand[t]) > tol) {
        v.push_back("station '" + st.id + "': demand differs from the fleet's net power at slot " + std::to_string(t));
      }
    }
  }
  for (size_t k = 0; k < s.storages.size(); ++k) {
    for (auto& msg : check_storage_feasibility(a.storages[k], s.storages[k], s.time, s.storage_cyclic, tol)) v.push_back(msg);
  }
  for (auto& msg : check_network_feasibility(a.flow, s, tol)) v.push_back(msg);
  const auto r = coupling_residual(s, a);
  if (r.station_balance > coupling_tol) v.push_back("station power balance residual " + std::to_string(r.station_balance) + " kW");
  if (r.storage_exchange > coupling_tol) v.push_back("storage-grid exchange residual " + std::to_string(r.storage_exchange) + " kW");
  return v;
}

}  // namespace evshare
