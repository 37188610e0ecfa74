#include "evshare/shared_storage.hpp"

#include <cmath>
#include <stdexcept>

namespace evshare {

using kernel::ProgramBuilder;
using kernel::Term;

StorageSchedule make_storage_schedule(const StorageSpec& spec, const TimeGrid& grid, std::vector<std::vector<double>> station_charge,
                                      std::vector<std::vector<double>> station_discharge, std::vector<double> grid_charge,
                                      std::vector<double> grid_discharge) {
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  if (station_charge.size() != spec.connected_stations.size() || station_discharge.size() != station_charge.size()) {
    throw std::invalid_argument("storage '" + spec.id + "': one flow series per connected station required");
  }
  StorageSchedule s;
  s.station_charge = std::move(station_charge);
  s.station_discharge = std::move(station_discharge);
  s.grid_charge = std::move(grid_charge);
  s.grid_discharge = std::move(grid_discharge);
  s.net_from_station.assign(s.station_charge.size(), std::vector<double>(T, 0.0));
  for (size_t i = 0; i < s.station_charge.size(); ++i) {
    for (size_t t = 0; t < T; ++t) s.net_from_station[i][t] = s.station_charge[i][t] - s.station_discharge[i][t];
  }
  s.net_from_grid.resize(T);
  for (size_t t = 0; t < T; ++t) s.net_from_grid[t] = s.grid_charge[t] - s.grid_discharge[t];
  s.soc = simulate_soc(s, spec, grid);
  return s;
}

double degradation_cost(const StorageSchedule& sch, const StorageSpec& spec, const TimeGrid& grid) {
  double throughput = 0.0;
  for (size_t i = 0; i < sch.station_charge.size(); ++i) {
    for (size_t t = 0; t < sch.station_charge[i].size(); ++t) throughput += sch.station_charge[i][t] + sch.station_discharge[i][t];
  }
  for (size_t t = 0; t < sch.grid_charge.size(); ++t) throughput += sch.grid_charge[t] + sch.grid_discharge[t];
  return spec.degradation_coeff * throughput * grid.slot_hours;
}

std::vector<double> simulate_soc(const StorageSchedule& sch, const StorageSpec& spec, const TimeGrid& grid) {
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  const double dt = grid.slot_hours;
  std::vector<double> e(T + 1, spec.initial_energy);
  for (size_t t = 0; t < T; ++t) {
    double in = sch.grid_charge[t], out = sch.grid_discharge[t];
    for (size_t i = 0; i < sch.station_charge.size(); ++i) {
      in += sch.station_charge[i][t];
      out += sch.station_discharge[i][t];
    }
    e[t + 1] = e[t] - out * dt / spec.eff_discharge + in * dt * spec.eff_charge;
  }
  return e;
}

std::vector<std::string> check_storage_feasibility(const StorageSchedule& sch, const StorageSpec& spec, const TimeGrid& grid, bool cyclic,
                                                   double tol) {
  std::vector<std::string> v;
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  const std::string who = "storage '" + spec.id + "'";
  const size_t ns = spec.connected_stations.size();
  bool dims = sch.station_charge.size() == ns && sch.station_discharge.size() == ns && sch.net_from_station.size() == ns &&
              sch.grid_charge.size() == T && sch.grid_discharge.size() == T && sch.net_from_grid.size() == T && sch.soc.size() == T + 1;
  for (size_t i = 0; dims && i < ns; ++i) {
    dims = sch.station_charge[i].size() == T && sch.station_discharge[i].size() == T && sch.net_from_station[i].size() == T;
  }
  if (!dims) {
    v.push_back(who + ": schedule dimensions do not match the storage and horizon");
    return v;
  }
  auto at = [](size_t t) { return " at slot " + std::to_string(t); };
  const double dt = grid.slot_hours;
  for (size_t t = 0; t < T; ++t) {
    double in = sch.grid_charge[t], out = sch.grid_discharge[t];
    bool negative = sch.grid_charge[t] < -tol || sch.grid_discharge[t] < -tol;
    for (size_t i = 0; i < ns; ++i) {
      in += sch.station_charge[i][t];
      out += sch.station_discharge[i][t];
      negative = negative || sch.station_charge[i][t] < -tol || sch.station_discharge[i][t] < -tol;
      if (std::abs(sch.net_from_station[i][t] - (sch.station_charge[i][t] - sch.station_discharge[i][t])) > tol) {
        v.push_back(who + ": station net flow differs from charge minus discharge" + at(t));
      }
    }
    if (negative) v.push_back(who + ": negative flow component" + at(t));
    if (!spec.grid_exchange && (std::abs(sch.grid_charge[t]) > tol || std::abs(sch.grid_discharge[t]) > tol)) {
      v.push_back(who + ": grid exchange on a storage without grid access" + at(t));
    }
    if (std::abs(sch.net_from_grid[t] - (sch.grid_charge[t] - sch.grid_discharge[t])) > tol) {
      v.push_back(who + ": grid net flow differs from charge minus discharge" + at(t));
    }
    if (out > spec.power_discharge_max + tol) v.push_back(who + ": aggregate discharge limit" + at(t));
    if (in > spec.power_charge_max + tol) v.push_back(who + ": aggregate charge limit" + at(t));
    const double next = sch.soc[t] - out * dt / spec.eff_discharge + in * dt * spec.eff_charge;
    if (std::abs(sch.soc[t + 1] - next) > tol) v.push_back(who + ": energy balance" + at(t));
  }
  for (size_t t = 0; t <= T; ++t) {
    if (sch.soc[t] < spec.energy_min - tol || sch.soc[t] > spec.energy_max + tol) v.push_back(who + ": energy bounds" + at(t));
  }
  if (std::abs(sch.soc[0] - spec.initial_energy) > tol) v.push_back(who + ": initial energy differs from specification");
  if (cyclic && std::abs(sch.soc[T] - sch.soc[0]) > tol) v.push_back(who + ": final energy differs from initial energy");
  return v;
}

std::vector<Term> StorageLayout::station_net(size_t station, size_t t) const {
  return {{station_charge[station][t], 1.0}, {station_discharge[station][t], -1.0}};
}

std::vector<Term> StorageLayout::grid_net(size_t t) const {
  if (grid_charge[t] < 0) return {};
  return {{grid_charge[t], 1.0}, {grid_discharge[t], -1.0}};
}

bool storage_is_degenerate(const StorageSpec& spec) {
  return spec.capacity <= 0.0 || spec.energy_max - spec.energy_min <= 1e-9 ||
         (spec.power_charge_max <= 0.0 && spec.power_discharge_max <= 0.0);
}

StorageSchedule idle_storage_schedule(const StorageSpec& spec, const TimeGrid& grid) {
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  const size_t ns = spec.connected_stations.size();
  const std::vector<std::vector<double>> zero(ns, std::vector<double>(T, 0.0));
  return make_storage_schedule(spec, grid, zero, zero, std::vector<double>(T, 0.0), std::vector<double>(T, 0.0));
}

StorageLayout add_storage_model(ProgramBuilder& b, const StorageSpec& spec, const TimeGrid& grid, bool cyclic) {
  const int T = grid.horizon_slots;
  const double dt = grid.slot_hours;
  const size_t ns = spec.connected_stations.size();
  StorageLayout lay;
  lay.station_charge.assign(ns, std::vector<int>(static_cast<size_t>(T), -1));
  lay.station_discharge.assign(ns, std::vector<int>(static_cast<size_t>(T), -1));
  lay.grid_charge.assign(static_cast<size_t>(T), -1);
  lay.grid_discharge.assign(static_cast<size_t>(T), -1);
  lay.energy.assign(static_cast<size_t>(T + 1), -1);
  const double wear = spec.degradation_coeff * dt;

  for (int t = 0; t < T; ++t) {
    const size_t u = static_cast<size_t>(t);
    const std::string slot = "[" + std::to_string(t) + "]";
    std::vector<Term> charge_sum, discharge_sum;
    auto component = [&](const std::string& name) {
      const int k = b.add_variable(spec.id + "." + name + slot);
      b.add_lower_bound(k, 0.0);
      b.add_linear(k, wear);
      return k;
    };
    for (size_t i = 0; i < ns; ++i) {
      lay.station_charge[i][u] = component("c_" + spec.connected_stations[i]);
      lay.station_discharge[i][u] = component("d_" + spec.connected_stations[i]);
      charge_sum.push_back({lay.station_charge[i][u], 1.0});
      discharge_sum.push_back({lay.station_discharge[i][u], 1.0});
    }
    if (spec.grid_exchange) {
      lay.grid_charge[u] = component("c_grid");
      lay.grid_discharge[u] = component("d_grid");
      charge_sum.push_back({lay.grid_charge[u], 1.0});
      discharge_sum.push_back({lay.grid_discharge[u], 1.0});
    }
    b.add_inequality(discharge_sum, spec.power_discharge_max);
    b.add_inequality(charge_sum, spec.power_charge_max);

    const int e = b.add_variable(spec.id + ".E" + "[" + std::to_string(t + 1) + "]");
    lay.energy[u + 1] = e;
    const bool pinned = cyclic && t + 1 == T;
    if (!pinned) {
      b.add_lower_bound(e, spec.energy_min);
      b.add_upper_bound(e, spec.energy_max);
    }
    std::vector<Term> row{{e, 1.0}};
    for (const auto& c : charge_sum) row.push_back({c.var, -dt * spec.eff_charge});
    for (const auto& d : discharge_sum) row.push_back({d.var, dt / spec.eff_discharge});
    double rhs = 0.0;
    if (t == 0) {
      rhs = spec.initial_energy;
    } else {
      row.push_back({lay.energy[u], -1.0});
    }
    b.add_equality(row, rhs);
  }
  if (cyclic) b.add_equality({{lay.energy[static_cast<size_t>(T)], 1.0}}, spec.initial_energy);
  return lay;
}

StorageSchedule decode_storage(const StorageLayout& lay, const StorageSpec& spec, const TimeGrid& grid, const kernel::Vector& x) {
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  auto series = [&](const std::vector<int>& idx) {
    std::vector<double> out(T, 0.0);
    for (size_t t = 0; t < T; ++t) out[t] = idx[t] >= 0 ? x[idx[t]] : 0.0;
    return out;
  };
  std::vector<std::vector<double>> sc, sd;
  for (size_t i = 0; i < lay.station_charge.size(); ++i) {
    sc.push_back(series(lay.station_charge[i]));
    sd.push_back(series(lay.station_discharge[i]));
  }
  StorageSchedule s = make_storage_schedule(spec, grid, std::move(sc), std::move(sd), series(lay.grid_charge), series(lay.grid_discharge));
  // Report the levels the program actually carries.
  for (size_t t = 1; t <= T; ++t) s.soc[t] = x[lay.energy[t]];
  return s;
}

SesoProgram assemble_seso_subproblem(const StorageSpec& spec, const TimeGrid& grid, bool cyclic, const SesoInputs& in, double beta) {
  if (!(beta >= 0)) throw std::invalid_argument("penalty must be nonnegative");
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  const size_t ns = spec.connected_stations.size();
  auto check = [&](const std::vector<std::vector<double>>& m, const char* what) {
    if (m.size() != ns) throw std::invalid_argument("storage '" + spec.id + "': " + what + " must cover every connected station");
    for (const auto& r : m) {
      if (r.size() != T) throw std::invalid_argument("storage '" + spec.id + "': " + what + " length differs from horizon");
    }
  };
  check(in.lambda, "prices");
  check(in.anchor_demand, "demand anchors");
  check(in.anchor_grid, "grid anchors");
  check(in.pv, "pv profiles");
  if (in.mu.size() != T || in.anchor_grid_to_storage.size() != T) throw std::invalid_argument("storage '" + spec.id + "': grid series length differs");

  ProgramBuilder b;
  SesoProgram out;
  out.layout = add_storage_model(b, spec, grid, cyclic);
  const auto& lay = out.layout;
  for (size_t t = 0; t < T; ++t) {
    for (size_t i = 0; i < ns; ++i) {
      const auto net = lay.station_net(i, t);
      for (const auto& term : net) b.add_linear(term.var, -in.lambda[i][t] * term.coef);
      b.add_squared_affine(0.5 * beta, net, in.anchor_demand[i][t] + in.anchor_grid[i][t] - in.pv[i][t]);
    }
    const auto gnet = lay.grid_net(t);
    if (gnet.empty()) {
      b.add_constant(0.5 * beta * in.anchor_grid_to_storage[t] * in.anchor_grid_to_storage[t]);
      continue;
    }
    for (const auto& term : gnet) b.add_linear(term.var, -in.mu[t] * term.coef);
    b.add_squared_affine(0.5 * beta, gnet, in.anchor_grid_to_storage[t]);
  }
  out.program = b.build();
  return out;
}

}  // namespace evshare
