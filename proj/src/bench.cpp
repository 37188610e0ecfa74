#include "evshare/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evshare {

std::string to_string(VariantKind k) {
  switch (k) {
    case VariantKind::b1_no_storage: return "b1";
    case VariantKind::b2_individual_storage: return "b2";
    case VariantKind::b3_inelastic: return "b3";
    case VariantKind::proposed: return "proposed";
  }
  return "unknown";
}

VariantKind parse_variant(const std::string& name) {
  if (name == "b1") return VariantKind::b1_no_storage;
  if (name == "b2") return VariantKind::b2_individual_storage;
  if (name == "b3") return VariantKind::b3_inelastic;
  if (name == "proposed") return VariantKind::proposed;
  throw std::invalid_argument("unknown variant '" + name + "' (expected b1, b2, b3 or proposed)");
}

Coefficient parse_coefficient(const std::string& name) {
  if (name == "bat") return Coefficient::storage_degradation;
  if (name == "ev") return Coefficient::ev_inconvenience;
  throw std::invalid_argument("unknown coefficient '" + name + "' (expected bat or ev)");
}

Scenario variant_scenario(const Scenario& s, const BenchmarkVariant& v) {
  Scenario out = s;
  if (v.storage_cyclic) out.storage_cyclic = *v.storage_cyclic;
  if (v.kind == VariantKind::b1_no_storage) {
    out.storages.clear();
  } else if (v.kind == VariantKind::b2_individual_storage) {
    out.storages.clear();
    for (const auto& b : s.storages) {
      const size_t n = b.connected_stations.size();
      std::vector<double> split = v.split;
      if (split.empty()) split.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
      if (split.size() != n) throw std::invalid_argument("storage '" + b.id + "': one split fraction per connected station required");
      const double sum = std::accumulate(split.begin(), split.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("storage '" + b.id + "': split fractions must sum to 1");
      for (size_t j = 0; j < n; ++j) {
        StorageSpec part = b;
        const double f = split[j];
        part.id = b.id + "_" + b.connected_stations[j];
        part.connected_stations = {b.connected_stations[j]};
        part.capacity *= f;
        part.energy_min *= f;
        part.energy_max *= f;
        part.power_charge_max *= f;
        part.power_discharge_max *= f;
        part.initial_energy *= f;
        part.grid_exchange = false;
        out.storages.push_back(std::move(part));
      }
    }
  }
  return out;
}

namespace {

void fill_costs(ExperimentResult& r, const Scenario& vs, const Allocation& a, const PriceSystem& p, bool fold_storage_into_station) {
  const auto pa = profit_allocation(vs, a, p);
  for (const auto& st : vs.stations) r.station_ids.push_back(st.id);
  r.cso = pa.cso;
  r.dso = pa.dso;
  if (fold_storage_into_station) {
    // Individual storages belong to their station's operator.
    for (size_t k = 0; k < vs.storages.size(); ++k) {
      for (int i : vs.stations_of_storage(static_cast<int>(k))) r.cso[static_cast<size_t>(i)] += pa.seso[k];
    }
  } else {
    for (const auto& b : vs.storages) r.storage_ids.push_back(b.id);
    r.seso = pa.seso;
  }
  r.total = pa.total;
}

}  // namespace

ExperimentResult run_benchmark(const Scenario& s, const BenchmarkVariant& v, std::optional<double> b1_total) {
  const Scenario vs = variant_scenario(s, v);
  ExperimentResult r;
  r.variant = to_string(v.kind);
  const auto t0 = std::chrono::steady_clock::now();
  if (v.kind == VariantKind::proposed && v.distributed) {
    r.variant = "proposed_distributed";
    auto c = run_coordination(vs, v.params);
    r.iterations = c.iterations;
    r.converged = c.converged();
    r.allocation = c.allocation;
    r.prices = c.prices;
    r.relaxation_gap = relaxation_gap(c.allocation.flow, vs.network).max_gap;
    fill_costs(r, vs, r.allocation, r.prices, false);
    // Stakeholder costs add up to the system cost only on balanced trades;
    // report the system cost of the schedules themselves.
    r.total = system_costs(vs, r.allocation).total;
    r.coordination = std::move(c);
  } else {
    ModelOptions opt;
    opt.fix_casap_demand = v.kind == VariantKind::b3_inelastic;
    auto c = solve_centralized(vs, opt);
    r.iterations = c.iterations;
    r.allocation = std::move(c.allocation);
    r.prices = std::move(c.prices);
    r.relaxation_gap = c.relaxation_gap;
    fill_costs(r, vs, r.allocation, r.prices, v.kind == VariantKind::b2_individual_storage);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (b1_total && *b1_total != 0.0) r.reduction = (*b1_total - r.total) / *b1_total;
  return r;
}

Scenario scale_storage(const Scenario& s, double m) {
  if (!(m >= 0)) throw std::invalid_argument("capacity multiplier must be nonnegative");
  Scenario out = s;
  for (auto& b : out.storages) {
    b.capacity *= m;
    b.energy_min = 0.1 * b.capacity;
    b.energy_max = 0.9 * b.capacity;
    b.power_charge_max = 0.3 * b.capacity;
    b.power_discharge_max = 0.3 * b.capacity;
    b.initial_energy = 0.5 * b.capacity;
  }
  return out;
}

namespace {

double throughput(const Scenario& s, const Allocation& a) {
  double e = 0.0;
  for (size_t k = 0; k < a.storages.size(); ++k) {
    const auto& sch = a.storages[k];
    for (size_t t = 0; t < static_cast<size_t>(s.time.horizon_slots); ++t) {
      for (size_t j = 0; j < sch.station_charge.size(); ++j) e += (sch.station_charge[j][t] + sch.station_discharge[j][t]) * s.time.slot_hours;
      if (!sch.grid_charge.empty()) e += (sch.grid_charge[t] + sch.grid_discharge[t]) * s.time.slot_hours;
    }
  }
  return e;
}

std::vector<SweepRow> sweep_cells(const std::vector<std::pair<double, Scenario>>& cells, const std::vector<VariantKind>& variants) {
  std::vector<SweepRow> rows;
  for (const auto& [value, sc] : cells) {
    std::optional<double> b1;
    for (VariantKind k : variants) {
      BenchmarkVariant v;
      v.kind = k;
      SweepRow row;
      row.value = value;
      row.variant = to_string(k);
      row.result = run_benchmark(sc, v, b1);
      if (k == VariantKind::b1_no_storage) b1 = row.result.total;
      row.storage_throughput = throughput(variant_scenario(sc, v), row.result.allocation);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> capacity_sweep(const Scenario& s, const std::vector<double>& multipliers, const std::vector<VariantKind>& variants) {
  if (!std::is_sorted(multipliers.begin(), multipliers.end())) throw std::invalid_argument("capacity multipliers must be ascending");
  std::vector<std::pair<double, Scenario>> cells;
  for (double m : multipliers) cells.emplace_back(m, scale_storage(s, m));
  return sweep_cells(cells, variants);
}

std::vector<SweepRow> coefficient_sweep(const Scenario& s, Coefficient which, const std::vector<double>& values,
                                        const std::vector<VariantKind>& variants) {
  std::vector<std::pair<double, Scenario>> cells;
  for (double c : values) {
    if (!(c > 0)) throw std::invalid_argument("coefficient values must be positive");
    Scenario sc = s;
    if (which == Coefficient::storage_degradation) {
      for (auto& b : sc.storages) b.degradation_coeff = c;
    } else {
      for (auto& st : sc.stations)
        for (auto& ev : st.fleet) ev.inconvenience_coeff = c;
    }
    cells.emplace_back(c, std::move(sc));
  }
  return sweep_cells(cells, variants);
}

ScalabilityRow scalability_run(const ScaleTemplate& t, int groups, const CoordinationParams& params) {
  const Scenario s = scale_scenario(t, groups);
  ScalabilityRow row;
  row.groups = groups;
  row.stations = static_cast<int>(s.stations.size());
  row.storages = static_cast<int>(s.storages.size());
  row.evs = s.total_evs();
  const auto c = run_coordination(s, params);
  row.iterations = c.iterations;
  row.converged = c.converged();
  row.wall_seconds = c.wall_seconds;
  row.mean_cso_seconds = c.cso_solves ? c.cso_seconds / c.cso_solves : 0.0;
  row.mean_seso_seconds = c.seso_solves ? c.seso_seconds / c.seso_solves : 0.0;
  row.mean_dso_seconds = c.dso_solves ? c.dso_seconds / c.dso_solves : 0.0;
  row.total_cost = system_costs(s, c.allocation).total;
  return row;
}

}  // namespace evshare
