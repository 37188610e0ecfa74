#include "evshare/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace evshare {

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t t = 0; t < std::min(a.size(), b.size()); ++t) m = std::max(m, std::abs(a[t] - b[t]));
  return m;
}

std::vector<double> scaled(const std::vector<double>& v, double f) {
  std::vector<double> out(v);
  for (double& x : out) x *= f;
  return out;
}

std::vector<std::vector<double>> zeros(size_t n, size_t T) { return std::vector<std::vector<double>>(n, std::vector<double>(T, 0.0)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

kernel::Tolerances oracle_tolerances() {
  kernel::Tolerances t;
  t.feasibility = t.absolute_gap = t.relative_gap = 1e-9;
  return t;
}

kernel::ConicSolution solve_or_throw(const kernel::ConvexProgram& p, const std::string& context, const kernel::Tolerances& tol) {
  auto sol = kernel::solve(p, tol);
  if (!sol.ok()) {
    throw SolveFailure(context + ": solver returned " + kernel::to_string(sol.status) + " after " + std::to_string(sol.iterations) + " iterations",
                       sol.status);
  }
  return sol;
}

CostBreakdown system_costs(const Scenario& s, const Allocation& a) {
  CostBreakdown c;
  for (size_t i = 0; i < s.stations.size(); ++i) {
    c.station.push_back(station_cost(a.ev[i], s.stations[i].fleet, s.time));
    c.total += c.station.back();
  }
  for (size_t k = 0; k < s.storages.size(); ++k) {
    c.storage.push_back(degradation_cost(a.storages[k], s.storages[k], s.time));
    c.total += c.storage.back();
  }
  c.network = dso_energy_cost(a.flow.grid_buy, a.flow.grid_sell, s.tariff, s.time);
  c.total += c.network;
  return c;
}

CentralResult solve_centralized(const Scenario& s, const ModelOptions& opt, const kernel::Tolerances& tol) {
  const auto start = std::chrono::steady_clock::now();
  const SystemModel m = build_system_model(s, opt);
  const auto sol = solve_or_throw(m.program, "centralized problem", tol);
  CentralResult r;
  r.allocation = decode_allocation(m, s, sol.primal);
  r.prices = decode_prices(m, s, sol.eq_duals);
  r.objective = m.program.objective(sol.primal);
  r.relaxation_gap = relaxation_gap(r.allocation.flow, s.network).max_gap;
  r.iterations = sol.iterations;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

AgentCosts agent_costs(const Scenario& s, const Allocation& a, const PriceSystem& p) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const double dt = s.time.slot_hours;
  AgentCosts c;
  c.dso = dso_energy_cost(a.flow.grid_buy, a.flow.grid_sell, s.tariff, s.time);
  for (size_t i = 0; i < s.stations.size(); ++i) {
    const auto pb = station_storage_flow(s, a, static_cast<int>(i));
    double v = station_cost(a.ev[i], s.stations[i].fleet, s.time);
    for (size_t t = 0; t < T; ++t) {
      v += p.station_price[i][t] * dt * (a.flow.station_exchange[i][t] + pb[t]);
      c.dso -= p.station_price[i][t] * dt * a.flow.station_exchange[i][t];
    }
    c.cso.push_back(v);
  }
  for (size_t k = 0; k < s.storages.size(); ++k) {
    const auto& sch = a.storages[k];
    double v = degradation_cost(sch, s.storages[k], s.time);
    const auto& ids = s.storages[k].connected_stations;
    for (size_t j = 0; j < ids.size(); ++j) {
      const size_t i = static_cast<size_t>(s.station_index(ids[j]));
      for (size_t t = 0; t < T; ++t) v -= p.station_price[i][t] * dt * sch.net_from_station[j][t];
    }
    for (size_t t = 0; t < T; ++t) {
      v -= p.storage_price[k][t] * dt * sch.net_from_grid[t];
      c.dso -= p.storage_price[k][t] * dt * a.flow.storage_exchange[k][t];
    }
    c.seso.push_back(v);
  }
  return c;
}

double AgentGaps::max() const {
  double m = dso;
  for (double g : cso) m = std::max(m, g);
  for (double g : seso) m = std::max(m, g);
  return m;
}

double AgentGaps::min() const {
  double m = dso;
  for (double g : cso) m = std::min(m, g);
  for (double g : seso) m = std::min(m, g);
  return m;
}

BestResponses best_responses(const Scenario& s, const PriceSystem& p, const kernel::Tolerances& tol) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const double dt = s.time.slot_hours;
  BestResponses br;
  const std::vector<double> zero(T, 0.0);

  for (size_t i = 0; i < s.stations.size(); ++i) {
    const auto& st = s.stations[i];
    const auto lambda = scaled(p.station_price[i], dt);
    const auto prob = assemble_cso_subproblem(st, s.time, lambda, zero, zero, 0.0);
    const auto sol = solve_or_throw(prob.program, "best response of station '" + st.id + "'", tol);
    double cost = prob.program.objective(sol.primal);
    for (size_t t = 0; t < T; ++t) cost += lambda[t] * st.pv_profile[t];
    br.optimal.cso.push_back(cost);
    br.station_demand.push_back(decode_series(prob.layout.demand, sol.primal));
  }

  for (size_t k = 0; k < s.storages.size(); ++k) {
    const auto& spec = s.storages[k];
    if (storage_is_degenerate(spec)) {
      br.storages.push_back(idle_storage_schedule(spec, s.time));
      br.optimal.seso.push_back(0.0);
      continue;
    }
    SesoInputs in;
    for (const auto& id : spec.connected_stations) {
      const size_t i = static_cast<size_t>(s.station_index(id));
      in.lambda.push_back(scaled(p.station_price[i], dt));
      in.pv.push_back(s.stations[i].pv_profile);
    }
    in.mu = scaled(p.storage_price[k], dt);
    in.anchor_demand = zeros(spec.connected_stations.size(), T);
    in.anchor_grid = in.anchor_demand;
    in.anchor_grid_to_storage = zero;
    const auto prob = assemble_seso_subproblem(spec, s.time, s.storage_cyclic, in, 0.0);
    const auto sol = solve_or_throw(prob.program, "best response of storage '" + spec.id + "'", tol);
    br.optimal.seso.push_back(prob.program.objective(sol.primal));
    br.storages.push_back(decode_storage(prob.layout, spec, s.time, sol.primal));
  }

  DsoInputs in;
  for (size_t i = 0; i < s.stations.size(); ++i) in.lambda.push_back(scaled(p.station_price[i], dt));
  for (size_t k = 0; k < s.storages.size(); ++k) in.mu.push_back(scaled(p.storage_price[k], dt));
  in.anchor_demand = zeros(s.stations.size(), T);
  in.anchor_storage = in.anchor_demand;
  in.anchor_storage_grid = zeros(s.storages.size(), T);
  const auto prob = assemble_dso_subproblem(s, in, 0.0);
  const auto sol = solve_or_throw(prob.program, "best response of the network operator", tol);
  br.optimal.dso = prob.program.objective(sol.primal);
  br.flow = decode_flow(prob.layout, s, sol.primal);
  return br;
}

AgentGaps agent_best_response_gap(const Scenario& s, const Allocation& a, const PriceSystem& p) {
  const auto at = agent_costs(s, a, p);
  const auto br = best_responses(s, p);
  AgentGaps g;
  for (size_t i = 0; i < at.cso.size(); ++i) g.cso.push_back(at.cso[i] - br.optimal.cso[i]);
  for (size_t k = 0; k < at.seso.size(); ++k) g.seso.push_back(at.seso[k] - br.optimal.seso[k]);
  g.dso = at.dso - br.optimal.dso;
  return g;
}

EquilibriumReport verify_equilibrium(const Scenario& s, const Allocation& a, const PriceSystem& p, double tol, double gap_tol) {
  EquilibriumReport rep;
  const auto at = agent_costs(s, a, p);
  const auto br = best_responses(s, p);
  for (size_t i = 0; i < at.cso.size(); ++i) rep.gaps.cso.push_back(at.cso[i] - br.optimal.cso[i]);
  for (size_t k = 0; k < at.seso.size(); ++k) rep.gaps.seso.push_back(at.seso[k] - br.optimal.seso[k]);
  rep.gaps.dso = at.dso - br.optimal.dso;

  rep.coupling = coupling_residual(s, a);
  if (rep.coupling.station_balance > tol) {
    rep.mismatches.push_back("station power balance: supply and demand differ by " + fmt(rep.coupling.station_balance) + " kW");
  }
  if (rep.coupling.storage_exchange > tol) {
    rep.mismatches.push_back("storage-grid exchange: sold and bought energy differ by " + fmt(rep.coupling.storage_exchange) + " kW");
  }

  for (size_t i = 0; i < s.stations.size(); ++i) {
    const double d = max_abs_diff(a.stations[i].demand, br.station_demand[i]);
    if (d > tol) {
      rep.mismatches.push_back("station '" + s.stations[i].id + "': demand differs from its best response by " + fmt(d) + " kW");
    } else if (rep.gaps.cso[i] > gap_tol) {
      rep.mismatches.push_back("station '" + s.stations[i].id + "': leaves " + fmt(rep.gaps.cso[i]) + " $ on the table");
    }
  }

  auto judge = [&](const std::string& who, double diff, double gap) {
    if (diff <= tol && gap <= gap_tol) return;
    if (gap <= gap_tol) {
      rep.alternative_optima.push_back(who + ": trades differ from the re-solve by " + fmt(diff) + " kW at equal cost");
    } else {
      rep.mismatches.push_back(who + ": trades are not a best response (differ by " + fmt(diff) + " kW, gap " + fmt(gap) + " $)");
    }
  };
  for (size_t k = 0; k < s.storages.size(); ++k) {
    double d = max_abs_diff(a.storages[k].net_from_grid, br.storages[k].net_from_grid);
    for (size_t j = 0; j < a.storages[k].net_from_station.size(); ++j) {
      d = std::max(d, max_abs_diff(a.storages[k].net_from_station[j], br.storages[k].net_from_station[j]));
    }
    judge("storage '" + s.storages[k].id + "'", d, rep.gaps.seso[k]);
  }
  double d = 0.0;
  for (size_t i = 0; i < s.stations.size(); ++i) d = std::max(d, max_abs_diff(a.flow.station_exchange[i], br.flow.station_exchange[i]));
  for (size_t k = 0; k < s.storages.size(); ++k) d = std::max(d, max_abs_diff(a.flow.storage_exchange[k], br.flow.storage_exchange[k]));
  judge("network operator", d, rep.gaps.dso);
  return rep;
}

ProfitAllocation profit_allocation(const Scenario& s, const Allocation& a, const PriceSystem& p) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const double dt = s.time.slot_hours;
  const size_t ni = s.stations.size(), nb = s.storages.size();
  const size_t g = ni + nb;
  ProfitAllocation r;
  for (const auto& st : s.stations) r.parties.push_back(st.id);
  for (const auto& sto : s.storages) r.parties.push_back(sto.id);
  r.parties.push_back("DSO");
  r.payments = zeros(g + 1, g + 1);

  const auto own = system_costs(s, a);
  r.station_own = own.station;
  r.storage_own = own.storage;
  r.network_own = own.network;

  for (size_t i = 0; i < ni; ++i) {
    const auto pb = station_storage_flow(s, a, static_cast<int>(i));
    double to_grid = 0.0, to_storage = 0.0;
    for (size_t t = 0; t < T; ++t) {
      to_grid += p.station_price[i][t] * dt * a.flow.station_exchange[i][t];
      to_storage += p.station_price[i][t] * dt * pb[t];
    }
    r.payments[i][g] = to_grid;
    r.payments[g][i] = -to_grid;
    const int k = s.storage_of_station(static_cast<int>(i));
    if (k >= 0) {
      r.payments[i][ni + static_cast<size_t>(k)] = to_storage;
      r.payments[ni + static_cast<size_t>(k)][i] = -to_storage;
    }
  }
  for (size_t k = 0; k < nb; ++k) {
    double v = 0.0;
    for (size_t t = 0; t < T; ++t) v -= p.storage_price[k][t] * dt * a.storages[k].net_from_grid[t];
    r.payments[ni + k][g] = v;
    r.payments[g][ni + k] = -v;
  }

  auto row_sum = [&](size_t x) {
    double v = 0.0;
    for (double c : r.payments[x]) v += c;
    return v;
  };
  for (size_t i = 0; i < ni; ++i) r.cso.push_back(r.station_own[i] + row_sum(i));
  for (size_t k = 0; k < nb; ++k) r.seso.push_back(r.storage_own[k] + row_sum(ni + k));
  r.dso = r.network_own + row_sum(g);
  r.total = r.dso;
  for (double c : r.cso) r.total += c;
  for (double c : r.seso) r.total += c;
  return r;
}

}  // namespace evshare
