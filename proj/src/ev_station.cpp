#include "evshare/ev_station.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evshare {

using kernel::ProgramBuilder;
using kernel::Term;

double min_charge_time(const EvTask& task) {
  return std::max(0.0, task.required_energy - task.initial_energy) / (task.power_max * task.eff_charge);
}

namespace {

struct CasapShape {
  int full_slots = 0;
  double remainder = 0.0;  // kW in slot arrival + full_slots
  bool fits = true;
};

CasapShape casap_shape(const EvTask& task, const TimeGrid& grid) {
  CasapShape c;
  const double dt = grid.slot_hours;
  const double energy = std::max(0.0, task.required_energy - task.initial_energy);
  c.full_slots = static_cast<int>(std::floor(min_charge_time(task) / dt + 1e-9));
  c.remainder = energy / (task.eff_charge * dt) - c.full_slots * task.power_max;
  if (c.remainder < 1e-9 * task.power_max) c.remainder = 0.0;
  const int last_full = task.arrival_slot + c.full_slots;  // one past the last full slot
  c.fits = last_full <= task.departure_slot && (c.remainder == 0.0 || last_full < task.departure_slot);
  return c;
}

}  // namespace

bool casap_fits(const EvTask& task, const TimeGrid& grid) { return casap_shape(task, grid).fits; }

std::vector<double> casap_profile(const EvTask& task, const TimeGrid& grid) {
  const CasapShape c = casap_shape(task, grid);
  if (!c.fits) throw std::domain_error("ev '" + task.id + "': charge-as-soon-as-possible profile extends past departure");
  std::vector<double> p(static_cast<size_t>(grid.horizon_slots), 0.0);
  for (int k = 0; k < c.full_slots; ++k) p[static_cast<size_t>(task.arrival_slot + k)] = task.power_max;
  if (c.remainder > 0.0) p[static_cast<size_t>(task.arrival_slot + c.full_slots)] = c.remainder;
  return p;
}

EvSchedule make_schedule(const EvTask& task, const TimeGrid& grid, std::vector<double> charge, std::vector<double> discharge) {
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  if (charge.size() != T || discharge.size() != T) throw std::invalid_argument("schedule length differs from horizon");
  EvSchedule s;
  s.net_power.resize(T);
  s.energy.assign(T + 1, task.initial_energy);
  const double dt = grid.slot_hours;
  for (size_t t = 0; t < T; ++t) {
    s.net_power[t] = charge[t] - discharge[t];
    s.energy[t + 1] = s.energy[t] + charge[t] * dt * task.eff_charge - discharge[t] * dt / task.eff_discharge;
  }
  s.charge_power = std::move(charge);
  s.discharge_power = std::move(discharge);
  return s;
}

std::vector<std::string> check_ev_feasibility(const EvSchedule& sch, const EvTask& task, const TimeGrid& grid, double tol) {
  std::vector<std::string> v;
  const int T = grid.horizon_slots;
  const std::string who = "ev '" + task.id + "'";
  if (sch.charge_power.size() != static_cast<size_t>(T) || sch.discharge_power.size() != static_cast<size_t>(T) ||
      sch.net_power.size() != static_cast<size_t>(T) || sch.energy.size() != static_cast<size_t>(T + 1)) {
    v.push_back(who + ": schedule dimensions do not match the horizon");
    return v;
  }
  auto at = [](int t) { return " at slot " + std::to_string(t); };
  const double dt = grid.slot_hours;
  for (int t = 0; t < T; ++t) {
    const size_t u = static_cast<size_t>(t);
    const double c = sch.charge_power[u], d = sch.discharge_power[u];
    const bool parked = t >= task.arrival_slot && t < task.departure_slot;
    if (!parked && (std::abs(c) > tol || std::abs(d) > tol)) {
      v.push_back(who + ": power outside the parking window" + at(t));
    }
    if (c < -tol || c > task.power_max + tol) v.push_back(who + ": charging power limit" + at(t));
    if (d < -tol || d > task.power_max + tol) v.push_back(who + ": discharging power limit" + at(t));
    if (std::abs(sch.net_power[u] - (c - d)) > tol) v.push_back(who + ": net power differs from charge minus discharge" + at(t));
    const double next = sch.energy[u] + c * dt * task.eff_charge - d * dt / task.eff_discharge;
    if (std::abs(sch.energy[u + 1] - next) > tol) v.push_back(who + ": energy balance" + at(t));
  }
  for (int t = task.arrival_slot; t <= task.departure_slot; ++t) {
    const double e = sch.energy[static_cast<size_t>(t)];
    if (e < task.energy_min - tol || e > task.energy_max + tol) v.push_back(who + ": energy bounds" + at(t));
  }
  if (std::abs(sch.energy[static_cast<size_t>(task.arrival_slot)] - task.initial_energy) > tol) {
    v.push_back(who + ": energy at arrival differs from the initial energy");
  }
  if (std::abs(sch.energy[static_cast<size_t>(task.departure_slot)] - task.required_energy) > tol) {
    v.push_back(who + ": energy at departure differs from the required energy");
  }
  return v;
}

double ev_cost(const EvSchedule& sch, const EvTask& task, const TimeGrid& grid) {
  const std::vector<double> desired = casap_profile(task, grid);
  const double dt = grid.slot_hours;
  double cost = 0.0;
  for (size_t t = 0; t < desired.size(); ++t) {
    const double dev = (sch.net_power[t] - desired[t]) * dt;
    cost += task.inconvenience_coeff * dev * dev;
    cost += task.depreciation_coeff * (sch.charge_power[t] + sch.discharge_power[t]) * dt;
  }
  return cost;
}

double station_cost(const std::vector<EvSchedule>& schedules, const std::vector<EvTask>& tasks, const TimeGrid& grid) {
  if (schedules.size() != tasks.size()) throw std::invalid_argument("station_cost: one schedule per task required");
  double cost = 0.0;
  for (size_t v = 0; v < tasks.size(); ++v) cost += ev_cost(schedules[v], tasks[v], grid);
  return cost;
}

std::vector<double> aggregate_demand(const std::vector<EvSchedule>& schedules, int horizon_slots) {
  std::vector<double> d(static_cast<size_t>(horizon_slots), 0.0);
  for (const auto& s : schedules) {
    if (s.net_power.size() != d.size()) throw std::invalid_argument("aggregate_demand: unequal schedule lengths");
    for (size_t t = 0; t < d.size(); ++t) d[t] += s.net_power[t];
  }
  return d;
}

StationLayout add_station_model(ProgramBuilder& b, const StationSpec& st, const TimeGrid& grid) {
  const int T = grid.horizon_slots;
  const double dt = grid.slot_hours;
  StationLayout lay;
  const size_t nv = st.fleet.size();
  lay.charge.assign(nv, std::vector<int>(static_cast<size_t>(T), -1));
  lay.discharge.assign(nv, std::vector<int>(static_cast<size_t>(T), -1));
  lay.energy.assign(nv, std::vector<int>(static_cast<size_t>(T + 1), -1));

  for (size_t v = 0; v < nv; ++v) {
    const EvTask& ev = st.fleet[v];
    const std::string base = st.id + "." + ev.id;
    const std::vector<double> desired = casap_profile(ev, grid);
    for (int t = ev.arrival_slot; t < ev.departure_slot; ++t) {
      const size_t u = static_cast<size_t>(t);
      const int pc = b.add_variable(base + ".pc[" + std::to_string(t) + "]");
      const int pd = b.add_variable(base + ".pd[" + std::to_string(t) + "]");
      const int e = b.add_variable(base + ".E[" + std::to_string(t + 1) + "]");
      lay.charge[v][u] = pc;
      lay.discharge[v][u] = pd;
      lay.energy[v][u + 1] = e;
      b.add_lower_bound(pc, 0.0);
      b.add_upper_bound(pc, ev.power_max);
      b.add_lower_bound(pd, 0.0);
      b.add_upper_bound(pd, ev.power_max);
      // The departure level is pinned by an equality; bounding it too would
      // leave no interior when the requirement sits on a bound.
      if (t + 1 < ev.departure_slot) {
        b.add_lower_bound(e, ev.energy_min);
        b.add_upper_bound(e, ev.energy_max);
      }
      b.add_squared_affine(ev.inconvenience_coeff * dt * dt, {{pc, 1.0}, {pd, -1.0}}, -desired[u]);
      b.add_linear(pc, ev.depreciation_coeff * dt);
      b.add_linear(pd, ev.depreciation_coeff * dt);
    }
    for (int t = ev.arrival_slot; t < ev.departure_slot; ++t) {
      const size_t u = static_cast<size_t>(t);
      std::vector<Term> row{{lay.energy[v][u + 1], 1.0}, {lay.charge[v][u], -dt * ev.eff_charge}, {lay.discharge[v][u], dt / ev.eff_discharge}};
      double rhs = 0.0;
      if (t == ev.arrival_slot) {
        rhs = ev.initial_energy;
      } else {
        row.push_back({lay.energy[v][u], -1.0});
      }
      b.add_equality(row, rhs);
    }
    b.add_equality({{lay.energy[v][static_cast<size_t>(ev.departure_slot)], 1.0}}, ev.required_energy);
  }

  lay.demand.resize(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const size_t u = static_cast<size_t>(t);
    const int pdem = b.add_variable(st.id + ".p_d[" + std::to_string(t) + "]");
    lay.demand[u] = pdem;
    std::vector<Term> row{{pdem, 1.0}};
    for (size_t v = 0; v < nv; ++v) {
      if (lay.charge[v][u] < 0) continue;
      row.push_back({lay.charge[v][u], -1.0});
      row.push_back({lay.discharge[v][u], 1.0});
    }
    b.add_equality(row, 0.0);
  }
  return lay;
}

std::vector<double> decode_series(const std::vector<int>& idx, const kernel::Vector& x) {
  std::vector<double> out(idx.size(), 0.0);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= 0) out[i] = x[idx[i]];
  }
  return out;
}

std::vector<EvSchedule> decode_fleet(const StationLayout& lay, const StationSpec& st, const TimeGrid& grid, const kernel::Vector& x) {
  std::vector<EvSchedule> out;
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  for (size_t v = 0; v < st.fleet.size(); ++v) {
    const EvTask& ev = st.fleet[v];
    EvSchedule s;
    s.charge_power = decode_series(lay.charge[v], x);
    s.discharge_power = decode_series(lay.discharge[v], x);
    s.net_power.resize(T);
    for (size_t t = 0; t < T; ++t) s.net_power[t] = s.charge_power[t] - s.discharge_power[t];
    s.energy.assign(T + 1, ev.initial_energy);
    for (size_t t = 1; t <= T; ++t) {
      s.energy[t] = lay.energy[v][t] >= 0 ? x[lay.energy[v][t]] : s.energy[t - 1];
    }
    out.push_back(std::move(s));
  }
  return out;
}

CsoProgram assemble_cso_subproblem(const StationSpec& st, const TimeGrid& grid, const std::vector<double>& lambda,
                                   const std::vector<double>& anchor_grid, const std::vector<double>& anchor_storage, double beta) {
  if (!(beta >= 0)) throw std::invalid_argument("penalty must be nonnegative");
  const size_t T = static_cast<size_t>(grid.horizon_slots);
  if (lambda.size() != T || anchor_grid.size() != T || anchor_storage.size() != T) {
    throw std::invalid_argument("station '" + st.id + "': price or anchor length differs from horizon");
  }
  ProgramBuilder b;
  CsoProgram out;
  out.layout = add_station_model(b, st, grid);
  for (size_t t = 0; t < T; ++t) {
    const int pd = out.layout.demand[t];
    b.add_linear(pd, -lambda[t]);
    b.add_squared_affine(0.5 * beta, {{pd, 1.0}}, anchor_grid[t] + anchor_storage[t] - st.pv_profile[t]);
  }
  out.program = b.build();
  return out;
}

}  // namespace evshare
