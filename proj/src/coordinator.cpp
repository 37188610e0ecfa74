#include "evshare/coordinator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace evshare {

namespace {

using Grid = std::vector<std::vector<double>>;
using Clock = std::chrono::steady_clock;

Grid zeros(size_t n, size_t T) { return Grid(n, std::vector<double>(T, 0.0)); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double distance(const Grid& a, const Grid& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t t = 0; t < a[i].size(); ++t) s += (a[i][t] - b[i][t]) * (a[i][t] - b[i][t]);
  return std::sqrt(s);
}

// Position of a station inside its storage's connection list.
size_t slot_in_storage(const Scenario& s, int storage, const std::string& station) {
  const auto& ids = s.storages[static_cast<size_t>(storage)].connected_stations;
  return static_cast<size_t>(std::find(ids.begin(), ids.end(), station) - ids.begin());
}

bool grid_access(const StorageSpec& b) { return b.grid_exchange && !storage_is_degenerate(b); }

}  // namespace

std::string to_string(DualVariant v) { return v == DualVariant::main_text ? "main_text" : "appendix"; }

DualVariant parse_dual_variant(const std::string& name) {
  if (name == "main" || name == "main_text") return DualVariant::main_text;
  if (name == "appendix") return DualVariant::appendix;
  throw std::invalid_argument("unknown dual variant '" + name + "' (expected main or appendix)");
}

std::string to_string(CoordinationStatus s) {
  switch (s) {
    case CoordinationStatus::converged: return "converged";
    case CoordinationStatus::max_iter: return "max_iter";
    case CoordinationStatus::diverged: return "diverged";
  }
  return "unknown";
}

ConditionA1 check_condition_a1(double alpha, double tau) {
  ConditionA1 c;
  const double a = alpha, t = tau;
  c.matrix << 2 - 2 * a - a * t, 1 - a - a * t, -1 + a,  //
      1 - a - a * t, 2 - 2 * a, -1 + a,                  //
      -1 + a, -1 + a, 2 - a;
  c.minors[0] = c.matrix(0, 0);
  c.minors[1] = c.matrix.topLeftCorner<2, 2>().determinant();
  c.minors[2] = c.matrix.determinant();
  c.holds = c.minors[0] > 0 && c.minors[1] > 0 && c.minors[2] > 0;
  c.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(c.matrix, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return c;
}

CorrectionMatrices build_correction_matrices(double alpha, double tau, double beta) {
  if (!(beta > 0)) throw std::invalid_argument("penalty must be positive");
  if (!(tau >= 0 && tau <= 1)) throw std::invalid_argument("blend must lie in [0, 1]");
  CorrectionMatrices m;
  m.M << 1, -(1 - tau), 0,  //
      tau, 1, 0,            //
      -beta, -beta, 1;
  m.Q << beta, 0, 0,  //
      beta, beta, 0,  //
      -1, -1, 1 / beta;
  const double d = 1 + tau * (1 - tau);
  const double h1 = beta / d, h2 = beta * (1 - tau) / d, h4 = beta * (2 - tau) / d, h5 = 1 / beta;
  m.H << h1, h2, 0,  //
      h2, h4, 0,     //
      0, 0, h5;
  m.G = m.Q.transpose() + m.Q - alpha * m.M.transpose() * m.H * m.M;
  return m;
}

CoordinationState zero_state(const Scenario& s) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const size_t ni = s.stations.size(), nb = s.storages.size();
  CoordinationState st;
  st.demand = st.to_grid = st.to_storage = st.lambda = zeros(ni, T);
  st.storage_from_grid = st.grid_from_storage = st.mu = zeros(nb, T);
  for (size_t i = 0; i < ni; ++i) {
    const int k = s.storage_of_station(static_cast<int>(i));
    st.station_has_storage.push_back(k >= 0 && !storage_is_degenerate(s.storages[static_cast<size_t>(k)]));
  }
  for (const auto& b : s.storages) st.storage_has_grid.push_back(grid_access(b));
  return st;
}

CoordinationState state_from(const Scenario& s, const Allocation& a, const PriceSystem& p) {
  CoordinationState st = zero_state(s);
  const double dt = s.time.slot_hours;
  for (size_t i = 0; i < s.stations.size(); ++i) {
    st.demand[i] = a.stations[i].demand;
    st.to_grid[i] = a.flow.station_exchange[i];
    st.to_storage[i] = station_storage_flow(s, a, static_cast<int>(i));
    for (size_t t = 0; t < st.lambda[i].size(); ++t) st.lambda[i][t] = p.station_price[i][t] * dt;
  }
  for (size_t k = 0; k < s.storages.size(); ++k) {
    st.storage_from_grid[k] = a.storages[k].net_from_grid;
    st.grid_from_storage[k] = a.flow.storage_exchange[k];
    for (size_t t = 0; t < st.mu[k].size(); ++t) st.mu[k][t] = p.storage_price[k][t] * dt;
  }
  return st;
}

PriceSystem prices_of(const Scenario& s, const CoordinationState& st) {
  PriceSystem p;
  const double dt = s.time.slot_hours;
  p.station_price = st.lambda;
  p.storage_price = st.mu;
  for (auto& row : p.station_price)
    for (double& v : row) v /= dt;
  for (auto& row : p.storage_price)
    for (double& v : row) v /= dt;
  return p;
}

Prediction prediction_step(const Scenario& s, const CoordinationState& state, double beta, const kernel::Tolerances& tol) {
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const size_t ni = s.stations.size(), nb = s.storages.size();
  const std::string at = "iteration " + std::to_string(state.k) + ": ";
  Prediction out;
  CoordinationState& tl = out.tilde;
  tl = zero_state(s);
  tl.k = state.k;
  Allocation& a = out.allocation;

  // Stations, with last iterate's exchanges as anchors.
  for (size_t i = 0; i < ni; ++i) {
    const auto& st = s.stations[i];
    const auto t0 = Clock::now();
    const auto prob = assemble_cso_subproblem(st, s.time, state.lambda[i], state.to_grid[i], state.to_storage[i], beta);
    const auto sol = solve_or_throw(prob.program, at + "station '" + st.id + "'", tol);
    out.cso_seconds.push_back(seconds_since(t0));
    a.ev.push_back(decode_fleet(prob.layout, st, s.time, sol.primal));
    tl.demand[i] = decode_series(prob.layout.demand, sol.primal);
  }

  // Storages see the fresh station demand.
  for (size_t k = 0; k < nb; ++k) {
    const auto& spec = s.storages[k];
    if (storage_is_degenerate(spec)) {
      a.storages.push_back(idle_storage_schedule(spec, s.time));
      out.seso_seconds.push_back(0.0);
      continue;
    }
    SesoInputs in;
    for (const auto& id : spec.connected_stations) {
      const size_t i = static_cast<size_t>(s.station_index(id));
      in.lambda.push_back(state.lambda[i]);
      in.anchor_demand.push_back(tl.demand[i]);
      in.anchor_grid.push_back(state.to_grid[i]);
      in.pv.push_back(s.stations[i].pv_profile);
    }
    in.mu = state.mu[k];
    in.anchor_grid_to_storage = state.grid_from_storage[k];
    const auto t0 = Clock::now();
    const auto prob = assemble_seso_subproblem(spec, s.time, s.storage_cyclic, in, beta);
    const auto sol = solve_or_throw(prob.program, at + "storage '" + spec.id + "'", tol);
    out.seso_seconds.push_back(seconds_since(t0));
    a.storages.push_back(decode_storage(prob.layout, spec, s.time, sol.primal));
    if (grid_access(spec)) tl.storage_from_grid[k] = a.storages.back().net_from_grid;
  }
  for (size_t i = 0; i < ni; ++i) {
    const int k = s.storage_of_station(static_cast<int>(i));
    if (k >= 0) tl.to_storage[i] = a.storages[static_cast<size_t>(k)].net_from_station[slot_in_storage(s, k, s.stations[i].id)];
  }

  // Network operator sees fresh demand and storage trades.
  DsoInputs in;
  in.lambda = state.lambda;
  in.mu = state.mu;
  in.anchor_demand = tl.demand;
  in.anchor_storage = tl.to_storage;
  in.anchor_storage_grid = tl.storage_from_grid;
  const auto t0 = Clock::now();
  const auto prob = assemble_dso_subproblem(s, in, beta);
  const auto sol = solve_or_throw(prob.program, at + "network operator", tol);
  out.dso_seconds = seconds_since(t0);
  a.flow = decode_flow(prob.layout, s, sol.primal);
  tl.to_grid = a.flow.station_exchange;
  tl.grid_from_storage = a.flow.storage_exchange;

  out.lagged_lambda = zeros(ni, T);
  out.lagged_mu = zeros(nb, T);
  for (size_t i = 0; i < ni; ++i) {
    StationState ss;
    ss.demand = tl.demand[i];
    ss.to_grid = tl.to_grid[i];
    ss.to_storage = tl.to_storage[i];
    a.stations.push_back(std::move(ss));
    for (size_t t = 0; t < T; ++t) {
      const double r = tl.demand[i][t] + tl.to_grid[i][t] + tl.to_storage[i][t] - s.stations[i].pv_profile[t];
      tl.lambda[i][t] = state.lambda[i][t] - beta * r;
      const double r_lag = tl.demand[i][t] + state.to_grid[i][t] + state.to_storage[i][t] - s.stations[i].pv_profile[t];
      out.lagged_lambda[i][t] = state.lambda[i][t] - beta * r_lag;
    }
  }
  for (size_t k = 0; k < nb; ++k) {
    for (size_t t = 0; t < T; ++t) {
      tl.mu[k][t] = state.mu[k][t] - beta * (tl.grid_from_storage[k][t] + tl.storage_from_grid[k][t]);
      out.lagged_mu[k][t] = state.mu[k][t] - beta * (state.grid_from_storage[k][t] + state.storage_from_grid[k][t]);
    }
  }
  return out;
}

CoordinationState correction_step(const CoordinationState& state, const CoordinationState& tilde, const CoordinationParams& params) {
  const double a = params.alpha, tau = params.tau, beta = params.beta;
  const bool appendix = params.dual_variant == DualVariant::appendix;
  CoordinationState next = state;
  next.k = state.k + 1;
  next.demand = tilde.demand;

  for (size_t i = 0; i < state.to_grid.size(); ++i) {
    const bool has_b = state.station_has_storage[i];
    for (size_t t = 0; t < state.to_grid[i].size(); ++t) {
      const double dy = has_b ? state.to_storage[i][t] - tilde.to_storage[i][t] : 0.0;
      const double dz = state.to_grid[i][t] - tilde.to_grid[i][t];
      if (has_b) next.to_storage[i][t] = state.to_storage[i][t] - a * (dy - (1 - tau) * dz);
      next.to_grid[i][t] = state.to_grid[i][t] - a * (dz + tau * dy);
      next.lambda[i][t] = state.lambda[i][t] - a * (state.lambda[i][t] - tilde.lambda[i][t]);
      if (appendix) next.lambda[i][t] += a * beta * (dy + dz);
    }
  }
  for (size_t k = 0; k < state.mu.size(); ++k) {
    const bool has_g = state.storage_has_grid[k];
    for (size_t t = 0; t < state.mu[k].size(); ++t) {
      const double dy = has_g ? state.storage_from_grid[k][t] - tilde.storage_from_grid[k][t] : 0.0;
      const double dz = has_g ? state.grid_from_storage[k][t] - tilde.grid_from_storage[k][t] : 0.0;
      if (has_g) {
        next.storage_from_grid[k][t] = state.storage_from_grid[k][t] - a * (dy - (1 - tau) * dz);
        next.grid_from_storage[k][t] = state.grid_from_storage[k][t] - a * (dz + tau * dy);
      }
      next.mu[k][t] = state.mu[k][t] - a * (state.mu[k][t] - tilde.mu[k][t]);
      if (appendix) next.mu[k][t] += a * beta * (dy + dz);
    }
  }
  return next;
}

CoordinationResult run_coordination(const Scenario& s, const CoordinationParams& params) {
  return run_coordination(s, params, zero_state(s));
}

CoordinationResult run_coordination(const Scenario& s, const CoordinationParams& params, CoordinationState state) {
  if (!(params.alpha > 0 && params.alpha <= 1)) throw std::invalid_argument("step alpha must lie in (0, 1]");
  if (!(params.tau >= 0 && params.tau <= 1)) throw std::invalid_argument("blend tau must lie in [0, 1]");
  if (!(params.beta > 0)) throw std::invalid_argument("penalty beta must be positive");
  if (!(params.delta > 0)) throw std::invalid_argument("tolerance delta must be positive");
  if (params.max_iterations < 1) throw std::invalid_argument("at least one iteration is required");
  if (!check_condition_a1(params.alpha, params.tau).holds) {
    throw std::invalid_argument("condition A1 fails for alpha=" + std::to_string(params.alpha) + ", tau=" + std::to_string(params.tau));
  }

  const auto start = Clock::now();
  CoordinationResult res;
  for (int it = 0; it < params.max_iterations; ++it) {
    Prediction pred = prediction_step(s, state, params.beta, params.tol);
    for (double v : pred.cso_seconds) res.cso_seconds += v;
    for (double v : pred.seso_seconds) res.seso_seconds += v;
    res.dso_seconds += pred.dso_seconds;
    res.cso_solves += static_cast<int>(pred.cso_seconds.size());
    for (size_t k = 0; k < s.storages.size(); ++k) res.seso_solves += storage_is_degenerate(s.storages[k]) ? 0 : 1;
    res.dso_solves += 1;

    if (params.dual_variant == DualVariant::appendix) {
      pred.tilde.lambda = pred.lagged_lambda;
      pred.tilde.mu = pred.lagged_mu;
    }
    CoordinationState next = correction_step(state, pred.tilde, params);

    TraceRow row;
    row.k = next.k;
    row.lambda_gap = distance(next.lambda, state.lambda);
    row.mu_gap = distance(next.mu, state.mu);
    row.primal_gap = params.beta * std::hypot(std::hypot(distance(next.to_grid, state.to_grid), distance(next.to_storage, state.to_storage)),
                                              std::hypot(distance(next.storage_from_grid, state.storage_from_grid),
                                                         distance(next.grid_from_storage, state.grid_from_storage)));
    res.prices = prices_of(s, next);
    const AgentCosts costs = agent_costs(s, pred.allocation, res.prices);
    row.cso = costs.cso;
    row.seso = costs.seso;
    for (double c : costs.cso) row.cso_total += c;
    for (double c : costs.seso) row.seso_total += c;
    row.dso = costs.dso;
    row.total = system_costs(s, pred.allocation).total;
    const auto cr = coupling_residual(s, pred.allocation);
    row.coupling_resid = std::max(cr.station_balance, cr.storage_exchange);
    res.trace.rows.push_back(row);

    res.allocation = std::move(pred.allocation);
    state = std::move(next);
    res.iterations = state.k;

    if (!std::isfinite(row.lambda_gap) || !std::isfinite(row.mu_gap) || row.lambda_gap > 1e8 || row.mu_gap > 1e8) {
      res.status = CoordinationStatus::diverged;
      break;
    }
    if (row.lambda_gap <= params.delta && row.mu_gap <= params.delta && (!params.primal_check || row.primal_gap <= params.delta)) {
      res.status = CoordinationStatus::converged;
      break;
    }
  }
  res.state = state;
  res.wall_seconds = seconds_since(start);
  return res;
}

}  // namespace evshare
