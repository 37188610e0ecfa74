#include "evshare/dist_network.hpp"
#include "evshare/shared_storage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evshare {

using kernel::ProgramBuilder;
using kernel::Term;

namespace {

constexpr double kSlackVoltSq = 1.0;

struct Tree {
  std::vector<std::vector<int>> children;  // [bus] -> line indices leaving the bus
  int slack = -1;
};

Tree build_tree(const NetworkSpec& net) {
  Tree tr;
  tr.children.resize(net.buses.size());
  for (size_t k = 0; k < net.lines.size(); ++k) tr.children[static_cast<size_t>(net.bus_index(net.lines[k].from))].push_back(static_cast<int>(k));
  tr.slack = net.bus_index(net.slack_bus_id);
  return tr;
}

// Stations and storages attached to each bus.
struct Attachments {
  std::vector<std::vector<int>> stations, storages;
};

Attachments attachments(const Scenario& s) {
  Attachments a;
  a.stations.resize(s.network.buses.size());
  a.storages.resize(s.network.buses.size());
  for (size_t i = 0; i < s.stations.size(); ++i) a.stations[static_cast<size_t>(s.network.bus_index(s.stations[i].bus_id))].push_back(static_cast<int>(i));
  for (size_t b = 0; b < s.storages.size(); ++b) a.storages[static_cast<size_t>(s.network.bus_index(s.storages[b].bus_id))].push_back(static_cast<int>(b));
  return a;
}

}  // namespace

NetworkLayout add_network_model(ProgramBuilder& b, const Scenario& s) {
  const auto& net = s.network;
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const double dt = s.time.slot_hours;
  const double sb = net.s_base;
  const size_t nb = net.buses.size(), nl = net.lines.size();
  const Tree tr = build_tree(net);
  const Attachments att = attachments(s);

  NetworkLayout lay;
  auto grid2 = [&](size_t n) { return std::vector<std::vector<int>>(n, std::vector<int>(T, -1)); };
  lay.line_p = grid2(nl);
  lay.line_q = grid2(nl);
  lay.current_sq = grid2(nl);
  lay.cone_head = grid2(nl);
  lay.cone_diff = grid2(nl);
  lay.volt_sq = grid2(nb);
  lay.station_exchange = grid2(s.stations.size());
  lay.storage_exchange = grid2(s.storages.size());
  lay.grid_buy.assign(T, -1);
  lay.grid_sell.assign(T, -1);

  for (size_t t = 0; t < T; ++t) {
    const std::string slot = "[" + std::to_string(t) + "]";
    for (size_t i = 0; i < s.stations.size(); ++i) lay.station_exchange[i][t] = b.add_variable(s.stations[i].id + ".p_g" + slot);
    for (size_t k = 0; k < s.storages.size(); ++k) {
      if (s.storages[k].grid_exchange && !storage_is_degenerate(s.storages[k])) lay.storage_exchange[k][t] = b.add_variable(s.storages[k].id + ".p_gb" + slot);
    }
    lay.grid_buy[t] = b.add_variable("grid.buy" + slot);
    lay.grid_sell[t] = b.add_variable("grid.sell" + slot);
    b.add_lower_bound(lay.grid_buy[t], 0.0);
    b.add_lower_bound(lay.grid_sell[t], 0.0);
    b.add_linear(lay.grid_buy[t], s.tariff.buy_price[t] * dt);
    b.add_linear(lay.grid_sell[t], -s.tariff.sell_price[t] * dt);

    for (size_t j = 0; j < nb; ++j) {
      if (static_cast<int>(j) == tr.slack) continue;
      const int v = b.add_variable("v" + std::to_string(net.buses[j].id) + slot);
      lay.volt_sq[j][t] = v;
      b.add_lower_bound(v, net.buses[j].v_min);
      b.add_upper_bound(v, net.buses[j].v_max);
    }
    for (size_t k = 0; k < nl; ++k) {
      const std::string tag = std::to_string(net.lines[k].from) + "-" + std::to_string(net.lines[k].to) + slot;
      lay.line_p[k][t] = b.add_variable("P" + tag);
      lay.line_q[k][t] = b.add_variable("Q" + tag);
      lay.current_sq[k][t] = b.add_variable("l" + tag);
      lay.cone_head[k][t] = b.add_variable("cone_sum" + tag);
      lay.cone_diff[k][t] = b.add_variable("cone_diff" + tag);
      if (std::isfinite(net.lines[k].l_max)) b.add_upper_bound(lay.current_sq[k][t], net.lines[k].l_max);
    }

    // Exchange terms (kW -> p.u.) at every bus.
    auto exchange_terms = [&](size_t j, double scale) {
      std::vector<Term> terms;
      for (int i : att.stations[j]) terms.push_back({lay.station_exchange[static_cast<size_t>(i)][t], scale});
      for (int k : att.storages[j]) {
        const int var = lay.storage_exchange[static_cast<size_t>(k)][t];
        if (var >= 0) terms.push_back({var, scale});
      }
      return terms;
    };

    for (size_t k = 0; k < nl; ++k) {
      const LineSpec& ln = net.lines[k];
      const size_t from = static_cast<size_t>(net.bus_index(ln.from));
      const size_t to = static_cast<size_t>(net.bus_index(ln.to));
      const int P = lay.line_p[k][t], Q = lay.line_q[k][t], L = lay.current_sq[k][t];
      const BusSpec& bus = net.buses[to];

      std::vector<Term> prow{{P, 1.0}, {L, -ln.r}};
      std::vector<Term> qrow{{Q, 1.0}, {L, -ln.x}};
      for (int m : tr.children[to]) {
        prow.push_back({lay.line_p[static_cast<size_t>(m)][t], -1.0});
        qrow.push_back({lay.line_q[static_cast<size_t>(m)][t], -1.0});
      }
      const auto exch = exchange_terms(to, 1.0 / sb);
      prow.insert(prow.end(), exch.begin(), exch.end());
      b.add_equality(prow, bus.load_p[t] / sb);
      b.add_equality(qrow, bus.load_q[t] / sb);

      // Net injection bounds in kW at buses with controllable exchange.
      const auto exch_kw = exchange_terms(to, 1.0);
      if (!exch_kw.empty()) {
        if (std::isfinite(bus.p_max)) b.add_inequality(exch_kw, bus.p_max + bus.load_p[t]);
        if (std::isfinite(bus.p_min)) {
          std::vector<Term> neg;
          for (const auto& e : exch_kw) neg.push_back({e.var, -e.coef});
          b.add_inequality(neg, -(bus.p_min + bus.load_p[t]));
        }
      }

      const int vj = lay.volt_sq[to][t];
      const int vi = lay.volt_sq[from][t];
      std::vector<Term> vrow{{vj, 1.0}, {P, 2.0 * ln.r}, {Q, 2.0 * ln.x}, {L, -(ln.r * ln.r + ln.x * ln.x)}};
      double vrhs = 0.0;
      if (vi >= 0) {
        vrow.push_back({vi, -1.0});
      } else {
        vrhs = kSlackVoltSq;
      }
      b.add_equality(vrow, vrhs);

      // l * v_from >= P^2 + Q^2 as ||(P, Q, (l - v)/2)|| <= (l + v)/2.
      const int h = lay.cone_head[k][t], w = lay.cone_diff[k][t];
      if (vi >= 0) {
        b.add_equality({{h, 1.0}, {L, -0.5}, {vi, -0.5}}, 0.0);
        b.add_equality({{w, 1.0}, {L, -0.5}, {vi, 0.5}}, 0.0);
      } else {
        b.add_equality({{h, 1.0}, {L, -0.5}}, 0.5 * kSlackVoltSq);
        b.add_equality({{w, 1.0}, {L, -0.5}}, -0.5 * kSlackVoltSq);
      }
      b.add_cone(h, {P, Q, w});
    }

    // Slack bus: grid exchange feeds the local load and the feeder heads.
    const size_t sl = static_cast<size_t>(tr.slack);
    const BusSpec& sbus = net.buses[sl];
    std::vector<Term> srow{{lay.grid_buy[t], -1.0 / sb}, {lay.grid_sell[t], 1.0 / sb}};
    for (int m : tr.children[sl]) srow.push_back({lay.line_p[static_cast<size_t>(m)][t], 1.0});
    for (const auto& e : exchange_terms(sl, -1.0 / sb)) srow.push_back(e);
    b.add_equality(srow, -sbus.load_p[t] / sb);
    if (std::isfinite(sbus.p_max)) b.add_inequality({{lay.grid_buy[t], 1.0}, {lay.grid_sell[t], -1.0}}, sbus.p_max);
    if (std::isfinite(sbus.p_min)) b.add_inequality({{lay.grid_buy[t], -1.0}, {lay.grid_sell[t], 1.0}}, -sbus.p_min);
    std::vector<Term> qsl;
    for (int m : tr.children[sl]) qsl.push_back({lay.line_q[static_cast<size_t>(m)][t], sb});
    if (std::isfinite(sbus.q_max) && !qsl.empty()) b.add_inequality(qsl, sbus.q_max - sbus.load_q[t]);
    if (std::isfinite(sbus.q_min) && !qsl.empty()) {
      for (auto& e : qsl) e.coef = -e.coef;
      b.add_inequality(qsl, -(sbus.q_min - sbus.load_q[t]));
    }
  }
  return lay;
}

FlowState decode_flow(const NetworkLayout& lay, const Scenario& s, const kernel::Vector& x) {
  const auto& net = s.network;
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const double sb = net.s_base;
  const Tree tr = build_tree(net);
  const Attachments att = attachments(s);
  auto val = [&](int idx) { return idx >= 0 ? x[idx] : 0.0; };
  auto series2 = [&](const std::vector<std::vector<int>>& idx) {
    std::vector<std::vector<double>> out(idx.size(), std::vector<double>(T, 0.0));
    for (size_t a = 0; a < idx.size(); ++a)
      for (size_t t = 0; t < T; ++t) out[a][t] = val(idx[a][t]);
    return out;
  };
  FlowState fs;
  fs.line_p = series2(lay.line_p);
  fs.line_q = series2(lay.line_q);
  fs.current_sq = series2(lay.current_sq);
  fs.volt_sq = series2(lay.volt_sq);
  fs.station_exchange = series2(lay.station_exchange);
  fs.storage_exchange = series2(lay.storage_exchange);
  fs.grid_buy.resize(T);
  fs.grid_sell.resize(T);
  const size_t nb = net.buses.size();
  fs.bus_p.assign(nb, std::vector<double>(T, 0.0));
  fs.bus_q.assign(nb, std::vector<double>(T, 0.0));
  for (size_t t = 0; t < T; ++t) {
    fs.grid_buy[t] = val(lay.grid_buy[t]);
    fs.grid_sell[t] = val(lay.grid_sell[t]);
    for (size_t j = 0; j < nb; ++j) {
      double exch = 0.0;
      for (int i : att.stations[j]) exch += fs.station_exchange[static_cast<size_t>(i)][t];
      for (int k : att.storages[j]) exch += fs.storage_exchange[static_cast<size_t>(k)][t];
      fs.bus_p[j][t] = (exch - net.buses[j].load_p[t]) / sb;
      fs.bus_q[j][t] = -net.buses[j].load_q[t] / sb;
      if (static_cast<int>(j) == tr.slack) {
        fs.volt_sq[j][t] = kSlackVoltSq;
        fs.bus_p[j][t] += (fs.grid_buy[t] - fs.grid_sell[t]) / sb;
        double q = 0.0;
        for (int m : tr.children[j]) q += fs.line_q[static_cast<size_t>(m)][t];
        fs.bus_q[j][t] = q;
      }
    }
  }
  return fs;
}

RelaxationGap relaxation_gap(const FlowState& fs, const NetworkSpec& net) {
  RelaxationGap g;
  g.gaps.resize(net.lines.size());
  for (size_t k = 0; k < net.lines.size(); ++k) {
    const size_t from = static_cast<size_t>(net.bus_index(net.lines[k].from));
    const size_t T = fs.current_sq[k].size();
    g.gaps[k].resize(T);
    for (size_t t = 0; t < T; ++t) {
      const double P = fs.line_p[k][t], Q = fs.line_q[k][t];
      const double s2 = P * P + Q * Q;
      // An empty flow state has v = 0 as well; no flow means no implied current.
      const double gap = fs.current_sq[k][t] - (s2 == 0.0 ? 0.0 : s2 / fs.volt_sq[from][t]);
      g.gaps[k][t] = gap;
      g.max_gap = std::max(g.max_gap, gap);
    }
  }
  return g;
}

double dso_energy_cost(const std::vector<double>& grid_buy, const std::vector<double>& grid_sell, const Tariff& tariff, const TimeGrid& grid) {
  double c = 0.0;
  for (size_t t = 0; t < grid_buy.size(); ++t) c += (grid_buy[t] * tariff.buy_price[t] - grid_sell[t] * tariff.sell_price[t]) * grid.slot_hours;
  return c;
}

std::vector<std::string> check_network_feasibility(const FlowState& fs, const Scenario& s, double tol) {
  std::vector<std::string> v;
  const auto& net = s.network;
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const double sb = net.s_base;
  const Tree tr = build_tree(net);
  const Attachments att = attachments(s);
  const size_t nb = net.buses.size(), nl = net.lines.size();
  auto shape_ok = [&](const std::vector<std::vector<double>>& m, size_t n) {
    if (m.size() != n) return false;
    for (const auto& r : m)
      if (r.size() != T) return false;
    return true;
  };
  if (!shape_ok(fs.line_p, nl) || !shape_ok(fs.line_q, nl) || !shape_ok(fs.current_sq, nl) || !shape_ok(fs.volt_sq, nb) ||
      !shape_ok(fs.bus_p, nb) || !shape_ok(fs.bus_q, nb) || fs.grid_buy.size() != T || fs.grid_sell.size() != T ||
      !shape_ok(fs.station_exchange, s.stations.size()) || !shape_ok(fs.storage_exchange, s.storages.size())) {
    v.push_back("flow state dimensions do not match the network and horizon");
    return v;
  }
  auto at = [](size_t t) { return " at slot " + std::to_string(t); };
  for (size_t t = 0; t < T; ++t) {
    if (fs.grid_buy[t] < -tol || fs.grid_sell[t] < -tol) v.push_back("grid purchase and sale must be nonnegative" + at(t));
    for (size_t j = 0; j < nb; ++j) {
      const BusSpec& bus = net.buses[j];
      const std::string who = "bus " + std::to_string(bus.id);
      const double vv = fs.volt_sq[j][t];
      if (vv < bus.v_min - tol || vv > bus.v_max + tol) v.push_back(who + ": voltage bounds" + at(t));
      double exch = 0.0;
      for (int i : att.stations[j]) exch += fs.station_exchange[static_cast<size_t>(i)][t];
      for (int k : att.storages[j]) exch += fs.storage_exchange[static_cast<size_t>(k)][t];
      double inj = exch - bus.load_p[t];
      if (static_cast<int>(j) == tr.slack) {
        inj += fs.grid_buy[t] - fs.grid_sell[t];
        if (std::abs(vv - kSlackVoltSq) > tol) v.push_back(who + ": slack voltage differs from 1 p.u." + at(t));
        double p = 0.0;
        for (int m : tr.children[j]) p += fs.line_p[static_cast<size_t>(m)][t];
        if (std::abs(p - fs.bus_p[j][t]) > tol) v.push_back(who + ": active power balance" + at(t));
        const double grid = fs.grid_buy[t] - fs.grid_sell[t];
        if (grid > bus.p_max + tol * sb || grid < bus.p_min - tol * sb) v.push_back(who + ": injection bounds" + at(t));
        const double q = fs.bus_q[j][t] * sb + bus.load_q[t];
        if (q > bus.q_max + tol * sb || q < bus.q_min - tol * sb) v.push_back(who + ": reactive injection bounds" + at(t));
      } else {
        if (std::abs(fs.bus_q[j][t] + bus.load_q[t] / sb) > tol) v.push_back(who + ": reactive injection differs from load" + at(t));
        if (!att.stations[j].empty() || !att.storages[j].empty()) {
          if (exch - bus.load_p[t] > bus.p_max + tol * sb || exch - bus.load_p[t] < bus.p_min - tol * sb) v.push_back(who + ": injection bounds" + at(t));
        }
      }
      if (std::abs(fs.bus_p[j][t] - inj / sb) > tol) v.push_back(who + ": injection differs from load and station/storage exchange" + at(t));
    }
    for (size_t k = 0; k < nl; ++k) {
      const LineSpec& ln = net.lines[k];
      const std::string who = "line " + std::to_string(ln.from) + "-" + std::to_string(ln.to);
      const size_t from = static_cast<size_t>(net.bus_index(ln.from));
      const size_t to = static_cast<size_t>(net.bus_index(ln.to));
      const double P = fs.line_p[k][t], Q = fs.line_q[k][t], L = fs.current_sq[k][t];
      if (L < -tol || L > ln.l_max + tol) v.push_back(who + ": current bounds" + at(t));
      double pout = 0.0, qout = 0.0;
      for (int m : tr.children[to]) {
        pout += fs.line_p[static_cast<size_t>(m)][t];
        qout += fs.line_q[static_cast<size_t>(m)][t];
      }
      if (std::abs(P - ln.r * L - pout + fs.bus_p[to][t]) > tol) v.push_back(who + ": active power balance" + at(t));
      if (std::abs(Q - ln.x * L - qout + fs.bus_q[to][t]) > tol) v.push_back(who + ": reactive power balance" + at(t));
      const double drop = fs.volt_sq[from][t] - 2.0 * (ln.r * P + ln.x * Q) + (ln.r * ln.r + ln.x * ln.x) * L;
      if (std::abs(fs.volt_sq[to][t] - drop) > tol) v.push_back(who + ": voltage drop" + at(t));
      if (P * P + Q * Q - L * fs.volt_sq[from][t] > tol) v.push_back(who + ": relaxed current definition" + at(t));
    }
  }
  return v;
}

DsoProgram assemble_dso_subproblem(const Scenario& s, const DsoInputs& in, double beta) {
  if (!(beta >= 0)) throw std::invalid_argument("penalty must be nonnegative");
  const size_t T = static_cast<size_t>(s.time.horizon_slots);
  const size_t ni = s.stations.size(), nbat = s.storages.size();
  auto check = [&](const std::vector<std::vector<double>>& m, size_t n, const char* what) {
    bool ok = m.size() == n;
    for (const auto& r : m) ok = ok && r.size() == T;
    if (!ok) throw std::invalid_argument(std::string("network subproblem: ") + what + " has the wrong shape");
  };
  check(in.lambda, ni, "station prices");
  check(in.anchor_demand, ni, "demand anchors");
  check(in.anchor_storage, ni, "storage anchors");
  check(in.mu, nbat, "storage prices");
  check(in.anchor_storage_grid, nbat, "storage grid anchors");

  ProgramBuilder b;
  DsoProgram out;
  out.layout = add_network_model(b, s);
  for (size_t t = 0; t < T; ++t) {
    for (size_t i = 0; i < ni; ++i) {
      const int pg = out.layout.station_exchange[i][t];
      b.add_linear(pg, -in.lambda[i][t]);
      b.add_squared_affine(0.5 * beta, {{pg, 1.0}}, in.anchor_demand[i][t] + in.anchor_storage[i][t] - s.stations[i].pv_profile[t]);
    }
    for (size_t k = 0; k < nbat; ++k) {
      const int pgb = out.layout.storage_exchange[k][t];
      if (pgb < 0) {
        b.add_constant(0.5 * beta * in.anchor_storage_grid[k][t] * in.anchor_storage_grid[k][t]);
        continue;
      }
      b.add_linear(pgb, -in.mu[k][t]);
      b.add_squared_affine(0.5 * beta, {{pgb, 1.0}}, in.anchor_storage_grid[k][t]);
    }
  }
  out.program = b.build();
  return out;
}

}  // namespace evshare
