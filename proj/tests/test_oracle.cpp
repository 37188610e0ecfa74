#include "fixtures.hpp"

#include "evshare/oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace evshare;
using evshare::testing::bundled;
using evshare::testing::zero_scenario;

namespace {

const CentralResult& central() {
  static const CentralResult r = solve_centralized(bundled());
  return r;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST(Oracle, ObjectiveEqualsStakeholderCosts) {
  const auto& r = central();
  const auto sys = system_costs(bundled(), r.allocation);
  EXPECT_NEAR(sys.total, r.objective, 1e-6);
  const auto ag = agent_costs(bundled(), r.allocation, r.prices);
  EXPECT_NEAR(sum(ag.cso) + sum(ag.seso) + ag.dso, r.objective, 1e-6);
  EXPECT_LE(r.relaxation_gap, 1e-6);
  EXPECT_TRUE(check_allocation(bundled(), r.allocation).empty());
}

TEST(Oracle, CentralizedAllocationIsAnEquilibrium) {
  const auto& r = central();
  const auto gaps = agent_best_response_gap(bundled(), r.allocation, r.prices);
  EXPECT_LE(gaps.max(), 1e-4);
  EXPECT_GE(gaps.min(), -1e-4);
  const auto rep = verify_equilibrium(bundled(), r.allocation, r.prices, 1e-3);
  EXPECT_TRUE(rep.ok()) << (rep.mismatches.empty() ? "" : rep.mismatches.front());
}

TEST(Oracle, ShiftingTradeFromGridToStorageOpensAGap) {
  const Scenario& s = bundled();
  Allocation a = central().allocation;
  const size_t i = 1, t = 14;
  // The station sells 10 kW less to the grid and 10 kW more to the storage.
  a.stations[i].to_grid[t] -= 10.0;
  a.stations[i].to_storage[t] += 10.0;
  a.flow.station_exchange[i][t] -= 10.0;
  StorageSchedule& b = a.storages[0];
  const auto conn = s.stations_of_storage(0);
  const size_t j = static_cast<size_t>(std::find(conn.begin(), conn.end(), static_cast<int>(i)) - conn.begin());
  b.station_charge[j][t] += 10.0;
  b = make_storage_schedule(s.storages[0], s.time, b.station_charge, b.station_discharge, b.grid_charge, b.grid_discharge);
  const auto gaps = agent_best_response_gap(s, a, central().prices);
  EXPECT_GT(std::max(gaps.cso[i], gaps.seso[0]), 1e-3);
}

TEST(Oracle, ZeroedStorageTradesAreReported) {
  const Scenario& s = bundled();
  Allocation a = central().allocation;
  a.storages[0] = idle_storage_schedule(s.storages[0], s.time);
  const auto rep = verify_equilibrium(s, a, central().prices);
  EXPECT_FALSE(rep.ok());
  EXPECT_GT(rep.coupling.station_balance, 1.0);
}

TEST(Oracle, ZeroScenario) {
  const Scenario s = zero_scenario();
  const auto r = solve_centralized(s);
  EXPECT_NEAR(r.objective, 0.0, 1e-7);
  for (const auto& st : r.allocation.stations)
    for (double v : st.demand) EXPECT_NEAR(v, 0.0, 1e-6);
  // The zero allocation is supported by any price between minus the buy
  // price (plus marginal losses) and zero; the solver returns an interior one.
  for (const auto& row : r.prices.station_price)
    for (size_t t = 0; t < row.size(); ++t) {
      EXPECT_LE(row[t], 1e-6);
      EXPECT_GE(row[t], -1.01 * s.tariff.buy_price[t]);
    }
  const auto gaps = agent_best_response_gap(s, r.allocation, r.prices);
  EXPECT_NEAR(gaps.max(), 0.0, 1e-7);
  EXPECT_NEAR(gaps.min(), 0.0, 1e-7);
}

TEST(Oracle, PaymentsAreAntisymmetricAndAdditive) {
  const auto& r = central();
  const auto pa = profit_allocation(bundled(), r.allocation, r.prices);
  const size_t n = pa.parties.size();
  ASSERT_EQ(n, 6u);
  EXPECT_EQ(pa.parties.back(), "DSO");
  for (size_t x = 0; x < n; ++x) {
    EXPECT_EQ(pa.payments[x][x], 0.0);
    for (size_t y = 0; y < n; ++y) EXPECT_EQ(pa.payments[x][y] + pa.payments[y][x], 0.0);
  }
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(pa.station_own[i] + pa.payments[i][4] + pa.payments[i][5], pa.cso[i], 1e-12);
  EXPECT_NEAR(pa.total, r.objective, 1e-6);
  EXPECT_NEAR(sum(pa.cso) + sum(pa.seso) + pa.dso, r.objective, 1e-6);
  const auto ag = agent_costs(bundled(), r.allocation, r.prices);
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(pa.cso[i], ag.cso[i], 1e-9);
}

TEST(Oracle, ZeroAllocationHasZeroPayments) {
  const Scenario s = zero_scenario();
  const auto r = solve_centralized(s);
  const auto pa = profit_allocation(s, r.allocation, r.prices);
  for (const auto& row : pa.payments)
    for (double v : row) EXPECT_NEAR(v, 0.0, 1e-9);
}
