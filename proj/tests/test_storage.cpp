#include "fixtures.hpp"

#include "evshare/conic_solver.hpp"
#include "evshare/shared_storage.hpp"

#include <gtest/gtest.h>

using namespace evshare;
using evshare::testing::any_contains;
using evshare::testing::bundled;
using evshare::testing::grid_of;

namespace {

using Grid = std::vector<std::vector<double>>;

const StorageSpec& spec() { return bundled().storages[0]; }

struct Flows {
  Grid sc, sd;
  std::vector<double> gc, gd;
  explicit Flows(size_t T) : sc(4, std::vector<double>(T, 0.0)), sd(sc), gc(T, 0.0), gd(T, 0.0) {}
  StorageSchedule make(const TimeGrid& g) const { return make_storage_schedule(spec(), g, sc, sd, gc, gd); }
};

SesoInputs balanced_inputs(size_t T) {
  SesoInputs in;
  in.lambda.assign(4, std::vector<double>(T, 0.0));
  in.mu.assign(T, 0.0);
  in.anchor_demand.assign(4, std::vector<double>(T, 10.0));
  in.anchor_grid.assign(4, std::vector<double>(T, -4.0));
  in.pv.assign(4, std::vector<double>(T, 6.0));
  in.anchor_grid_to_storage.assign(T, 0.0);
  return in;
}

}  // namespace

TEST(Storage, DegradationCost) {
  const auto g = grid_of(24);
  Flows f(24);
  EXPECT_EQ(degradation_cost(f.make(g), spec(), g), 0.0);
  f.gc[3] = 100.0;
  EXPECT_NEAR(degradation_cost(f.make(g), spec(), g), 1.00, 1e-12);
}

TEST(Storage, SingleStepEnergy) {
  const auto g = grid_of(24);
  Flows f(24);
  const auto idle = simulate_soc(f.make(g), spec(), g);
  for (double e : idle) EXPECT_EQ(e, 325.0);
  f.gc[0] = 100.0;
  EXPECT_NEAR(simulate_soc(f.make(g), spec(), g)[1], 420.0, 1e-12);
}

TEST(Storage, RoundTripReturnsToStart) {
  const auto g = grid_of(24);
  Flows f(24);
  f.sc[1][2] = 80.0;
  f.sd[1][5] = 80.0 * 0.95 * 0.95;
  const auto soc = simulate_soc(f.make(g), spec(), g);
  EXPECT_NEAR(soc.back(), soc.front(), 1e-12);
}

TEST(Storage, FeasibilityOfIdleSchedule) {
  const auto g = grid_of(24);
  EXPECT_TRUE(check_storage_feasibility(Flows(24).make(g), spec(), g, true).empty());
}

TEST(Storage, AggregateDischargeLimit) {
  const auto g = grid_of(24);
  Flows f(24);
  f.sd[0][4] = 100.0;
  f.gd[4] = spec().power_discharge_max - 100.0 + 1.0;
  const auto v = check_storage_feasibility(f.make(g), spec(), g, false);
  ASSERT_EQ(v.size(), 1u) << v.front();
  EXPECT_NE(v[0].find("aggregate discharge limit at slot 4"), std::string::npos);
}

TEST(Storage, EnergyBelowMinimum) {
  const auto g = grid_of(24);
  Flows f(24);
  const double drop = spec().initial_energy - spec().energy_min + 0.5;
  f.gd[0] = 0.5 * drop * 0.95;
  f.gd[1] = 0.5 * drop * 0.95;
  EXPECT_NEAR(simulate_soc(f.make(g), spec(), g)[2], spec().energy_min - 0.5, 1e-9);
  EXPECT_TRUE(any_contains(check_storage_feasibility(f.make(g), spec(), g, false), "energy bounds at slot 2"));
}

TEST(Storage, CyclicEndpoint) {
  const auto g = grid_of(24);
  Flows f(24);
  f.gc[0] = 10.0;
  EXPECT_TRUE(check_storage_feasibility(f.make(g), spec(), g, false).empty());
  EXPECT_TRUE(any_contains(check_storage_feasibility(f.make(g), spec(), g, true), "final energy differs"));
}

TEST(Storage, DegenerateStorage) {
  StorageSpec s = spec();
  EXPECT_FALSE(storage_is_degenerate(s));
  s.capacity = s.energy_min = s.energy_max = s.initial_energy = 0.0;
  EXPECT_TRUE(storage_is_degenerate(s));
  const auto g = grid_of(24);
  const auto idle = idle_storage_schedule(s, g);
  EXPECT_EQ(degradation_cost(idle, s, g), 0.0);
  EXPECT_TRUE(check_storage_feasibility(idle, s, g, true).empty());
}

TEST(Storage, SubproblemSize) {
  const auto seso = assemble_seso_subproblem(spec(), grid_of(24), true, balanced_inputs(24), 0.01);
  EXPECT_EQ(seso.program.num_vars(), 24 * 11);
  EXPECT_TRUE(seso.program.check_invariants().empty());
}

TEST(Storage, BalancedAnchorsGiveIdleOptimum) {
  const auto g = grid_of(24);
  const auto seso = assemble_seso_subproblem(spec(), g, true, balanced_inputs(24), 0.01);
  const auto sol = kernel::solve(seso.program);
  ASSERT_TRUE(sol.ok());
  EXPECT_NEAR(sol.objective, 0.0, 1e-6);
  const auto sch = decode_storage(seso.layout, spec(), g, sol.primal);
  EXPECT_NEAR(degradation_cost(sch, spec(), g), 0.0, 1e-6);
  EXPECT_TRUE(check_storage_feasibility(sch, spec(), g, true, 1e-6).empty());
}

TEST(Storage, HigherGridPriceDrawsMoreFromGrid) {
  const auto g = grid_of(24);
  auto run = [&](double mu_peak) {
    SesoInputs in = balanced_inputs(24);
    for (size_t t = 0; t < 24; ++t) in.mu[t] = t < 12 ? 0.05 : mu_peak;
    const auto seso = assemble_seso_subproblem(spec(), g, true, in, 0.01);
    const auto sol = kernel::solve(seso.program);
    EXPECT_TRUE(sol.ok());
    const auto sch = decode_storage(seso.layout, spec(), g, sol.primal);
    EXPECT_TRUE(check_storage_feasibility(sch, spec(), g, true, 1e-6).empty());
    double late = 0.0;
    for (size_t t = 12; t < 24; ++t) late += sch.net_from_grid[t];
    return late;
  };
  EXPECT_GT(run(0.12), run(0.02) + 1.0);
}
