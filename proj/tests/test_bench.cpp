#include "fixtures.hpp"

#include "evshare/bench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

using namespace evshare;
using evshare::testing::bundled;
using evshare::testing::zero_scenario;

namespace {

const std::vector<VariantKind> kAll = {VariantKind::b1_no_storage, VariantKind::b2_individual_storage, VariantKind::b3_inelastic,
                                       VariantKind::proposed};

ExperimentResult run(const Scenario& s, VariantKind k, std::optional<double> b1 = std::nullopt) {
  BenchmarkVariant v;
  v.kind = k;
  return run_benchmark(s, v, b1);
}

}  // namespace

TEST(Bench, VariantNames) {
  for (VariantKind k : kAll) EXPECT_EQ(parse_variant(to_string(k)), k);
  EXPECT_THROW(parse_variant("b4"), std::invalid_argument);
  EXPECT_EQ(parse_coefficient("bat"), Coefficient::storage_degradation);
  EXPECT_EQ(parse_coefficient("ev"), Coefficient::ev_inconvenience);
}

TEST(Bench, VariantScenarios) {
  BenchmarkVariant v;
  v.kind = VariantKind::b1_no_storage;
  EXPECT_TRUE(variant_scenario(bundled(), v).storages.empty());
  v.kind = VariantKind::b2_individual_storage;
  const Scenario b2 = variant_scenario(bundled(), v);
  ASSERT_EQ(b2.storages.size(), 4u);
  double cap = 0.0;
  for (const auto& b : b2.storages) {
    EXPECT_FALSE(b.grid_exchange);
    EXPECT_EQ(b.connected_stations.size(), 1u);
    cap += b.capacity;
  }
  EXPECT_NEAR(cap, bundled().storages[0].capacity, 1e-9);
  EXPECT_TRUE(validate_scenario(b2).empty());
}

TEST(Bench, OrderingOnBundledScenario) {
  const auto b1 = run(bundled(), VariantKind::b1_no_storage);
  const auto b2 = run(bundled(), VariantKind::b2_individual_storage, b1.total);
  const auto b3 = run(bundled(), VariantKind::b3_inelastic, b1.total);
  const auto pr = run(bundled(), VariantKind::proposed, b1.total);
  EXPECT_LT(pr.total, b3.total);
  EXPECT_LT(b3.total, b1.total);
  EXPECT_LT(pr.total, b2.total);
  for (const auto* r : {&b2, &b3, &pr}) EXPECT_EQ(r->reduction, (b1.total - r->total) / b1.total);
  EXPECT_GT(pr.reduction, 0.0);
}

TEST(Bench, ZeroFleetMakesVariantsEqual) {
  const Scenario s = zero_scenario();
  std::vector<double> totals;
  for (VariantKind k : kAll) totals.push_back(run(s, k).total);
  for (double t : totals) EXPECT_NEAR(t, totals.front(), 1e-6);
}

TEST(Bench, CapacitySweep) {
  const std::vector<double> ms = {0.0, 0.5, 1.0, 2.0, 2.5};
  const auto rows = capacity_sweep(bundled(), ms, {VariantKind::b2_individual_storage, VariantKind::proposed});
  std::map<double, std::map<std::string, double>> total;
  for (const auto& r : rows) total[r.value][r.variant] = r.result.total;
  const std::string b2 = to_string(VariantKind::b2_individual_storage), pr = to_string(VariantKind::proposed);
  for (double m : ms) EXPECT_LE(total[m][pr], total[m][b2] + 1e-6) << "m=" << m;
  EXPECT_LE(std::abs(total[2.0][pr] - total[2.5][pr]), 0.01 * total[2.5][pr]);
  EXPECT_NEAR(total[0.0][pr], run(bundled(), VariantKind::b1_no_storage).total, 1e-5);
  EXPECT_THROW(capacity_sweep(bundled(), {1.0, 0.5}, {VariantKind::proposed}), std::invalid_argument);
}

TEST(Bench, DegradationSweep) {
  const std::vector<double> values = {0.001, 0.01, 0.1, 100.0};
  const auto rows = coefficient_sweep(bundled(), Coefficient::storage_degradation, values, {VariantKind::proposed});
  ASSERT_EQ(rows.size(), values.size());
  for (size_t k = 1; k < rows.size(); ++k) EXPECT_GE(rows[k].result.total, rows[k - 1].result.total - 1e-6);
  EXPECT_GT(rows[1].storage_throughput, 100.0);
  EXPECT_LT(rows.back().storage_throughput, 1e-2 * rows[1].storage_throughput);
}

TEST(Bench, InconvenienceSweepLeavesInelasticVariantUnchanged) {
  const auto rows = coefficient_sweep(bundled(), Coefficient::ev_inconvenience, {1e-5, 1e-3}, {VariantKind::b3_inelastic});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[0].result.total, rows[1].result.total, 1e-6);
}

TEST(Bench, DistributedAgreesWithCentralized) {
  BenchmarkVariant v;
  const auto central = run_benchmark(bundled(), v);
  v.distributed = true;
  const auto dist = run_benchmark(bundled(), v);
  EXPECT_TRUE(dist.converged);
  ASSERT_TRUE(dist.coordination.has_value());
  EXPECT_LE(std::abs(dist.total - central.total) / central.total, 5e-3);
}

TEST(Bench, ScaledScenarios) {
  const ScaleTemplate t = make_scale_template();
  const Scenario two = scale_scenario(t, 2);
  EXPECT_EQ(two.stations.size(), 8u);
  EXPECT_EQ(two.storages.size(), 2u);
  EXPECT_TRUE(validate_scenario(two).empty());
  std::set<int> buses;
  for (const auto& b : two.storages) buses.insert(b.bus_id);
  EXPECT_EQ(buses.size(), 2u);
  EXPECT_GE(scale_scenario(t, 6).total_evs(), 1000);
  EXPECT_THROW(scale_scenario(t, static_cast<int>(t.cluster_buses.size()) + 1), ScenarioError);
}
