#include "fixtures.hpp"

#include "evshare/coordinator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace evshare;
using evshare::testing::bundled;
using evshare::testing::zero_scenario;

namespace {

double coupling_of(const Scenario& s, const CoordinationState& st) {
  double r = 0.0;
  for (size_t i = 0; i < s.stations.size(); ++i) {
    for (size_t t = 0; t < st.demand[i].size(); ++t) {
      r = std::max(r, std::abs(st.demand[i][t] + st.to_grid[i][t] + st.to_storage[i][t] - s.stations[i].pv_profile[t]));
    }
  }
  for (size_t k = 0; k < s.storages.size(); ++k)
    for (size_t t = 0; t < st.mu[k].size(); ++t) r = std::max(r, std::abs(st.storage_from_grid[k][t] + st.grid_from_storage[k][t]));
  return r;
}

// Arbitrary but reproducible iterate pair on the bundled shapes.
std::pair<CoordinationState, CoordinationState> random_pair(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  CoordinationState a = zero_state(bundled()), b = a;
  for (auto* st : {&a, &b}) {
    for (auto* m : {&st->demand, &st->to_grid, &st->to_storage, &st->lambda, &st->storage_from_grid, &st->grid_from_storage, &st->mu})
      for (auto& row : *m)
        for (double& v : row) v = u(rng);
  }
  return {a, b};
}

}  // namespace

TEST(Coordinator, ConditionA1Examples) {
  const auto c1 = check_condition_a1(0.5, 0.0);
  EXPECT_TRUE(c1.holds);
  EXPECT_NEAR(c1.minors[0], 1.0, 1e-12);
  EXPECT_NEAR(c1.minors[1], 0.75, 1e-12);
  EXPECT_NEAR(c1.minors[2], 0.875, 1e-12);

  const auto c2 = check_condition_a1(1.0, 1.0);
  EXPECT_FALSE(c2.holds);
  EXPECT_NEAR(c2.minors[0], -1.0, 1e-12);

  const auto c3 = check_condition_a1(0.9, 0.0);
  EXPECT_TRUE(c3.holds);
  EXPECT_NEAR(c3.minors[0], 0.2, 1e-12);
  EXPECT_NEAR(c3.minors[1], 0.03, 1e-12);
  EXPECT_NEAR(c3.minors[2], 0.031, 1e-12);
  EXPECT_GT(c3.min_eigenvalue, 0.0);
}

TEST(Coordinator, ClosedFormH) {
  const auto m = build_correction_matrices(0.5, 0.0, 1.0);
  Eigen::Matrix3d h;
  h << 1, 1, 0, 1, 2, 0, 0, 0, 1;
  EXPECT_LE((m.H - h).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(build_correction_matrices(0.5, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(build_correction_matrices(0.5, 1.5, 1.0), std::invalid_argument);
}

TEST(Coordinator, CorrectionMatrixProperties) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(1e-3, 1.0), ut(0.0, 1.0), ub(1e-2, 5.0);
  for (int n = 0; n < 50; ++n) {
    const double alpha = ua(rng), tau = ut(rng), beta = ub(rng);
    const auto m = build_correction_matrices(alpha, tau, beta);
    const Eigen::Matrix3d qm = m.Q * m.M.inverse();
    EXPECT_LE((qm - m.H).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m.H).eigenvalues()(0), 0.0);
    const double g_min = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(0.5 * (m.G + m.G.transpose())).eigenvalues()(0);
    const auto a1 = check_condition_a1(alpha, tau);
    if (std::abs(g_min) > 1e-9 && std::abs(a1.min_eigenvalue) > 1e-9) EXPECT_EQ(g_min > 0, a1.holds);
  }
  const auto g = build_correction_matrices(0.5, 0.0, 2.0).G;
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(0.5 * (g + g.transpose())).eigenvalues()(0), 0.0);
}

TEST(Coordinator, CorrectionFixedPoint) {
  const auto [a, b] = random_pair(3);
  (void)b;
  CoordinationParams p;
  const auto next = correction_step(a, a, p);
  EXPECT_EQ(next.to_grid, a.to_grid);
  EXPECT_EQ(next.to_storage, a.to_storage);
  EXPECT_EQ(next.lambda, a.lambda);
  EXPECT_EQ(next.mu, a.mu);
  EXPECT_EQ(next.k, a.k + 1);
}

TEST(Coordinator, VariantsDifferByPrimalCorrection) {
  const auto [state, tilde] = random_pair(5);
  CoordinationParams p;
  p.alpha = 0.7;
  p.tau = 0.3;
  p.beta = 0.2;
  p.dual_variant = DualVariant::main_text;
  const auto main = correction_step(state, tilde, p);
  p.dual_variant = DualVariant::appendix;
  const auto app = correction_step(state, tilde, p);
  for (size_t i = 0; i < state.lambda.size(); ++i) {
    for (size_t t = 0; t < state.lambda[i].size(); ++t) {
      const double dy = state.to_storage[i][t] - tilde.to_storage[i][t];
      const double dz = state.to_grid[i][t] - tilde.to_grid[i][t];
      EXPECT_NEAR(app.lambda[i][t] - main.lambda[i][t], p.alpha * p.beta * (dy + dz), 1e-12);
    }
  }
  EXPECT_EQ(app.to_grid, main.to_grid);
  EXPECT_EQ(app.to_storage, main.to_storage);
}

TEST(Coordinator, FullStepAdoptsPredictionWithoutGridChange) {
  auto [state, tilde] = random_pair(9);
  tilde.to_grid = state.to_grid;
  CoordinationParams p;
  p.alpha = 1.0;
  p.tau = 0.0;
  p.dual_variant = DualVariant::main_text;
  const auto next = correction_step(state, tilde, p);
  for (size_t i = 0; i < state.to_storage.size(); ++i)
    for (size_t t = 0; t < state.to_storage[i].size(); ++t) EXPECT_NEAR(next.to_storage[i][t], tilde.to_storage[i][t], 1e-12);
  for (size_t i = 0; i < state.lambda.size(); ++i)
    for (size_t t = 0; t < state.lambda[i].size(); ++t) EXPECT_NEAR(next.lambda[i][t], tilde.lambda[i][t], 1e-12);
}

TEST(Coordinator, RejectsParametersOutsideConditionA1) {
  CoordinationParams p;
  p.alpha = 1.0;
  p.tau = 1.0;
  EXPECT_THROW(run_coordination(zero_scenario(), p), std::invalid_argument);
  p = {};
  p.beta = 0.0;
  EXPECT_THROW(run_coordination(zero_scenario(), p), std::invalid_argument);
}

TEST(Coordinator, ZeroScenarioConvergesImmediately) {
  const auto r = run_coordination(zero_scenario());
  EXPECT_TRUE(r.converged());
  EXPECT_EQ(r.iterations, 1);
  for (const auto& row : r.prices.station_price)
    for (double v : row) EXPECT_NEAR(v, 0.0, 1e-6);
  for (const auto& st : r.allocation.stations)
    for (double v : st.demand) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Coordinator, ZeroScenarioPredictionIsZero) {
  const Scenario s = zero_scenario();
  const auto pred = prediction_step(s, zero_state(s), 1e-3);
  // Powers are zero to solver precision; the penalty curvature is only beta.
  EXPECT_NEAR(coupling_of(s, pred.tilde), 0.0, 1e-3);
  for (const auto& row : pred.tilde.to_grid)
    for (double v : row) EXPECT_NEAR(v, 0.0, 1e-3);
  for (const auto& row : pred.tilde.lambda)
    for (double v : row) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Coordinator, CentralizedOptimumIsAFixedPoint) {
  const auto c = solve_centralized(bundled());
  CoordinationParams p;
  p.max_iterations = 1;
  const auto r = run_coordination(bundled(), p, state_from(bundled(), c.allocation, c.prices));
  ASSERT_EQ(r.trace.rows.size(), 1u);
  EXPECT_LE(r.trace.rows[0].lambda_gap, 1e-5);
  EXPECT_LE(r.trace.rows[0].mu_gap, 1e-5);
}

TEST(Coordinator, FirstStepFromColdStartReducesCoupling) {
  const Scenario& s = bundled();
  const CoordinationState start = zero_state(s);
  CoordinationParams p;
  const auto pred = prediction_step(s, start, p.beta);
  const auto next = correction_step(start, pred.tilde, p);
  EXPECT_LT(coupling_of(s, next), coupling_of(s, start));
}

TEST(Coordinator, VariantsShareTheirTrajectory) {
  CoordinationParams p;
  p.max_iterations = 6;
  const auto app = run_coordination(bundled(), p);
  p.dual_variant = DualVariant::main_text;
  const auto main = run_coordination(bundled(), p);
  ASSERT_EQ(app.trace.rows.size(), main.trace.rows.size());
  for (size_t k = 0; k < app.trace.rows.size(); ++k) {
    EXPECT_NEAR(app.trace.rows[k].total, main.trace.rows[k].total, 1e-6);
    EXPECT_NEAR(app.trace.rows[k].lambda_gap, main.trace.rows[k].lambda_gap, 1e-6);
  }
}

TEST(Coordinator, BundledScenarioConverges) {
  const auto c = solve_centralized(bundled());
  const auto r = run_coordination(bundled());
  ASSERT_TRUE(r.converged());
  EXPECT_LE(r.iterations, 500);
  const auto& rows = r.trace.rows;
  ASSERT_GT(rows.size(), 5u);
  const double gap5 = std::hypot(rows[4].lambda_gap, rows[4].mu_gap);
  const double gap_end = std::hypot(rows.back().lambda_gap, rows.back().mu_gap);
  EXPECT_LT(gap_end, gap5);
  EXPECT_LE(std::abs(rows.back().total - c.objective) / c.objective, 5e-3);
  EXPECT_EQ(to_string(r.status), "converged");
  EXPECT_EQ(parse_dual_variant("main"), DualVariant::main_text);
  EXPECT_EQ(parse_dual_variant(to_string(DualVariant::appendix)), DualVariant::appendix);
}
