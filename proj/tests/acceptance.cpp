// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "evshare/bench.hpp"
#include "evshare/conic_solver.hpp"
#include "evshare/coordinator.hpp"
#include "evshare/ieee33.hpp"
#include "evshare/oracle.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace evshare;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string data(const std::string& name) { return std::string(EVSHARE_DATA_DIR) + "/" + name; }

struct Case {
  std::string file;
  Scenario scenario;
  CentralResult central;
  CoordinationResult distributed;
  double distributed_seconds = 0.0;
};

// Bundled scenario first, then the five seeded variants.
std::vector<Case>& cases() {
  static std::vector<Case> cs = [] {
    std::vector<Case> out;
    std::vector<std::string> files = {"ieee33_4cs_1ses.json"};
    for (int seed = 2; seed <= 6; ++seed) files.push_back("ieee33_4cs_1ses_seed" + std::to_string(seed) + ".json");
    for (const auto& f : files) {
      Case c;
      c.file = f;
      c.scenario = load_scenario(data(f));
      c.central = solve_centralized(c.scenario);
      const auto t0 = Clock::now();
      c.distributed = run_coordination(c.scenario);  // appendix variant, defaults
      c.distributed_seconds = seconds_since(t0);
      out.push_back(std::move(c));
    }
    return out;
  }();
  return cs;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_price_diff(const PriceSystem& a, const PriceSystem& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.station_price.size(); ++i)
    for (size_t t = 0; t < a.station_price[i].size(); ++t) d = std::max(d, std::abs(a.station_price[i][t] - b.station_price[i][t]));
  for (size_t k = 0; k < a.storage_price.size(); ++k)
    for (size_t t = 0; t < a.storage_price[k].size(); ++t) d = std::max(d, std::abs(a.storage_price[k][t] - b.storage_price[k][t]));
  return d;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << why << "]";
    }
  }
};

// 1: distributed vs centralized on the bundled scenario.
void coordination_agreement(Outcome& o) {
  const Case& c = cases().front();
  const auto& d = c.distributed;
  const CoordinationParams p;
  const double total = d.trace.rows.back().total;
  const double rel = std::abs(total - c.central.objective) / c.central.objective;
  const double price = max_price_diff(d.prices, c.central.prices);
  const double bound = std::max(10 * p.delta, 1e-3);
  o.detail << "iterations " << d.iterations << ", cost error " << fmt(100 * rel) << "%, max price error " << fmt(price) << " $/kWh, "
           << fmt(c.distributed_seconds) << " s";
  o.require(d.converged() && d.iterations <= 500, "converged within 500 iterations");
  o.require(rel <= 5e-3, "cost within 0.5%");
  o.require(price <= bound, "prices within max(10 delta, 1e-3)");
  o.require(c.distributed_seconds <= 300.0, "runtime <= 5 min");
}

// 2: the centralized allocation is an equilibrium at its own duals.
void equilibrium_audit(Outcome& o) {
  const Case& c = cases().front();
  const auto gaps = agent_best_response_gap(c.scenario, c.central.allocation, c.central.prices);
  const auto rep = verify_equilibrium(c.scenario, c.central.allocation, c.central.prices, 1e-3);
  o.detail << "max gap " << fmt(gaps.max()) << " $, " << rep.mismatches.size() << " mismatches, " << rep.alternative_optima.size()
           << " alternative optima";
  o.require(gaps.max() <= 1e-4, "every gap <= 1e-4 $");
  o.require(rep.ok(), "zero mismatches at 1e-3 kW");
}

// 3: feasible-set orderings of the benchmark variants.
void cost_orderings(Outcome& o) {
  const double margin = 1e-6;
  double worst = INFINITY;
  for (const auto& c : cases()) {
    auto run = [&](VariantKind k) {
      BenchmarkVariant v;
      v.kind = k;
      return run_benchmark(c.scenario, v).total;
    };
    const double b1 = run(VariantKind::b1_no_storage), b2 = run(VariantKind::b2_individual_storage), b3 = run(VariantKind::b3_inelastic);
    const double pr = run(VariantKind::proposed);
    const double m = std::min({b3 - pr, b1 - b3, b2 - pr});
    worst = std::min(worst, m);
    o.require(m >= margin, c.file + ": proposed " + fmt(pr) + ", B3 " + fmt(b3) + ", B1 " + fmt(b1) + ", B2 " + fmt(b2));
  }
  o.detail << cases().size() << " scenarios, smallest margin " << fmt(worst) << " $";
}

// 4: second-order cone relaxation is tight.
void relaxation_exactness(Outcome& o) {
  double worst = 0.0;
  for (const auto& c : cases()) {
    const double gc = c.central.relaxation_gap;
    const double gd = relaxation_gap(c.distributed.allocation.flow, c.scenario.network).max_gap;
    worst = std::max({worst, gc, gd});
    o.require(gc <= 1e-6, c.file + " centralized gap " + fmt(gc));
    o.require(gd <= 1e-6, c.file + " distributed gap " + fmt(gd));
  }
  o.detail << 2 * cases().size() << " optima, max gap " << fmt(worst) << " p.u.";
}

// 5: closed forms and positive definiteness of the correction matrices.
void correction_matrix_grid(Outcome& o) {
  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst_h = 0.0;
  int agree = 0, holds = 0;
  const double eig_tol = 1e-9;
  for (int n = 0; n < 200; ++n) {
    const double alpha = 1.0 - u01(rng);  // (0, 1]
    const double tau = u01(rng);
    const double beta = 5.0 * (1.0 - u01(rng));  // (0, 5]
    const auto m = build_correction_matrices(alpha, tau, beta);
    const Eigen::Matrix3d qm = m.Q * m.M.inverse();
    worst_h = std::max(worst_h, (qm - m.H).cwiseAbs().maxCoeff());
    const double h_min = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m.H).eigenvalues()(0);
    o.require(h_min > 0, "H positive definite");
    const double g_min = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(0.5 * (m.G + m.G.transpose())).eigenvalues()(0);
    const auto a1 = check_condition_a1(alpha, tau);
    // Inside the tolerance band both verdicts are accepted.
    const bool undecided = std::abs(g_min) <= eig_tol || std::abs(a1.min_eigenvalue) <= eig_tol;
    if (undecided || (g_min > eig_tol) == (a1.min_eigenvalue > eig_tol)) ++agree;
    holds += a1.holds ? 1 : 0;
  }
  o.detail << "200 samples, max |QM^-1 - H| " << fmt(worst_h) << ", G/A1 verdicts agree on " << agree << " (A1 holds on " << holds << ")";
  o.require(worst_h <= 1e-12, "H equals Q M^-1 to 1e-12");
  o.require(agree == 200, "PD(G) iff PD(A1)");
}

// 6: bilateral payments cancel and stakeholder costs add up.
void payment_conservation(Outcome& o) {
  double worst_sum = 0.0;
  for (const auto& c : cases()) {
    struct Run {
      const Allocation* a;
      const PriceSystem* p;
      double reference;
      const char* kind;
    };
    const std::vector<Run> runs = {{&c.central.allocation, &c.central.prices, c.central.objective, "centralized"},
                                   {&c.distributed.allocation, &c.distributed.prices, system_costs(c.scenario, c.distributed.allocation).total,
                                    "distributed"}};
    for (const auto& r : runs) {
      const auto pa = profit_allocation(c.scenario, *r.a, *r.p);
      bool antisym = true;
      for (size_t x = 0; x < pa.payments.size(); ++x)
        for (size_t y = 0; y < pa.payments.size(); ++y) antisym = antisym && pa.payments[x][y] + pa.payments[y][x] == 0.0;
      double sum = pa.dso;
      for (double v : pa.cso) sum += v;
      for (double v : pa.seso) sum += v;
      worst_sum = std::max(worst_sum, std::abs(sum - r.reference));
      o.require(antisym, c.file + " " + r.kind + ": C_xy + C_yx = 0");
      o.require(std::abs(sum - r.reference) <= 1e-6, c.file + " " + r.kind + ": stakeholder sum");
    }
  }
  o.detail << 2 * cases().size() << " runs, payments antisymmetric, max |stakeholder sum - objective| " << fmt(worst_sum) << " $";
}

// 7: every converged allocation satisfies the local constraint sets.
void feasibility_suite(Outcome& o) {
  const double coupling_tol = 10 * CoordinationParams{}.delta;  // the coupling rows are what the coordination drives to zero
  size_t allocations = 0, evs = 0;
  for (const auto& c : cases()) {
    o.require(c.scenario.storage_cyclic, c.file + ": cyclic storage toggle on");
    const auto vc = check_allocation(c.scenario, c.central.allocation, 1e-6, 1e-6);
    const auto vd = check_allocation(c.scenario, c.distributed.allocation, 1e-6, coupling_tol);
    allocations += 2;
    o.require(vc.empty(), c.file + " centralized: " + (vc.empty() ? "" : vc.front()));
    o.require(vd.empty(), c.file + " distributed: " + (vd.empty() ? "" : vd.front()));
    for (const auto& st : c.scenario.stations) {
      for (const auto& ev : st.fleet) {
        const auto sch = make_schedule(ev, c.scenario.time, casap_profile(ev, c.scenario.time),
                                       std::vector<double>(static_cast<size_t>(c.scenario.time.horizon_slots), 0.0));
        const double miss = std::abs(sch.energy[static_cast<size_t>(ev.departure_slot)] - ev.required_energy);
        o.require(miss <= 1e-9, c.file + " " + st.id + "." + ev.id + ": CASAP terminal energy");
        ++evs;
      }
    }
  }
  o.detail << allocations << " allocations checked at 1e-6, CASAP terminal energy exact for " << evs << " EVs";
}

// 8: interior-point kernel on analytic programs and random QPs.
kernel::ConvexProgram random_qp(std::mt19937_64& rng) {
  using namespace kernel;
  std::normal_distribution<double> nd(0.0, 1.0);
  const int n = 8, neq = 3;
  ProgramBuilder b;
  for (int i = 0; i < n; ++i) b.add_variable("x" + std::to_string(i));
  Eigen::MatrixXd l(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) l(i, j) = nd(rng);
  const Eigen::MatrixXd pm = l * l.transpose() / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) b.add_quadratic(i, j, 0.5 * pm(i, j));
    b.add_linear(i, 3.0 * nd(rng));
    b.add_upper_bound(i, 2.0);
    b.add_lower_bound(i, -2.0);
  }
  Vector x0(n);
  for (int i = 0; i < n; ++i) x0[i] = 0.3 * nd(rng);
  x0[0] = 1.5;
  for (int r = 0; r < neq; ++r) {
    std::vector<Term> terms;
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = nd(rng);
      terms.push_back({i, a});
      v += a * x0[i];
    }
    b.add_equality(terms, v);
  }
  b.add_cone(0, {1, 2});
  return b.build();
}

void kernel_correctness(Outcome& o) {
  using namespace kernel;
  std::vector<ConvexProgram> analytic;
  {
    ProgramBuilder b;  // min x^2, x >= 1
    const int x = b.add_variable("x");
    b.add_quadratic(x, x, 1.0);
    b.add_lower_bound(x, 1.0);
    analytic.push_back(b.build());
  }
  {
    ProgramBuilder b;  // min t, t >= ||(3, 4)||
    const int t = b.add_variable("t"), u = b.add_variable("u"), v = b.add_variable("v");
    b.add_linear(t, 1.0);
    b.add_equality({{u, 1.0}}, 3.0);
    b.add_equality({{v, 1.0}}, 4.0);
    b.add_cone(t, {u, v});
    analytic.push_back(b.build());
  }
  {
    ProgramBuilder b;  // min (x - 2)^2, x = 0.5
    const int x = b.add_variable("x");
    b.add_squared_affine(1.0, {{x, 1.0}}, -2.0);
    b.add_equality({{x, 1.0}}, 0.5);
    analytic.push_back(b.build());
  }
  double worst_kkt = 0.0;
  for (const auto& p : analytic) {
    const auto s = solve(p);
    const auto r = kkt_residuals(p, s);
    worst_kkt = std::max({worst_kkt, r.primal, r.dual, r.gap});
    o.require(s.ok(), "analytic example solved");
  }
  const auto s1 = solve(analytic[0]), s2 = solve(analytic[1]), s3 = solve(analytic[2]);
  o.require(std::abs(s1.primal[0] - 1.0) <= 1e-7 && std::abs(s1.ineq_duals[0] - 2.0) <= 1e-6, "x* = 1 with dual 2");
  o.require(std::abs(s2.primal[0] - 5.0) <= 1e-7, "t* = 5");
  o.require(std::abs(s3.primal[0] - 0.5) <= 1e-9 && std::abs(s3.eq_duals[0] - 3.0) <= 1e-7, "x* = 0.5 with eq dual 3");
  o.require(worst_kkt <= 1e-7, "KKT residuals <= 1e-7");

  std::mt19937_64 rng(8);
  const double eps = 1e-5;
  double worst_fd = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_qp(rng);
    const auto s = solve(p);
    if (!s.ok()) {
      o.require(false, "random QP " + std::to_string(trial) + " solved");
      continue;
    }
    for (int j = 0; j < p.num_eq(); ++j) {
      auto up = p, dn = p;
      up.eq_rhs[j] += eps;
      dn.eq_rhs[j] -= eps;
      const auto su = solve(up), sd = solve(dn);
      const double fd = (su.objective - sd.objective) / (2 * eps);
      const double predicted = -s.eq_duals[j];
      const double rel = std::abs(fd - predicted) / std::max(1.0, std::abs(predicted));
      worst_fd = std::max(worst_fd, rel);
      ++checked;
    }
  }
  o.detail << "max analytic KKT residual " << fmt(worst_kkt) << ", " << checked << " finite-difference duals on 50 QPs, max relative error "
           << fmt(worst_fd);
  o.require(worst_fd <= 1e-3, "finite differences within 1e-3 relative");
}

// 9: 1 and 6 storage clusters.
void scalability(Outcome& o) {
  const ScaleTemplate t = load_scale_template(data("ieee33_scale_template.json"));
  const auto r1 = scalability_run(t, 1);
  const auto r6 = scalability_run(t, 6);
  const double ratio = r6.mean_cso_seconds / r1.mean_cso_seconds;
  o.detail << "6 clusters: " << r6.stations << " CS, " << r6.storages << " SES, " << r6.evs << " EVs, " << r6.iterations << " iterations, "
           << fmt(r6.wall_seconds) << " s; mean CSO solve " << fmt(r1.mean_cso_seconds) << " -> " << fmt(r6.mean_cso_seconds) << " s (x" << fmt(ratio)
           << ")";
  o.require(r1.converged && r6.converged, "both runs converge");
  o.require(r6.storages == 6 && r6.stations == 24 && r6.evs >= 1000, "6 SES, 24 CS, >= 1000 EVs");
  o.require(r6.wall_seconds <= 1800.0, "within 30 min");
  o.require(ratio <= 2.0, "CSO mean time grows <= 2x");
}

// 10: both dual correction variants.
void dual_variants(Outcome& o) {
  int converged = 0;
  for (const auto& c : cases()) {
    converged += c.distributed.converged() ? 1 : 0;
    o.require(c.distributed.converged(), c.file + ": appendix variant converges");
  }
  CoordinationParams p;
  p.dual_variant = DualVariant::main_text;
  const auto& base = cases().front();
  const auto m = run_coordination(base.scenario, p);
  const auto& rows = m.trace.rows;
  const bool recorded = static_cast<int>(rows.size()) == m.iterations && !rows.empty();
  // A converged status must be backed by the last trace row; anything else is reported as such.
  const bool honest = m.converged() ? (rows.back().lambda_gap <= p.delta && rows.back().mu_gap <= p.delta) : true;
  const double rel = std::abs(rows.back().total - base.central.objective) / base.central.objective;
  o.detail << "appendix converged on " << converged << "/" << cases().size() << " scenarios; main text on the bundled scenario: "
           << to_string(m.status) << " after " << m.iterations << " iterations, cost error " << fmt(100 * rel) << "%";
  o.require(recorded, "main-text trace has one row per iteration");
  o.require(honest, "main-text status consistent with its trace");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "distributed coordination matches the centralized optimum", coordination_agreement},
      {2, "centralized allocation is an equilibrium at its prices", equilibrium_audit},
      {3, "benchmark cost orderings on six scenarios", cost_orderings},
      {4, "cone relaxation exact at every optimum", relaxation_exactness},
      {5, "correction matrix property grid", correction_matrix_grid},
      {6, "payment conservation", payment_conservation},
      {7, "feasibility suite", feasibility_suite},
      {8, "convex kernel correctness", kernel_correctness},
      {9, "scalability to six storage clusters", scalability},
      {10, "both dual correction variants exercised", dual_variants},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %d: %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
