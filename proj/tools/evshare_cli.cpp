// Command-line front end: central and distributed solves, benchmarks,
// sweeps, equilibrium audits and scalability runs.
//
// Exit codes: 0 success, 1 usage or data error, 2 model infeasible,
// 3 no convergence (coordination or a subproblem solver).

#include "evshare/bench.hpp"
#include "evshare/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evshare;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInfeasible = 2;
constexpr int kNoConvergence = 3;

struct CoordOptions {
  double beta = CoordinationParams{}.beta;
  double alpha = CoordinationParams{}.alpha;
  double tau = CoordinationParams{}.tau;
  double delta = CoordinationParams{}.delta;
  int max_iter = CoordinationParams{}.max_iterations;
  std::string variant = "appendix";
  bool dual_gap_only = false;

  void attach(CLI::App* app) {
    app->add_option("--beta", beta, "Penalty parameter")->capture_default_str();
    app->add_option("--alpha", alpha, "Correction step")->capture_default_str();
    app->add_option("--tau", tau, "Correction blend")->capture_default_str();
    app->add_option("--delta", delta, "Stopping tolerance on dual gaps")->capture_default_str();
    app->add_option("--max-iter", max_iter, "Iteration limit")->capture_default_str();
    app->add_option("--dual-variant", variant, "Dual correction: main or appendix")->capture_default_str();
    app->add_flag("--dual-gap-only", dual_gap_only, "Stop on dual gaps alone, without the primal stability check");
  }
  CoordinationParams params() const {
    CoordinationParams p;
    p.beta = beta;
    p.alpha = alpha;
    p.tau = tau;
    p.delta = delta;
    p.max_iterations = max_iter;
    p.dual_variant = parse_dual_variant(variant);
    p.primal_check = !dual_gap_only;
    return p;
  }
};

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<VariantKind> parse_variants(const std::string& text) {
  std::vector<VariantKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_variant(item));
  }
  return out;
}

fs::path out_file(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return fs::path(dir) / name;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  const auto p = out_file(dir, name);
  std::ofstream f(p);
  if (!f) throw ScenarioError("cannot write '" + p.string() + "'");
  return f;
}

void write_json(const std::string& dir, const std::string& name, const json& doc) { open_out(dir, name) << doc.dump(2) << "\n"; }

Scenario load_valid(const std::string& path) {
  Scenario s = load_scenario(path);
  const auto problems = validate_scenario(s);
  if (!problems.empty()) {
    std::string msg = "scenario '" + path + "' is invalid:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ScenarioError(msg);
  }
  return s;
}

json profit_json(const ProfitAllocation& pa) {
  return {{"parties", pa.parties}, {"payments", pa.payments}, {"cso", pa.cso}, {"seso", pa.seso}, {"dso", pa.dso}, {"total", pa.total}};
}

int cmd_solve_central(const std::string& scenario, const std::string& out) {
  const Scenario s = load_valid(scenario);
  const auto c = solve_centralized(s);
  save_solution(out_file(out, "solution.json").string(), s, c.allocation, c.prices);
  const auto pa = profit_allocation(s, c.allocation, c.prices);
  auto f = open_out(out, "payments.csv");
  write_payments_csv(f, pa);
  write_json(out, "central.json",
             {{"scenario", s.name},
              {"objective", c.objective},
              {"relaxation_gap", c.relaxation_gap},
              {"iterations", c.iterations},
              {"seconds", c.seconds},
              {"profit_allocation", profit_json(pa)}});
  std::cout << "objective " << c.objective << " $, relaxation gap " << c.relaxation_gap << " p.u., " << c.iterations << " solver iterations\n";
  return kOk;
}

int cmd_run_distributed(const std::string& scenario, const CoordOptions& co, const std::string& out) {
  const Scenario s = load_valid(scenario);
  const auto r = run_coordination(s, co.params());
  {
    auto f = open_out(out, "trace.csv");
    write_trace_csv(f, r.trace);
  }
  save_solution(out_file(out, "solution.json").string(), s, r.allocation, r.prices);
  const auto costs = system_costs(s, r.allocation);
  write_json(out, "distributed.json",
             {{"scenario", s.name},
              {"status", to_string(r.status)},
              {"iterations", r.iterations},
              {"total", costs.total},
              {"relaxation_gap", relaxation_gap(r.allocation.flow, s.network).max_gap},
              {"wall_seconds", r.wall_seconds},
              {"dual_variant", to_string(co.params().dual_variant)},
              {"profit_allocation", profit_json(profit_allocation(s, r.allocation, r.prices))}});
  std::cout << to_string(r.status) << " after " << r.iterations << " iterations, total " << costs.total << " $\n";
  return r.converged() ? kOk : kNoConvergence;
}

int cmd_benchmark(const std::string& scenario, const std::string& variants, bool distributed, const CoordOptions& co, const std::string& out) {
  const Scenario s = load_valid(scenario);
  BenchmarkVariant b1;
  b1.kind = VariantKind::b1_no_storage;
  const double b1_total = run_benchmark(s, b1).total;
  std::vector<ExperimentResult> results;
  bool converged = true;
  for (VariantKind k : parse_variants(variants)) {
    BenchmarkVariant v;
    v.kind = k;
    v.distributed = distributed && k == VariantKind::proposed;
    v.params = co.params();
    results.push_back(run_benchmark(s, v, b1_total));
    converged = converged && results.back().converged;
    if (results.back().coordination) {
      auto f = open_out(out, "trace.csv");
      write_trace_csv(f, results.back().coordination->trace);
    }
  }
  {
    auto f = open_out(out, "costs.csv");
    write_cost_table_csv(f, results);
  }
  auto f = open_out(out, "summary.csv");
  write_summary_csv(f, results);
  write_summary_csv(std::cout, results);
  return converged ? kOk : kNoConvergence;
}

int cmd_sweep(const std::vector<SweepRow>& rows, const std::string& out, const std::string& name) {
  auto f = open_out(out, name);
  write_sweep_csv(f, rows);
  write_sweep_csv(std::cout, rows);
  return kOk;
}

int cmd_check_a1(double alpha, double tau, double beta, const std::string& out) {
  const auto a1 = check_condition_a1(alpha, tau);
  const auto m = build_correction_matrices(alpha, tau, beta);
  const double g_min = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(0.5 * (m.G + m.G.transpose())).eigenvalues()(0);
  write_json(out, "a1.json",
             {{"alpha", alpha},
              {"tau", tau},
              {"beta", beta},
              {"holds", a1.holds},
              {"minors", a1.minors},
              {"min_eigenvalue", a1.min_eigenvalue},
              {"g_min_eigenvalue", g_min}});
  std::cout << "condition A1 " << (a1.holds ? "holds" : "fails") << ": minors " << a1.minors[0] << ", " << a1.minors[1] << ", " << a1.minors[2]
            << "; min eigenvalue " << a1.min_eigenvalue << "; min eigenvalue of G " << g_min << "\n";
  return kOk;
}

int cmd_verify(const std::string& scenario, const std::string& solution, double tol, double gap_tol, const std::string& out) {
  const Scenario s = load_valid(scenario);
  const auto sol = load_solution(solution, s);
  const auto rep = verify_equilibrium(s, sol.allocation, sol.prices, tol, gap_tol);
  write_json(out, "equilibrium.json",
             {{"ok", rep.ok()},
              {"mismatches", rep.mismatches},
              {"alternative_optima", rep.alternative_optima},
              {"gaps", {{"cso", rep.gaps.cso}, {"seso", rep.gaps.seso}, {"dso", rep.gaps.dso}}},
              {"coupling", {{"station_balance", rep.coupling.station_balance}, {"storage_exchange", rep.coupling.storage_exchange}}}});
  for (const auto& m : rep.mismatches) std::cout << "mismatch: " << m << "\n";
  for (const auto& m : rep.alternative_optima) std::cout << "note: " << m << "\n";
  std::cout << (rep.ok() ? "equilibrium verified" : "not an equilibrium") << " (largest best-response gap " << rep.gaps.max() << " $)\n";
  return rep.ok() ? kOk : kError;
}

int cmd_scale(const std::string& tpl_path, int groups, bool sweep, const CoordOptions& co, const std::string& out) {
  const auto tpl = load_scale_template(tpl_path);
  std::vector<ScalabilityRow> rows;
  bool converged = true;
  for (int g = sweep ? 1 : groups; g <= groups; ++g) {
    rows.push_back(scalability_run(tpl, g, co.params()));
    converged = converged && rows.back().converged;
  }
  auto f = open_out(out, "scalability.csv");
  write_scalability_csv(f, rows);
  write_scalability_csv(std::cout, rows);
  return converged ? kOk : kNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging stations with shared storage in a distribution network"};
  app.require_subcommand(1);
  std::string out = "out";
  auto out_opt = [&](CLI::App* sub) { sub->add_option("--out", out, "Output directory")->capture_default_str(); };

  std::string scenario, second;
  CoordOptions co;

  auto* central = app.add_subcommand("solve-central", "Solve the centralized problem");
  central->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  out_opt(central);

  auto* dist = app.add_subcommand("run-distributed", "Run the distributed coordination");
  dist->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  co.attach(dist);
  out_opt(dist);

  std::string variants = "b1,b2,b3,proposed";
  bool distributed = false;
  auto* bench = app.add_subcommand("benchmark", "Compare benchmark variants");
  bench->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--variant", variants, "Comma list of b1, b2, b3, proposed")->capture_default_str();
  bench->add_flag("--distributed", distributed, "Run the proposed variant with the distributed coordination");
  co.attach(bench);
  out_opt(bench);

  std::string multipliers = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5";
  auto* cap = app.add_subcommand("sweep-capacity", "Sweep the shared storage capacity");
  cap->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  cap->add_option("--multipliers", multipliers, "Comma list of ascending capacity multipliers")->capture_default_str();
  cap->add_option("--variants", variants, "Comma list of variants")->capture_default_str();
  out_opt(cap);

  std::string which = "bat", values;
  auto* coeff = app.add_subcommand("sweep-coeff", "Sweep a cost coefficient");
  coeff->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  coeff->add_option("--which", which, "bat or ev")->capture_default_str();
  coeff->add_option("--values", values, "Comma list of positive values (default: two decades around the default)");
  coeff->add_option("--variants", variants, "Comma list of variants")->capture_default_str();
  out_opt(coeff);

  double alpha = 0.9, tau = 0.0, beta = 1.0;
  auto* a1 = app.add_subcommand("check-a1", "Check the convergence condition on (alpha, tau)");
  a1->add_option("--alpha", alpha, "Correction step")->capture_default_str();
  a1->add_option("--tau", tau, "Correction blend")->capture_default_str();
  a1->add_option("--beta", beta, "Penalty used for the G matrix")->capture_default_str();
  out_opt(a1);

  double tol = 1e-3, gap_tol = 1e-4;
  auto* verify = app.add_subcommand("verify-equilibrium", "Audit an allocation and its prices");
  verify->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("allocation", second, "Solution JSON written by solve-central or run-distributed")->required()->check(CLI::ExistingFile);
  verify->add_option("--tol", tol, "Power mismatch tolerance, kW")->capture_default_str();
  verify->add_option("--gap-tol", gap_tol, "Best-response gap tolerance, $")->capture_default_str();
  out_opt(verify);

  int groups = 1;
  bool sweep = false;
  auto* scale = app.add_subcommand("scale", "Distributed run on replicated clusters");
  scale->add_option("template", scenario, "Scale template JSON")->required()->check(CLI::ExistingFile);
  scale->add_option("--groups", groups, "Number of clusters")->required()->check(CLI::PositiveNumber);
  scale->add_flag("--sweep", sweep, "Run every group count from 1 up to --groups");
  co.attach(scale);
  out_opt(scale);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*central) return cmd_solve_central(scenario, out);
    if (*dist) return cmd_run_distributed(scenario, co, out);
    if (*bench) return cmd_benchmark(scenario, variants, distributed, co, out);
    if (*cap) {
      const Scenario s = load_valid(scenario);
      return cmd_sweep(capacity_sweep(s, split_numbers(multipliers), parse_variants(variants)), out, "sweep_capacity.csv");
    }
    if (*coeff) {
      const Scenario s = load_valid(scenario);
      const Coefficient c = parse_coefficient(which);
      std::vector<double> v = split_numbers(values);
      if (v.empty()) {
        const double base = c == Coefficient::storage_degradation ? 0.01 : 1e-4;
        for (double f : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0}) v.push_back(base * f);
      }
      return cmd_sweep(coefficient_sweep(s, c, v, parse_variants(variants)), out, "sweep_coeff_" + which + ".csv");
    }
    if (*a1) return cmd_check_a1(alpha, tau, beta, out);
    if (*verify) return cmd_verify(scenario, second, tol, gap_tol, out);
    if (*scale) return cmd_scale(scenario, groups, sweep, co, out);
  } catch (const SolveFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.infeasible() ? kInfeasible : kNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
