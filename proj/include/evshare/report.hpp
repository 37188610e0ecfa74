#pragma once

// CSV and JSON writers for traces, tables and solutions.

#include "evshare/bench.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace evshare {

// k,cso_total,seso_total,dso,total,lambda_gap,mu_gap,coupling_resid
void write_trace_csv(std::ostream& out, const IterationTrace& trace);

// One row per stakeholder and variant, plus a "total" row per variant.
// Columns: variant,stakeholder,cost
void write_cost_table_csv(std::ostream& out, const std::vector<ExperimentResult>& results);

// variant,total,reduction_pct,seconds,iterations,converged,relaxation_gap
void write_summary_csv(std::ostream& out, const std::vector<ExperimentResult>& results);

// Payment matrix: row x, column y holds C_{x-y}; trailing own and total columns.
void write_payments_csv(std::ostream& out, const ProfitAllocation& pa);

// value,variant,total,cso_total,seso_total,dso,storage_throughput
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// groups,stations,storages,evs,iterations,converged,wall_seconds,mean_cso_seconds,mean_seso_seconds,mean_dso_seconds,total_cost
void write_scalability_csv(std::ostream& out, const std::vector<ScalabilityRow>& rows);

// Allocation and prices as one JSON document; load checks the shapes
// against the scenario and throws ScenarioError on mismatch.
void save_solution(const std::string& path, const Scenario& s, const Allocation& a, const PriceSystem& p);
struct Solution {
  Allocation allocation;
  PriceSystem prices;
};
Solution load_solution(const std::string& path, const Scenario& s);

}  // namespace evshare
