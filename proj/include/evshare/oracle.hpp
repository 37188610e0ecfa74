#pragma once

#include "evshare/conic_solver.hpp"
#include "evshare/system_model.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace evshare {

// A program that did not reach optimality. status tells infeasibility apart
// from numerical trouble.
class SolveFailure : public std::runtime_error {
 public:
  SolveFailure(const std::string& what, kernel::SolveStatus status) : std::runtime_error(what), status_(status) {}
  kernel::SolveStatus status() const { return status_; }
  bool infeasible() const { return status_ == kernel::SolveStatus::infeasible; }

 private:
  kernel::SolveStatus status_;
};

// Solves and throws SolveFailure (message prefixed by context) unless optimal.
// Tighter than the kernel default. Equilibrium audits compare re-solved
// schedules at 1e-3 kW, and near-tied slots amplify a loose duality gap.
kernel::Tolerances oracle_tolerances();

kernel::ConicSolution solve_or_throw(const kernel::ConvexProgram& p, const std::string& context, const kernel::Tolerances& tol = {});

struct CostBreakdown {
  std::vector<double> station;  // C_cs,i
  std::vector<double> storage;  // C_bat,b
  double network = 0.0;         // C_ds
  double total = 0.0;
};
CostBreakdown system_costs(const Scenario& s, const Allocation& a);

struct CentralResult {
  Allocation allocation;
  PriceSystem prices;
  double objective = 0.0;
  double relaxation_gap = 0.0;  // p.u.
  int iterations = 0;
  double seconds = 0.0;
};

CentralResult solve_centralized(const Scenario& s, const ModelOptions& opt = {}, const kernel::Tolerances& tol = oracle_tolerances());

// Agent objectives at fixed prices; trading terms use the Lagrangian sign so
// that the three stakeholder costs add up to the system cost.
struct AgentCosts {
  std::vector<double> cso;   // C_cs,i + sum price (p_g + p_b) dt
  std::vector<double> seso;  // C_bat,b - sum price p_b dt - sum mu p_b,g dt
  double dso = 0.0;          // C_ds - sum price p_g dt - sum mu p_g,b dt
};
AgentCosts agent_costs(const Scenario& s, const Allocation& a, const PriceSystem& p);

struct AgentGaps {
  std::vector<double> cso, seso;
  double dso = 0.0;
  double max() const;
  double min() const;
};

// Best responses of every agent at fixed prices; each agent's own optimum.
struct BestResponses {
  AgentCosts optimal;
  std::vector<std::vector<double>> station_demand;  // [station][t]
  std::vector<StorageSchedule> storages;
  FlowState flow;
};
BestResponses best_responses(const Scenario& s, const PriceSystem& p, const kernel::Tolerances& tol = oracle_tolerances());

// cost at the allocation minus the agent's optimal cost, per agent
AgentGaps agent_best_response_gap(const Scenario& s, const Allocation& a, const PriceSystem& p);

struct EquilibriumReport {
  std::vector<std::string> mismatches;
  // Trades that differ from the re-solve but cost the agent no more than
  // its optimum (the agent has several optimal trades).
  std::vector<std::string> alternative_optima;
  AgentGaps gaps;
  CouplingResidual coupling;
  bool ok() const { return mismatches.empty(); }
};

// tol bounds power mismatches (kW); gap_tol bounds the cost an agent leaves
// on the table ($).
EquilibriumReport verify_equilibrium(const Scenario& s, const Allocation& a, const PriceSystem& p, double tol = 1e-3, double gap_tol = 1e-4);

// Bilateral payments C_{x-y} (what x books for trading with y; negative
// means x earns) and stakeholder totals.
struct ProfitAllocation {
  std::vector<std::string> parties;             // stations, storages, then "DSO"
  std::vector<std::vector<double>> payments;    // payments[x][y] = C_{x-y}
  std::vector<double> station_own, storage_own;  // C_cs,i and C_bat,b
  double network_own = 0.0;                      // C_ds
  std::vector<double> cso, seso;
  double dso = 0.0;
  double total = 0.0;
};
ProfitAllocation profit_allocation(const Scenario& s, const Allocation& a, const PriceSystem& p);

}  // namespace evshare
