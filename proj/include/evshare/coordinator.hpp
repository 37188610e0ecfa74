#pragma once

#include "evshare/oracle.hpp"
#include "evshare/system_model.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace evshare {

// main_text: duals move toward their predictions only.
// appendix: duals also take the beta-weighted primal corrections implied by
// the third row (-beta, -beta, 1) of the correction matrix.
enum class DualVariant { main_text, appendix };
std::string to_string(DualVariant v);
DualVariant parse_dual_variant(const std::string& name);  // "main", "main_text" or "appendix"

struct CoordinationParams {
  double beta = 1e-3;  // $ per kW^2 per slot
  double alpha = 0.9;
  double tau = 0.0;
  double delta = 1e-3;
  int max_iterations = 500;
  DualVariant dual_variant = DualVariant::appendix;
  // Also require beta * ||change of the exchange iterates|| <= delta before
  // stopping. Dual gaps alone can fall below delta while the trades between
  // agents are still moving.
  bool primal_check = true;
  kernel::Tolerances tol;
};

struct ConditionA1 {
  bool holds = false;
  double min_eigenvalue = 0.0;
  std::array<double, 3> minors{};
  Eigen::Matrix3d matrix;
};
ConditionA1 check_condition_a1(double alpha, double tau);

struct CorrectionMatrices {
  Eigen::Matrix3d M, H, G, Q;
};
// H from its closed form, G = Q' + Q - alpha M' H M.
CorrectionMatrices build_correction_matrices(double alpha, double tau, double beta);

// Iterate of the coordination. Power in kW per [station][t] or
// [storage][t]; lambda and mu are the multipliers of the coupling rows in
// $ per kW per slot (price * slot_hours).
struct CoordinationState {
  std::vector<std::vector<double>> demand;           // p_d
  std::vector<std::vector<double>> to_grid;          // p_g
  std::vector<std::vector<double>> to_storage;       // p_b
  std::vector<std::vector<double>> storage_from_grid;  // p_b,g, received by the storage
  std::vector<std::vector<double>> grid_from_storage;  // p_g,b, received by the grid
  std::vector<std::vector<double>> lambda, mu;
  int k = 0;

  // Which series exist: stations without storage keep p_b = 0, storages
  // without grid access keep p_b,g = p_g,b = 0.
  std::vector<bool> station_has_storage;
  std::vector<bool> storage_has_grid;
};

CoordinationState zero_state(const Scenario& s);
// Starts from a given allocation and price system (used for fixed-point checks).
CoordinationState state_from(const Scenario& s, const Allocation& a, const PriceSystem& p);
PriceSystem prices_of(const Scenario& s, const CoordinationState& st);

struct Prediction {
  CoordinationState tilde;  // p~ quantities with lambda~ and mu~
  // Dual prediction taken against the previous storage and grid iterates,
  // lambda^k - beta (p~_d + p_b^k + p_g^k - pv). The matrix-form correction
  // acts on this one.
  std::vector<std::vector<double>> lagged_lambda, lagged_mu;
  Allocation allocation;  // the agents' own schedules behind p~
  std::vector<double> cso_seconds, seso_seconds;
  double dso_seconds = 0.0;
};

Prediction prediction_step(const Scenario& s, const CoordinationState& state, double beta, const kernel::Tolerances& tol = {});
CoordinationState correction_step(const CoordinationState& state, const CoordinationState& tilde, const CoordinationParams& params);

struct TraceRow {
  int k = 0;
  std::vector<double> cso, seso;  // stakeholder costs at the predicted allocation and new prices
  double cso_total = 0.0, seso_total = 0.0, dso = 0.0;
  double total = 0.0;  // system cost of the predicted allocation
  double lambda_gap = 0.0, mu_gap = 0.0;
  double primal_gap = 0.0;  // beta * ||(p_b, p_g, p_b,g, p_g,b) change||
  double coupling_resid = 0.0;  // kW, max over both coupling families
};

struct IterationTrace {
  std::vector<TraceRow> rows;
};

enum class CoordinationStatus { converged, max_iter, diverged };
std::string to_string(CoordinationStatus s);

struct CoordinationResult {
  Allocation allocation;  // predicted schedules of the last iteration
  PriceSystem prices;     // $/kWh, from the last corrected duals
  IterationTrace trace;
  CoordinationStatus status = CoordinationStatus::max_iter;
  int iterations = 0;
  CoordinationState state;
  double wall_seconds = 0.0;
  double cso_seconds = 0.0, seso_seconds = 0.0, dso_seconds = 0.0;  // summed solve times
  int cso_solves = 0, seso_solves = 0, dso_solves = 0;
  bool converged() const { return status == CoordinationStatus::converged; }
};

// Throws std::invalid_argument when the parameters violate condition A1 or
// are out of range, SolveFailure when a subproblem fails.
CoordinationResult run_coordination(const Scenario& s, const CoordinationParams& params = {});
CoordinationResult run_coordination(const Scenario& s, const CoordinationParams& params, CoordinationState start);

}  // namespace evshare
