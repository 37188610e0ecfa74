#pragma once

#include "evshare/convex_program.hpp"

#include <string>

namespace evshare::kernel {

enum class SolveStatus { optimal, infeasible, unbounded, max_iter };

std::string to_string(SolveStatus s);

struct Tolerances {
  double feasibility = 1e-8;  // relative primal and dual residual
  double absolute_gap = 1e-8;
  double relative_gap = 1e-8;
  int max_iterations = 200;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

// Dual sign convention: P x + q + A'y + G'z - sum_k S_k' w_k = 0 where S_k
// selects the variables of cone block k, z >= 0 and every w_k lies in the
// second-order cone. ineq_duals = z, cone_duals = stacked w_k.
struct ConicSolution {
  Vector primal;
  Vector eq_duals;
  Vector ineq_duals;
  Vector cone_duals;
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  Residuals residuals;
  int iterations = 0;

  bool ok() const { return status == SolveStatus::optimal; }
};

ConicSolution solve(const ConvexProgram& program, const Tolerances& tol = {});

// Recomputes feasibility, stationarity and complementarity from the program
// data, independently of what the solver reported.
Residuals kkt_residuals(const ConvexProgram& program, const ConicSolution& solution);

// Maps a kernel equality dual to the coordination price sign (the
// augmented Lagrangian subtracts price * residual).
constexpr double price_from_dual(double eq_dual) { return -eq_dual; }

}  // namespace evshare::kernel
