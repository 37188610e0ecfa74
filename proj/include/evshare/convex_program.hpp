#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <string>
#include <vector>

namespace evshare::kernel {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

// x[head] >= || x[tail] ||_2
struct ConeBlock {
  int head = -1;
  std::vector<int> tail;
};

// minimize   0.5 x'Px + q'x + constant
// subject to Ax = b, Gx <= h, and every cone block.
struct ConvexProgram {
  SparseMatrix quadratic;  // full symmetric storage
  Vector linear;
  double constant = 0.0;
  SparseMatrix eq_matrix;
  Vector eq_rhs;
  SparseMatrix ineq_matrix;
  Vector ineq_rhs;
  std::vector<ConeBlock> cones;
  std::vector<std::string> variable_names;

  int num_vars() const { return static_cast<int>(linear.size()); }
  int num_eq() const { return static_cast<int>(eq_rhs.size()); }
  int num_ineq() const { return static_cast<int>(ineq_rhs.size()); }

  double objective(const Vector& x) const;

  // Returns an empty string when the program is well formed, otherwise a
  // description of the first problem found.
  std::string check_invariants() const;
};

struct Term {
  int var;
  double coef;
};

// Incremental assembly of a ConvexProgram. Duplicate entries are summed.
class ProgramBuilder {
 public:
  int add_variable(std::string name);
  int num_vars() const { return static_cast<int>(names_.size()); }

  void add_linear(int var, double coef);
  void add_constant(double c) { constant_ += c; }
  // Adds coef * x_i * x_j to the objective (i == j gives coef * x_i^2).
  void add_quadratic(int i, int j, double coef);
  // Adds weight * (sum terms + offset)^2.
  void add_squared_affine(double weight, const std::vector<Term>& terms, double offset);

  int add_equality(const std::vector<Term>& terms, double rhs);
  int add_inequality(const std::vector<Term>& terms, double rhs);  // <= rhs
  void add_upper_bound(int var, double ub) { add_inequality({{var, 1.0}}, ub); }
  void add_lower_bound(int var, double lb) { add_inequality({{var, -1.0}}, -lb); }
  void add_cone(int head, std::vector<int> tail);

  int num_eq() const { return static_cast<int>(eq_rhs_.size()); }
  int num_ineq() const { return static_cast<int>(ineq_rhs_.size()); }

  ConvexProgram build() const;

 private:
  using Triplet = Eigen::Triplet<double, int>;
  std::vector<std::string> names_;
  std::vector<double> linear_;
  double constant_ = 0.0;
  std::vector<Triplet> quad_;
  std::vector<Triplet> eq_;
  std::vector<double> eq_rhs_;
  std::vector<Triplet> ineq_;
  std::vector<double> ineq_rhs_;
  std::vector<ConeBlock> cones_;
};

// Plain-text listing of all program data (row-major, decimal), for
// cross-checking with external tools.
void dump_program(std::ostream& os, const ConvexProgram& p);

}  // namespace evshare::kernel
