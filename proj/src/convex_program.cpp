#include "evshare/convex_program.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace evshare::kernel {

double ConvexProgram::objective(const Vector& x) const {
  return 0.5 * x.dot(quadratic * x) + linear.dot(x) + constant;
}

std::string ConvexProgram::check_invariants() const {
  const int n = num_vars();
  std::ostringstream err;
  if (quadratic.rows() != n || quadratic.cols() != n) {
    err << "quadratic term is " << quadratic.rows() << "x" << quadratic.cols() << ", expected " << n;
    return err.str();
  }
  if (eq_matrix.cols() != n || eq_matrix.rows() != eq_rhs.size()) return "equality block dimensions inconsistent";
  if (ineq_matrix.cols() != n || ineq_matrix.rows() != ineq_rhs.size()) return "inequality block dimensions inconsistent";
  if (!variable_names.empty() && static_cast<int>(variable_names.size()) != n) return "variable name map has wrong length";

  SparseMatrix asym = SparseMatrix(quadratic.transpose()) - quadratic;
  for (int k = 0; k < asym.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(asym, k); it; ++it) {
      if (std::abs(it.value()) > 1e-12 * (1.0 + std::abs(quadratic.coeff(it.row(), it.col())))) {
        return "quadratic term is not symmetric";
      }
    }
  }
  // Dense eigen-decomposition is only affordable for small programs.
  if (n > 0 && n <= 400) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(quadratic), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) return "quadratic term is not positive semidefinite";
  } else {
    for (int i = 0; i < n; ++i) {
      if (quadratic.coeff(i, i) < -1e-9) return "quadratic term has a negative diagonal entry";
    }
  }

  std::vector<char> is_head(static_cast<size_t>(n), 0);
  for (size_t c = 0; c < cones.size(); ++c) {
    const auto& cone = cones[c];
    if (cone.head < 0 || cone.head >= n) return "cone block " + std::to_string(c) + " has an invalid head";
    if (is_head[static_cast<size_t>(cone.head)]) return "variable heads more than one cone block";
    is_head[static_cast<size_t>(cone.head)] = 1;
    for (int u : cone.tail) {
      if (u < 0 || u >= n) return "cone block " + std::to_string(c) + " has an invalid tail index";
    }
  }
  return {};
}

int ProgramBuilder::add_variable(std::string name) {
  names_.push_back(std::move(name));
  linear_.push_back(0.0);
  return static_cast<int>(names_.size()) - 1;
}

void ProgramBuilder::add_linear(int var, double coef) { linear_.at(static_cast<size_t>(var)) += coef; }

void ProgramBuilder::add_quadratic(int i, int j, double coef) {
  // objective coef*x_i*x_j == 0.5 x'Px with P_ij = P_ji = coef (i != j), P_ii = 2 coef
  if (i == j) {
    quad_.emplace_back(i, i, 2.0 * coef);
  } else {
    quad_.emplace_back(i, j, coef);
    quad_.emplace_back(j, i, coef);
  }
}

void ProgramBuilder::add_squared_affine(double weight, const std::vector<Term>& terms, double offset) {
  for (size_t a = 0; a < terms.size(); ++a) {
    for (size_t b = 0; b < terms.size(); ++b) {
      quad_.emplace_back(terms[a].var, terms[b].var, 2.0 * weight * terms[a].coef * terms[b].coef);
    }
    add_linear(terms[a].var, 2.0 * weight * offset * terms[a].coef);
  }
  constant_ += weight * offset * offset;
}

int ProgramBuilder::add_equality(const std::vector<Term>& terms, double rhs) {
  const int row = num_eq();
  for (const auto& t : terms) eq_.emplace_back(row, t.var, t.coef);
  eq_rhs_.push_back(rhs);
  return row;
}

int ProgramBuilder::add_inequality(const std::vector<Term>& terms, double rhs) {
  const int row = num_ineq();
  for (const auto& t : terms) ineq_.emplace_back(row, t.var, t.coef);
  ineq_rhs_.push_back(rhs);
  return row;
}

void ProgramBuilder::add_cone(int head, std::vector<int> tail) { cones_.push_back({head, std::move(tail)}); }

ConvexProgram ProgramBuilder::build() const {
  const int n = num_vars();
  ConvexProgram p;
  p.quadratic.resize(n, n);
  p.quadratic.setFromTriplets(quad_.begin(), quad_.end());
  p.linear = Eigen::Map<const Vector>(linear_.data(), n);
  p.constant = constant_;
  p.eq_matrix.resize(num_eq(), n);
  p.eq_matrix.setFromTriplets(eq_.begin(), eq_.end());
  p.eq_rhs = Eigen::Map<const Vector>(eq_rhs_.data(), num_eq());
  p.ineq_matrix.resize(num_ineq(), n);
  p.ineq_matrix.setFromTriplets(ineq_.begin(), ineq_.end());
  p.ineq_rhs = Eigen::Map<const Vector>(ineq_rhs_.data(), num_ineq());
  p.cones = cones_;
  p.variable_names = names_;
  return p;
}

namespace {

void dump_sparse(std::ostream& os, const char* label, const SparseMatrix& m) {
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> rm(m);
  os << label << " " << rm.rows() << " " << rm.cols() << " " << rm.nonZeros() << "\n";
  for (int r = 0; r < rm.outerSize(); ++r) {
    for (decltype(rm)::InnerIterator it(rm, r); it; ++it) {
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
}

void dump_vector(std::ostream& os, const char* label, const Vector& v) {
  os << label << " " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << "\n";
}

}  // namespace

void dump_program(std::ostream& os, const ConvexProgram& p) {
  const auto old_precision = os.precision(17);
  os << "vars " << p.num_vars() << "\n";
  for (int i = 0; i < p.num_vars(); ++i) {
    os << i << " " << (p.variable_names.empty() ? std::string("x") + std::to_string(i) : p.variable_names[static_cast<size_t>(i)]) << "\n";
  }
  dump_sparse(os, "P", p.quadratic);
  dump_vector(os, "q", p.linear);
  os << "constant " << p.constant << "\n";
  dump_sparse(os, "A", p.eq_matrix);
  dump_vector(os, "b", p.eq_rhs);
  dump_sparse(os, "G", p.ineq_matrix);
  dump_vector(os, "h", p.ineq_rhs);
  os << "cones " << p.cones.size() << "\n";
  for (const auto& c : p.cones) {
    os << c.head;
    for (int u : c.tail) os << " " << u;
    os << "\n";
  }
  os.precision(old_precision);
}

}  // namespace evshare::kernel
