#pragma once

// Sparse LDL' factorization of quasi-definite matrices with signed dynamic
// pivot regularization. Internal to the conic solver.

#include <Eigen/Sparse>

#include <vector>

namespace evshare::kernel::detail {

class QuasiDefiniteLdl {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  // lower: lower triangle (diagonal included) of the matrix whose pattern
  // stays fixed across factorizations. sign[i] is +1 for rows expected to
  // give positive pivots, -1 otherwise.
  void analyze(const Matrix& lower, std::vector<int> sign);
  // Returns the number of pivots that had to be regularized.
  int factor(const Matrix& lower);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  void set_dynamic_regularization(double eps, double delta) {
    eps_ = eps;
    delta_ = delta;
  }

 private:
  int n_ = 0;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;  // original -> permuted
  std::vector<int> map_;        // lower-triangle entry -> slot in upper_
  std::vector<int> up_p_, up_i_;
  std::vector<double> up_x_;
  std::vector<int> etree_, lp_, li_;
  std::vector<double> lx_, d_, dinv_;
  std::vector<int> sign_;  // permuted order
  double eps_ = 1e-13;
  double delta_ = 2e-7;
};

}  // namespace evshare::kernel::detail
