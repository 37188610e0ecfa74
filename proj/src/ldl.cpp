#include "ldl.hpp"

#include <Eigen/OrderingMethods>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace evshare::kernel::detail {

void QuasiDefiniteLdl::analyze(const Matrix& lower, std::vector<int> sign) {
  n_ = static_cast<int>(lower.rows());
  if (lower.cols() != n_ || static_cast<int>(sign.size()) != n_) throw std::invalid_argument("ldl: shape mismatch");
  if (!lower.isCompressed()) throw std::invalid_argument("ldl: matrix must be compressed");

  Matrix full;
  full = lower.selfadjointView<Eigen::Lower>();
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  Eigen::AMDOrdering<int> amd;
  amd(full, pinv);
  perm_ = pinv.inverse();
  const auto& to = perm_.indices();

  // Upper triangle of the permuted matrix, column by column.
  struct Entry {
    int row, col, src;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<size_t>(lower.nonZeros()));
  for (int c = 0; c < n_; ++c) {
    for (int k = lower.outerIndexPtr()[c]; k < lower.outerIndexPtr()[c + 1]; ++k) {
      const int r = lower.innerIndexPtr()[k];
      const int a = to[r], b = to[c];
      entries.push_back({std::min(a, b), std::max(a, b), k});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.col != y.col ? x.col < y.col : x.row < y.row; });
  up_p_.assign(static_cast<size_t>(n_ + 1), 0);
  up_i_.resize(entries.size());
  up_x_.assign(entries.size(), 0.0);
  map_.assign(entries.size(), 0);
  for (size_t e = 0; e < entries.size(); ++e) {
    up_p_[static_cast<size_t>(entries[e].col + 1)]++;
    up_i_[e] = entries[e].row;
    map_[static_cast<size_t>(entries[e].src)] = static_cast<int>(e);
  }
  for (int j = 0; j < n_; ++j) up_p_[static_cast<size_t>(j + 1)] += up_p_[static_cast<size_t>(j)];

  sign_.assign(static_cast<size_t>(n_), 1);
  for (int i = 0; i < n_; ++i) sign_[static_cast<size_t>(to[i])] = sign[static_cast<size_t>(i)] >= 0 ? 1 : -1;

  // Elimination tree and column counts.
  etree_.assign(static_cast<size_t>(n_), -1);
  std::vector<int> lnz(static_cast<size_t>(n_), 0), work(static_cast<size_t>(n_), -1);
  for (int j = 0; j < n_; ++j) {
    work[static_cast<size_t>(j)] = j;
    for (int p = up_p_[static_cast<size_t>(j)]; p < up_p_[static_cast<size_t>(j + 1)]; ++p) {
      int i = up_i_[static_cast<size_t>(p)];
      while (i != j && work[static_cast<size_t>(i)] != j) {
        if (etree_[static_cast<size_t>(i)] == -1) etree_[static_cast<size_t>(i)] = j;
        lnz[static_cast<size_t>(i)]++;
        work[static_cast<size_t>(i)] = j;
        i = etree_[static_cast<size_t>(i)];
      }
    }
  }
  lp_.assign(static_cast<size_t>(n_ + 1), 0);
  for (int i = 0; i < n_; ++i) lp_[static_cast<size_t>(i + 1)] = lp_[static_cast<size_t>(i)] + lnz[static_cast<size_t>(i)];
  li_.assign(static_cast<size_t>(lp_.back()), 0);
  lx_.assign(static_cast<size_t>(lp_.back()), 0.0);
  d_.assign(static_cast<size_t>(n_), 0.0);
  dinv_.assign(static_cast<size_t>(n_), 0.0);
}

int QuasiDefiniteLdl::factor(const Matrix& lower) {
  if (static_cast<size_t>(lower.nonZeros()) != map_.size()) throw std::invalid_argument("ldl: pattern changed since analysis");
  const double* val = lower.valuePtr();
  for (size_t k = 0; k < map_.size(); ++k) up_x_[static_cast<size_t>(map_[k])] = val[k];

  const size_t n = static_cast<size_t>(n_);
  std::vector<double> y(n, 0.0);
  std::vector<char> marked(n, 0);
  std::vector<int> pattern(n), stack(n), next(lp_.begin(), lp_.end() - 1);
  int regularized = 0;

  for (int k = 0; k < n_; ++k) {
    const size_t uk = static_cast<size_t>(k);
    double dk = 0.0;
    int top = 0;
    // Nonzero pattern of row k of L: reach of the column's entries in the etree.
    for (int p = up_p_[uk]; p < up_p_[uk + 1]; ++p) {
      const int i = up_i_[static_cast<size_t>(p)];
      if (i == k) {
        dk = up_x_[static_cast<size_t>(p)];
        continue;
      }
      y[static_cast<size_t>(i)] = up_x_[static_cast<size_t>(p)];
      int len = 0;
      for (int j = i; j != -1 && j < k && !marked[static_cast<size_t>(j)]; j = etree_[static_cast<size_t>(j)]) {
        marked[static_cast<size_t>(j)] = 1;
        stack[static_cast<size_t>(len++)] = j;
      }
      while (len > 0) pattern[static_cast<size_t>(top++)] = stack[static_cast<size_t>(--len)];
    }
    // Topological order: process in reverse of discovery.
    for (int q = top - 1; q >= 0; --q) {
      const size_t c = static_cast<size_t>(pattern[static_cast<size_t>(q)]);
      const double yc = y[c];
      const int end = next[c];
      for (int j = lp_[c]; j < end; ++j) y[static_cast<size_t>(li_[static_cast<size_t>(j)])] -= lx_[static_cast<size_t>(j)] * yc;
      const double l = yc * dinv_[c];
      li_[static_cast<size_t>(end)] = k;
      lx_[static_cast<size_t>(end)] = l;
      dk -= yc * l;
      next[c]++;
      y[c] = 0.0;
      marked[c] = 0;
    }
    if (sign_[uk] * dk <= eps_) {
      dk = sign_[uk] * delta_;
      ++regularized;
    }
    d_[uk] = dk;
    dinv_[uk] = 1.0 / dk;
  }
  return regularized;
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& b) const {
  const auto& to = perm_.indices();
  Eigen::VectorXd x(n_);
  for (int i = 0; i < n_; ++i) x[to[i]] = b[i];
  for (int c = 0; c < n_; ++c) {
    const double xc = x[c];
    if (xc == 0.0) continue;
    for (int j = lp_[static_cast<size_t>(c)]; j < lp_[static_cast<size_t>(c + 1)]; ++j) x[li_[static_cast<size_t>(j)]] -= lx_[static_cast<size_t>(j)] * xc;
  }
  for (int i = 0; i < n_; ++i) x[i] *= dinv_[static_cast<size_t>(i)];
  for (int c = n_ - 1; c >= 0; --c) {
    double s = x[c];
    for (int j = lp_[static_cast<size_t>(c)]; j < lp_[static_cast<size_t>(c + 1)]; ++j) s -= lx_[static_cast<size_t>(j)] * x[li_[static_cast<size_t>(j)]];
    x[c] = s;
  }
  Eigen::VectorXd out(n_);
  for (int i = 0; i < n_; ++i) out[i] = x[to[i]];
  return out;
}

}  // namespace evshare::kernel::detail
