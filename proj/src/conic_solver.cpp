// Primal-dual interior-point method for convex quadratic programs with
// linear inequalities and second-order cones. Nesterov-Todd scaling,
// Mehrotra predictor-corrector, sparse LDL' of the quasi-definite KKT
// system with static regularization and iterative refinement.

#include "evshare/conic_solver.hpp"

#include "ldl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evshare::kernel {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRegPrimal = 1e-9;
constexpr double kRegDual = 1e-9;
constexpr double kStepFraction = 0.99;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Cone K = R_+^ml x SOC(dims[0]) x SOC(dims[1]) ...
struct ConeLayout {
  int ml = 0;
  std::vector<int> start;
  std::vector<int> dim;
  int m = 0;
  int degree() const { return ml + static_cast<int>(dim.size()); }
};

struct Scaling {
  Vector d;                 // orthant part: W = diag(d)
  std::vector<double> eta;  // SOC part: W = eta * Wbar(w)
  std::vector<Vector> w;    // normalized, w'Jw = 1
};

double soc_jnorm(const Eigen::Ref<const Vector>& x) {
  const double t = x[0];
  const double u = x.tail(x.size() - 1).norm();
  return std::sqrt(std::max((t - u) * (t + u), 0.0));
}

Vector jordan_product(const ConeLayout& c, const Vector& u, const Vector& v) {
  Vector r(c.m);
  r.head(c.ml) = u.head(c.ml).cwiseProduct(v.head(c.ml));
  for (size_t k = 0; k < c.dim.size(); ++k) {
    const int s = c.start[k], n = c.dim[k];
    r[s] = u.segment(s, n).dot(v.segment(s, n));
    r.segment(s + 1, n - 1) = u[s] * v.segment(s + 1, n - 1) + v[s] * u.segment(s + 1, n - 1);
  }
  return r;
}

// Solves lambda o x = r.
Vector jordan_divide(const ConeLayout& c, const Vector& lambda, const Vector& r) {
  Vector x(c.m);
  x.head(c.ml) = r.head(c.ml).cwiseQuotient(lambda.head(c.ml));
  for (size_t k = 0; k < c.dim.size(); ++k) {
    const int s = c.start[k], n = c.dim[k];
    const double l0 = lambda[s];
    const auto l1 = lambda.segment(s + 1, n - 1);
    const double det = (l0 - l1.norm()) * (l0 + l1.norm());
    const double x0 = (l0 * r[s] - l1.dot(r.segment(s + 1, n - 1))) / det;
    x[s] = x0;
    x.segment(s + 1, n - 1) = (r.segment(s + 1, n - 1) - x0 * l1) / l0;
  }
  return x;
}

Vector identity_element(const ConeLayout& c) {
  Vector e = Vector::Zero(c.m);
  e.head(c.ml).setOnes();
  for (int s : c.start) e[s] = 1.0;
  return e;
}

// Smallest eigenvalue over all blocks (x is interior iff > 0).
double min_eigenvalue(const ConeLayout& c, const Vector& x) {
  double me = kInf;
  if (c.ml > 0) me = x.head(c.ml).minCoeff();
  for (size_t k = 0; k < c.dim.size(); ++k) {
    const int s = c.start[k], n = c.dim[k];
    me = std::min(me, x[s] - x.segment(s + 1, n - 1).norm());
  }
  return me;
}

// Largest a >= 0 with x + a*dx in the cone (x interior).
double max_step(const ConeLayout& c, const Vector& x, const Vector& dx) {
  double amax = kInf;
  for (int i = 0; i < c.ml; ++i) {
    if (dx[i] < 0) amax = std::min(amax, -x[i] / dx[i]);
  }
  for (size_t k = 0; k < c.dim.size(); ++k) {
    const int s = c.start[k], n = c.dim[k];
    const auto x1 = x.segment(s + 1, n - 1);
    const auto d1 = dx.segment(s + 1, n - 1);
    const double a = dx[s] * dx[s] - d1.squaredNorm();
    const double b = x[s] * dx[s] - x1.dot(d1);
    const double cc = std::max((x[s] - x1.norm()) * (x[s] + x1.norm()), 0.0);
    const double disc = b * b - a * cc;
    // a > 0 with b < 0 means dx points into -K, so the boundary is always hit
    // even if rounding makes the discriminant slightly negative.
    if (a >= 0 && b >= 0) continue;
    const double denom = -b + std::sqrt(std::max(disc, 0.0));
    if (denom <= 0) continue;
    amax = std::min(amax, cc / denom);
  }
  return amax;
}

Scaling compute_scaling(const ConeLayout& c, const Vector& s, const Vector& z) {
  Scaling sc;
  sc.d = (s.head(c.ml).cwiseQuotient(z.head(c.ml))).cwiseSqrt();
  sc.eta.resize(c.dim.size());
  sc.w.resize(c.dim.size());
  for (size_t k = 0; k < c.dim.size(); ++k) {
    const int st = c.start[k], n = c.dim[k];
    const double a = soc_jnorm(s.segment(st, n));
    const double b = soc_jnorm(z.segment(st, n));
    const Vector sb = s.segment(st, n) / a;
    const Vector zb = z.segment(st, n) / b;
    const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
    Vector w(n);
    w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
    w.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2.0 * gamma);
    sc.eta[k] = std::sqrt(a / b);
    sc.w[k] = std::move(w);
  }
  return sc;
}

// y = W x (W is symmetric on every block).
Vector apply_w(const ConeLayout& c, const Scaling& sc, const Vector& x, bool inverse) {
  Vector y(c.m);
  if (inverse) {
    y.head(c.ml) = x.head(c.ml).cwiseQuotient(sc.d);
  } else {
    y.head(c.ml) = x.head(c.ml).cwiseProduct(sc.d);
  }
  for (size_t k = 0; k < c.dim.size(); ++k) {
    const int s = c.start[k], n = c.dim[k];
    const Vector& w = sc.w[k];
    const double eta = inverse ? 1.0 / sc.eta[k] : sc.eta[k];
    const double sign = inverse ? -1.0 : 1.0;
    const auto x1 = x.segment(s + 1, n - 1);
    const auto w1 = w.tail(n - 1);
    const double w1x1 = w1.dot(x1);
    y[s] = eta * (w[0] * x[s] + sign * w1x1);
    y.segment(s + 1, n - 1) = eta * (x1 + (w1x1 / (1.0 + w[0]) + sign * x[s]) * w1);
  }
  return y;
}

class KktSystem {
 public:
  KktSystem(const ConvexProgram& prog, const SparseMatrix& gfull, const ConeLayout& cones)
      : p_(prog), g_(gfull), c_(cones), n_(prog.num_vars()), neq_(prog.num_eq()) {
    const int dim = n_ + neq_ + c_.m;
    using Triplet = Eigen::Triplet<double, int>;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(prog.quadratic.nonZeros() + prog.eq_matrix.nonZeros() + g_.nonZeros() + dim));
    for (int k = 0; k < prog.quadratic.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(prog.quadratic, k); it; ++it) {
        if (it.row() >= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, kRegPrimal);
    for (int k = 0; k < prog.eq_matrix.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(prog.eq_matrix, k); it; ++it) {
        trip.emplace_back(n_ + it.row(), it.col(), it.value());
      }
    }
    for (int i = 0; i < neq_; ++i) trip.emplace_back(n_ + i, n_ + i, -kRegDual);
    for (int k = 0; k < g_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(g_, k); it; ++it) {
        trip.emplace_back(n_ + neq_ + it.row(), it.col(), it.value());
      }
    }
    const int off = n_ + neq_;
    for (int i = 0; i < c_.ml; ++i) trip.emplace_back(off + i, off + i, -1.0);
    for (size_t k = 0; k < c_.dim.size(); ++k) {
      const int s = c_.start[k], n = c_.dim[k];
      for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) trip.emplace_back(off + s + i, off + s + j, i == j ? -1.0 : 0.0);
      }
    }
    k_.resize(dim, dim);
    k_.setFromTriplets(trip.begin(), trip.end());
    k_.makeCompressed();

    // Locate the scaling block entries so they can be updated in place.
    auto locate = [this](int r, int col) {
      const int* inner = k_.innerIndexPtr();
      const int b = k_.outerIndexPtr()[col], e = k_.outerIndexPtr()[col + 1];
      const int* pos = std::lower_bound(inner + b, inner + e, r);
      return static_cast<int>(pos - inner);
    };
    for (int i = 0; i < c_.ml; ++i) diag_pos_.push_back(locate(off + i, off + i));
    soc_pos_.resize(c_.dim.size());
    for (size_t k = 0; k < c_.dim.size(); ++k) {
      const int s = c_.start[k], n = c_.dim[k];
      for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) soc_pos_[k].push_back(locate(off + s + i, off + s + j));
      }
      // The regularized static diagonal was merged into these entries; record
      // them separately.
    }
    std::vector<int> sign(static_cast<size_t>(dim), -1);
    std::fill(sign.begin(), sign.begin() + n_, 1);
    ldl_.analyze(k_, std::move(sign));
  }

  // Sets the (3,3) block to -W'W - reg and factors.
  bool factor(const Scaling& sc) {
    sc_ = &sc;
    double* val = k_.valuePtr();
    for (int i = 0; i < c_.ml; ++i) val[diag_pos_[static_cast<size_t>(i)]] = -sc.d[i] * sc.d[i] - kRegDual;
    for (size_t k = 0; k < c_.dim.size(); ++k) {
      const int n = c_.dim[k];
      const Vector& w = sc.w[k];
      const double e2 = sc.eta[k] * sc.eta[k];
      size_t idx = 0;
      for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
          double v = 2.0 * w[i] * w[j];
          if (i == j) v += (i == 0 ? -1.0 : 1.0);
          val[soc_pos_[k][idx++]] = -e2 * v - (i == j ? kRegDual : 0.0);
        }
      }
    }
    ldl_.factor(k_);
    return true;
  }

  // Solves the unregularized system with iterative refinement.
  Vector solve(const Vector& rhs) const {
    Vector sol = ldl_.solve(rhs);
    const double scale = 1.0 + inf_norm(rhs);
    for (int it = 0; it < 8; ++it) {
      const Vector res = rhs - multiply(sol);
      if (inf_norm(res) <= 1e-14 * scale) break;
      sol += ldl_.solve(res);
    }
    return sol;
  }

  // Product with the exact (unregularized) KKT matrix.
  Vector multiply(const Vector& v) const {
    const auto x = v.head(n_);
    const auto y = v.segment(n_, neq_);
    const Vector z = v.tail(c_.m);
    Vector r(v.size());
    r.head(n_) = p_.quadratic * x + p_.eq_matrix.transpose() * y + g_.transpose() * z;
    r.segment(n_, neq_) = p_.eq_matrix * x;
    const Vector wz = apply_w(c_, *sc_, apply_w(c_, *sc_, z, false), false);
    r.tail(c_.m) = g_ * x - wz;
    return r;
  }

 private:
  const ConvexProgram& p_;
  const SparseMatrix& g_;
  const ConeLayout& c_;
  int n_, neq_;
  SparseMatrix k_;
  std::vector<int> diag_pos_;
  std::vector<std::vector<int>> soc_pos_;
  const Scaling* sc_ = nullptr;
  detail::QuasiDefiniteLdl ldl_;
};

struct Direction {
  Vector dx, dy, dz, ds;
  Vector ds_scaled, dz_scaled;  // W^{-1} ds and W dz
};

}  // namespace

ConicSolution solve(const ConvexProgram& prog, const Tolerances& tol) {
  const std::string bad = prog.check_invariants();
  if (!bad.empty()) throw std::invalid_argument("convex program: " + bad);

  const int n = prog.num_vars();
  const int neq = prog.num_eq();

  ConeLayout cones;
  cones.ml = prog.num_ineq();
  int m = cones.ml;
  for (const auto& cb : prog.cones) {
    cones.start.push_back(m);
    cones.dim.push_back(1 + static_cast<int>(cb.tail.size()));
    m += cones.dim.back();
  }
  cones.m = m;

  // Stacked inequality operator: G~ x + s = h~, s in K.
  SparseMatrix gfull(m, n);
  {
    using Triplet = Eigen::Triplet<double, int>;
    std::vector<Triplet> trip;
    for (int k = 0; k < prog.ineq_matrix.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(prog.ineq_matrix, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    }
    for (size_t k = 0; k < prog.cones.size(); ++k) {
      const int s = cones.start[k];
      trip.emplace_back(s, prog.cones[k].head, -1.0);
      for (size_t j = 0; j < prog.cones[k].tail.size(); ++j) {
        trip.emplace_back(s + 1 + static_cast<int>(j), prog.cones[k].tail[j], -1.0);
      }
    }
    gfull.setFromTriplets(trip.begin(), trip.end());
  }
  Vector hfull = Vector::Zero(m);
  hfull.head(cones.ml) = prog.ineq_rhs;

  const Vector& q = prog.linear;
  const Vector& b = prog.eq_rhs;
  const double resx0 = std::max(1.0, inf_norm(q));
  const double resy0 = std::max(1.0, inf_norm(b));
  const double resz0 = std::max(1.0, inf_norm(hfull));
  const int degree = cones.degree();
  const Vector e = identity_element(cones);

  ConicSolution out;
  KktSystem kkt(prog, gfull, cones);

  // Initial point from the W = I system.
  Scaling sc;
  sc.d = Vector::Ones(cones.ml);
  for (size_t k = 0; k < cones.dim.size(); ++k) {
    sc.eta.push_back(1.0);
    Vector w = Vector::Zero(cones.dim[k]);
    w[0] = 1.0;
    sc.w.push_back(w);
  }
  if (!kkt.factor(sc)) throw std::runtime_error("conic solver: KKT factorization failed at start");
  Vector rhs(n + neq + m);
  rhs << -q, b, hfull;
  Vector sol = kkt.solve(rhs);
  Vector x = sol.head(n);
  Vector y = sol.segment(n, neq);
  Vector z = sol.tail(m);
  Vector s = -z;
  if (m > 0) {
    const double ts = -min_eigenvalue(cones, s);
    if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s += (1.0 + ts) * e;
    const double tz = -min_eigenvalue(cones, z);
    if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z += (1.0 + tz) * e;
  }

  Vector lambda;
  int stalls = 0;
  for (int iter = 0; iter <= tol.max_iterations; ++iter) {
    const Vector px = prog.quadratic * x;
    const Vector rx = px + q + prog.eq_matrix.transpose() * y + gfull.transpose() * z;
    const Vector ry = prog.eq_matrix * x - b;
    const Vector rz = gfull * x + s - hfull;
    const double gap = s.dot(z);
    const double pcost = 0.5 * x.dot(px) + q.dot(x);
    const double pres = std::max(inf_norm(ry) / resy0, inf_norm(rz) / resz0);
    const double dres = inf_norm(rx) / resx0;
    const double relgap = gap / std::max(1.0, std::abs(pcost));

    out.primal = x;
    out.eq_duals = y;
    out.ineq_duals = z.head(cones.ml);
    out.cone_duals = z.tail(m - cones.ml);
    out.objective = pcost + prog.constant;
    out.residuals = {pres, dres, relgap};
    out.iterations = iter;

    if (pres <= tol.feasibility && dres <= tol.feasibility && (gap <= tol.absolute_gap || relgap <= tol.relative_gap)) {
      out.status = SolveStatus::optimal;
      return out;
    }
    if (iter == tol.max_iterations) break;

    // Certificates: primal infeasibility (A'y + G'z = 0, b'y + h'z < 0) and
    // dual infeasibility (Px = 0, Ax = 0, Gx + s = 0, q'x < 0).
    if (iter > 3) {
      const double pinf = -(b.dot(y) + hfull.dot(z));
      if (pres > tol.feasibility && pinf > 0) {
        const Vector atz = prog.eq_matrix.transpose() * y + gfull.transpose() * z;
        if (inf_norm(atz) <= 1e-8 * pinf * resx0 && pinf > 1e6 * std::max(1.0, inf_norm(x))) {
          out.status = SolveStatus::infeasible;
          return out;
        }
      }
      const double dinf = -q.dot(x);
      if (dres > tol.feasibility && dinf > 0) {
        const double lim = 1e-8 * dinf;
        if (inf_norm(px) <= lim && inf_norm(prog.eq_matrix * x) <= lim * resy0 && inf_norm(gfull * x + s) <= lim * resz0 &&
            dinf > 1e6 * std::max(1.0, inf_norm(z))) {
          out.status = SolveStatus::unbounded;
          return out;
        }
      }
    }

    sc = compute_scaling(cones, s, z);
    lambda = apply_w(cones, sc, z, false);
    if (!kkt.factor(sc)) break;
    const double mu = degree > 0 ? gap / degree : 0.0;

    auto newton = [&](const Vector& bx, const Vector& by, const Vector& bz, const Vector& bs) {
      Direction d;
      const Vector t = jordan_divide(cones, lambda, bs);
      const Vector u = apply_w(cones, sc, t, false);
      Vector r(n + neq + m);
      r << bx, by, bz - u;
      const Vector v = kkt.solve(r);
      d.dx = v.head(n);
      d.dy = v.segment(n, neq);
      d.dz = v.tail(m);
      d.dz_scaled = apply_w(cones, sc, d.dz, false);
      d.ds_scaled = t - d.dz_scaled;
      d.ds = apply_w(cones, sc, d.ds_scaled, false);
      return d;
    };

    const Vector ll = jordan_product(cones, lambda, lambda);
    const Direction aff = newton(-rx, -ry, -rz, -ll);
    double sigma = 0.0;
    if (m > 0) {
      const double a_aff = std::min({1.0, max_step(cones, s, aff.ds), max_step(cones, z, aff.dz)});
      const double mu_aff = (s + a_aff * aff.ds).dot(z + a_aff * aff.dz) / degree;
      sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
    }
    const Vector bs = -ll - jordan_product(cones, aff.ds_scaled, aff.dz_scaled) + sigma * mu * e;
    const Direction dir = newton(-rx, -ry, -rz, bs);

    double alpha = 1.0;
    if (m > 0) {
      alpha = std::min(1.0, kStepFraction * std::min(max_step(cones, s, dir.ds), max_step(cones, z, dir.dz)));
    }
    x += alpha * dir.dx;
    y += alpha * dir.dy;
    z += alpha * dir.dz;
    s += alpha * dir.ds;

    if (m > 0 && (min_eigenvalue(cones, s) <= 0 || min_eigenvalue(cones, z) <= 0)) break;
    stalls = alpha < 1e-10 ? stalls + 1 : 0;
    if (stalls >= 5) break;
  }
  out.status = SolveStatus::max_iter;
  return out;
}

Residuals kkt_residuals(const ConvexProgram& prog, const ConicSolution& sol) {
  Residuals r;
  const int n = prog.num_vars();
  if (n == 0 && prog.num_eq() == 0 && prog.num_ineq() == 0) return r;
  const Vector& x = sol.primal;

  const double pscale = std::max({1.0, inf_norm(prog.eq_rhs), inf_norm(prog.ineq_rhs)});
  double pres = inf_norm(prog.eq_matrix * x - prog.eq_rhs);
  if (prog.num_ineq() > 0) pres = std::max(pres, (prog.ineq_matrix * x - prog.ineq_rhs).maxCoeff());
  Vector grad = prog.quadratic * x + prog.linear + prog.eq_matrix.transpose() * sol.eq_duals;
  if (prog.num_ineq() > 0) grad += prog.ineq_matrix.transpose() * sol.ineq_duals;

  double dinfeas = 0.0;
  if (sol.ineq_duals.size() > 0) dinfeas = std::max(0.0, -sol.ineq_duals.minCoeff());
  double comp = prog.num_ineq() > 0 ? std::abs(sol.ineq_duals.dot(prog.ineq_rhs - prog.ineq_matrix * x)) : 0.0;

  int off = 0;
  for (const auto& cb : prog.cones) {
    double tail_sq = 0.0;
    for (int u : cb.tail) tail_sq += x[u] * x[u];
    pres = std::max(pres, std::sqrt(tail_sq) - x[cb.head]);
    const int dim = 1 + static_cast<int>(cb.tail.size());
    const auto w = sol.cone_duals.segment(off, dim);
    grad[cb.head] -= w[0];
    double wx = w[0] * x[cb.head];
    for (size_t j = 0; j < cb.tail.size(); ++j) {
      grad[cb.tail[j]] -= w[static_cast<int>(j) + 1];
      wx += w[static_cast<int>(j) + 1] * x[cb.tail[j]];
    }
    dinfeas = std::max(dinfeas, w.tail(dim - 1).norm() - w[0]);
    comp += std::abs(wx);
    off += dim;
  }
  r.primal = std::max(pres, 0.0) / pscale;
  r.dual = std::max(inf_norm(grad) / std::max(1.0, inf_norm(prog.linear)), dinfeas);
  r.gap = comp / std::max(1.0, std::abs(prog.objective(x) - prog.constant));
  return r;
}

}  // namespace evshare::kernel
