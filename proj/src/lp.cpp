#include "sparsetomo/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <Eigen/CholmodSupport>
#include <Eigen/Sparse>

namespace sparsetomo {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

SpMat to_eigen(const IncidenceSystem& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.nnz());
  for (Index c = 0; c < a.n_cells(); ++c) {
    auto rays = a.rays_of(c);
    auto w = a.weights_of(c);
    for (std::size_t i = 0; i < rays.size(); ++i) t.emplace_back(rays[i], c, w[i]);
  }
  SpMat m(a.n_rays(), a.n_cells());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Largest step in (0, 1] keeping v + alpha dv > 0.
double max_step(const Vec& v, const Vec& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

// The supernodal factorization runs its dense kernels through the system
// BLAS. Some optimized BLAS builds return wrong results on some CPUs, so it is
// checked once on a dense positive definite matrix; when the check fails the
// BLAS-free simplicial factorization is used instead.
bool supernodal_usable() {
  static const bool usable = [] {
    const int n = 200;
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) t.emplace_back(i, j, (i == j ? n : 0.0) + 1.0 / (1 + std::abs(i - j)));
    }
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    Eigen::CholmodSupernodalLLT<SpMat> llt;
    llt.cholmod().print = 0;
    llt.compute(m);
    if (llt.info() != Eigen::Success) return false;
    const Vec b = Vec::LinSpaced(n, 1.0, 2.0);
    const Vec x = llt.solve(b);
    return x.allFinite() && (m * x - b).norm() < 1e-10 * b.norm();
  }();
  return usable;
}

class NormalSolver {
 public:
  explicit NormalSolver(const SpMat& a) : a_(a), at_(a.transpose()) {
    SpMat id(a.rows(), a.rows());
    id.setIdentity();
    identity_ = id;
    super_.cholmod().print = 0;
    simple_.cholmod().print = 0;
  }

  bool factor(const Vec& theta) {
    m_ = a_ * theta.asDiagonal() * at_;
    // absolute: rows whose columns are all near zero keep small diagonals
    double reg = 1e-12;
    for (int attempt = 0; attempt < 6; ++attempt, reg *= 100.0) {
      SpMat reg_m = m_ + reg * identity_;
      if (try_factor(reg_m)) return true;
    }
    return false;
  }

  // Solve with the regularized factor, refined against the exact matrix.
  Vec solve(const Vec& rhs) {
    Vec y = base_solve(rhs);
    const double target = 1e-14 * (1.0 + inf_norm(rhs));
    for (int k = 0; k < 3; ++k) {
      const Vec r = rhs - m_ * y;
      if (inf_norm(r) <= target) break;
      y += base_solve(r);
    }
    return y;
  }

 private:
  Vec base_solve(const Vec& rhs) {
    if (supernodal_) return super_.solve(rhs);
    return simple_.solve(rhs);
  }

  const SpMat& a_;
  SpMat at_;
  SpMat m_;
  SpMat identity_;
  bool try_factor(const SpMat& m) {
    if (!analyzed_ || m.nonZeros() != pattern_nnz_) {
      if (supernodal_) {
        super_.analyzePattern(m);
      } else {
        simple_.analyzePattern(m);
      }
      analyzed_ = true;
      pattern_nnz_ = m.nonZeros();
    }
    if (supernodal_) {
      super_.factorize(m);
      return super_.info() == Eigen::Success;
    }
    simple_.factorize(m);
    return simple_.info() == Eigen::Success;
  }

  Eigen::CholmodSupernodalLLT<SpMat> super_;
  Eigen::CholmodSimplicialLLT<SpMat> simple_;
  bool supernodal_ = supernodal_usable();
  bool analyzed_ = false;
  Eigen::Index pattern_nnz_ = 0;
};

struct Iterate {
  Vec x, w, y, z, s;
};

// Snap an interior optimum onto the basic solution supported on its large
// components. Returns false when the support is not linearly independent or
// the snapped point leaves the feasible set.
bool purify(const SpMat& a, const Vec& b, bool box, Vec& x) {
  const Eigen::Index n = a.cols();
  const double cut = 1e-7 * std::max(1.0, inf_norm(x));
  std::vector<Eigen::Index> free_cols;
  Vec rhs = b;
  Vec snapped = Vec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (box && x[j] >= 1.0 - cut) {
      snapped[j] = 1.0;
      rhs -= a.col(j);
    } else if (x[j] > cut) {
      free_cols.push_back(j);
    }
  }
  if (static_cast<Eigen::Index>(free_cols.size()) > a.rows()) return false;
  if (!free_cols.empty()) {
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
      for (SpMat::InnerIterator it(a, free_cols[k]); it; ++it) {
        t.emplace_back(it.row(), static_cast<Eigen::Index>(k), it.value());
      }
    }
    SpMat ap(a.rows(), static_cast<Eigen::Index>(free_cols.size()));
    ap.setFromTriplets(t.begin(), t.end());
    SpMat gram = ap.transpose() * ap;
    Eigen::SimplicialLDLT<SpMat> ldlt(gram);
    if (ldlt.info() != Eigen::Success) return false;
    const Vec d = ldlt.vectorD();
    if (d.minCoeff() <= 1e-10 * std::max(1.0, d.maxCoeff())) return false;
    const Vec xp = ldlt.solve(ap.transpose() * rhs);
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
      snapped[free_cols[k]] = xp[static_cast<Eigen::Index>(k)];
    }
  }
  const double feas = 1e-9 * (1.0 + inf_norm(b));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (snapped[j] < -feas || (box && snapped[j] > 1.0 + feas)) return false;
  }
  if (inf_norm(a * snapped - b) > feas) return false;
  for (Eigen::Index j = 0; j < n; ++j) {
    snapped[j] = std::max(0.0, box ? std::min(1.0, snapped[j]) : snapped[j]);
  }
  x = snapped;
  return true;
}

}  // namespace

std::string to_string(Bounds b) { return b == Bounds::nonneg ? "nonneg" : "box01"; }

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::failed: return "failed";
  }
  return "failed";
}

LpResult solve_lp(const IncidenceSystem& a, const std::vector<double>& b, Bounds bounds,
                  const std::vector<double>& f, Sense sense, const LpOptions& options) {
  if (b.size() != static_cast<std::size_t>(a.n_rays()) ||
      f.size() != static_cast<std::size_t>(a.n_cells())) {
    throw DomainError("invalid_dimensions", "LP data does not match the system dimensions");
  }
  const bool box = bounds == Bounds::box01;
  const Eigen::Index m = a.n_rays();
  const Eigen::Index n = a.n_cells();
  const Vec bv = Eigen::Map<const Vec>(b.data(), m);
  Vec c = Eigen::Map<const Vec>(f.data(), n);
  if (sense == Sense::maximize) c = -c;

  LpResult res;
  auto finish = [&](const Vec& x) {
    res.x.assign(x.data(), x.data() + x.size());
    res.objective = Eigen::Map<const Vec>(f.data(), n).dot(x);
  };

  if (n == 0) {
    res.primal_residual = inf_norm(bv);
    res.status = res.primal_residual == 0.0 ? LpStatus::optimal : LpStatus::infeasible;
    res.basic = true;
    return res;
  }

  if (m == 0) {
    Vec x = Vec::Zero(n);
    res.basic = true;
    res.status = LpStatus::optimal;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (c[j] >= 0.0) continue;
      if (!box) {
        res.status = LpStatus::failed;
        res.diagnostic = "unbounded: unconstrained column with improving objective";
        res.basic = false;
      }
      x[j] = 1.0;
    }
    finish(x);
    return res;
  }

  const SpMat A = to_eigen(a);
  const double b_norm = inf_norm(bv);
  const double c_norm = inf_norm(c);

  Iterate it;
  const double col_sum = A.sum();
  const double start = box ? 0.5 : std::max(0.1, bv.sum() / col_sum);
  it.x = Vec::Constant(n, start);
  it.w = box ? Vec::Constant(n, 0.5) : Vec();
  it.y = Vec::Zero(m);
  it.z = (1.0 + c.array().abs()).matrix();
  it.s = box ? it.z : Vec();

  NormalSolver normal(A);
  const Vec u = Vec::Ones(n);
  double best_p = std::numeric_limits<double>::infinity();
  Vec best_x = it.x;

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    res.iterations = iter;
    const Vec r_b = bv - A * it.x;
    Vec r_c = c - A.transpose() * it.y - it.z;
    Vec r_u;
    double gap = it.x.dot(it.z);
    if (box) {
      r_c += it.s;
      r_u = u - it.x - it.w;
      gap += it.w.dot(it.s);
    }
    const double p_res = inf_norm(r_b) / (1.0 + b_norm);
    const double d_res = inf_norm(r_c) / (1.0 + c_norm);
    const double rel_gap = gap / (1.0 + std::abs(c.dot(it.x)));
    if (p_res < options.tolerance && d_res < options.tolerance && rel_gap < options.tolerance) {
      Vec x = it.x;
      res.status = LpStatus::optimal;
      if (options.purify) res.basic = purify(A, bv, box, x);
      res.primal_residual = inf_norm(A * x - bv);
      finish(x);
      return res;
    }
    if (!std::isfinite(gap) || !std::isfinite(p_res) || !it.x.allFinite() || inf_norm(it.x) > 1e12) break;
    if (p_res < best_p) {
      best_p = p_res;
      best_x = it.x;
    }
    if (iter == options.max_iterations) break;

    const double mu = gap / static_cast<double>(box ? 2 * n : n);
    Vec theta_inv = it.z.cwiseQuotient(it.x);
    if (box) theta_inv += it.s.cwiseQuotient(it.w);
    const Vec theta = theta_inv.cwiseInverse();
    if (!normal.factor(theta)) {
      res.diagnostic = "normal equations could not be factorized";
      break;
    }

    struct Step {
      Vec dx, dw, dy, dz, ds;
    };
    auto direction = [&](const Vec& r_xz, const Vec& r_ws) {
      Step st;
      Vec r_hat = r_c - r_xz.cwiseQuotient(it.x);
      if (box) r_hat += (r_ws - it.s.cwiseProduct(r_u)).cwiseQuotient(it.w);
      st.dy = normal.solve(r_b + A * theta.cwiseProduct(r_hat));
      st.dx = theta.cwiseProduct(A.transpose() * st.dy - r_hat);
      st.dz = (r_xz - it.z.cwiseProduct(st.dx)).cwiseQuotient(it.x);
      if (box) {
        st.dw = r_u - st.dx;
        st.ds = (r_ws - it.s.cwiseProduct(st.dw)).cwiseQuotient(it.w);
      }
      return st;
    };
    auto step_lengths = [&](const Step& st) {
      double ap = max_step(it.x, st.dx);
      double ad = max_step(it.z, st.dz);
      if (box) {
        ap = std::min(ap, max_step(it.w, st.dw));
        ad = std::min(ad, max_step(it.s, st.ds));
      }
      return std::pair{ap, ad};
    };

    // predictor
    const Vec xz = it.x.cwiseProduct(it.z);
    const Vec ws = box ? Vec(it.w.cwiseProduct(it.s)) : Vec();
    const Step aff = direction(-xz, box ? Vec(-ws) : Vec());
    const auto [ap_aff, ad_aff] = step_lengths(aff);
    double gap_aff = (it.x + ap_aff * aff.dx).dot(it.z + ad_aff * aff.dz);
    if (box) gap_aff += (it.w + ap_aff * aff.dw).dot(it.s + ad_aff * aff.ds);
    const double mu_aff = gap_aff / static_cast<double>(box ? 2 * n : n);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // corrector
    Vec r_xz = Vec::Constant(n, sigma * mu) - xz - aff.dx.cwiseProduct(aff.dz);
    Vec r_ws;
    if (box) r_ws = Vec::Constant(n, sigma * mu) - ws - aff.dw.cwiseProduct(aff.ds);
    const Step st = direction(r_xz, r_ws);
    auto [ap, ad] = step_lengths(st);
    const double eta = std::max(0.9, 1.0 - mu);
    ap = std::min(1.0, eta * ap);
    ad = std::min(1.0, eta * ad);
    it.x += ap * st.dx;
    it.y += ad * st.dy;
    it.z += ad * st.dz;
    if (box) {
      it.w += ap * st.dw;
      it.s += ad * st.ds;
    }
  }

  // classify by the best finite iterate; a diverging dual leaves NaN behind
  if (it.x.allFinite()) {
    const double p_last = inf_norm(bv - A * it.x) / (1.0 + b_norm);
    if (p_last <= best_p) {
      best_p = p_last;
      best_x = it.x;
    }
  }
  const double p_res = best_p;
  res.primal_residual = p_res * (1.0 + b_norm);
  if (!(p_res <= 1e-6)) {
    res.status = LpStatus::infeasible;
    if (res.diagnostic.empty()) res.diagnostic = "primal residual did not vanish";
  } else {
    res.status = LpStatus::failed;
    if (res.diagnostic.empty()) res.diagnostic = "iteration limit reached";
  }
  finish(best_x);
  return res;
}

}  // namespace sparsetomo
