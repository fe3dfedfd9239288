#include "sparsetomo/uniqueness.hpp"

#include <algorithm>
#include <cmath>

#include "exact_field.hpp"
#include "sparsetomo/rng.hpp"

namespace sparsetomo {

std::string to_string(UniquenessStatus s) {
  switch (s) {
    case UniquenessStatus::unique: return "unique";
    case UniquenessStatus::not_unique: return "not_unique";
    case UniquenessStatus::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(Certificate c) {
  return c == Certificate::certified_unique ? "certified_unique" : "uncertified";
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void check_box(const ParticleVector& x, Index n, Bounds bounds) {
  if (bounds != Bounds::box01) return;
  for (double v : x.dense(n)) {
    if (v > 1.0) {
      throw DomainError("reference_outside_box", "reference vector has a component above 1");
    }
  }
}

}  // namespace

UniquenessVerdict verify_uniqueness(const IncidenceSystem& a, const ParticleVector& x_ref,
                                    Bounds bounds, const VerifyOptions& options) {
  if (options.probes == 0) throw DomainError("invalid_probes", "probes must be >= 1");
  check_box(x_ref, a.n_cells(), bounds);
  const ReducedSystem red = reduce(a, matvec(a, x_ref));
  const std::vector<double> ref = to_reduced(red, x_ref);

  UniquenessVerdict v;
  if (red.n_red() == 0) {
    v.status = UniquenessStatus::unique;
    return v;
  }

  for (std::size_t p = 0; p < options.probes; ++p) {
    Rng rng(derive_seed(options.seed, {p}));
    std::vector<double> f(ref.size());
    for (double& fi : f) fi = rng.normal();
    v.probes_used = p + 1;
    std::vector<double> optima[2];
    for (int side = 0; side < 2; ++side) {
      const Sense sense = side == 0 ? Sense::minimize : Sense::maximize;
      LpResult lp = solve_lp(red.system, red.b_red, bounds, f, sense, options.lp);
      if (lp.status != LpStatus::optimal) {
        v.status = UniquenessStatus::inconclusive;
        v.diagnostic = "probe " + std::to_string(p) + " (" + (side == 0 ? "min" : "max") +
                       "): " + to_string(lp.status) + ": " + lp.diagnostic;
        return v;
      }
      if (max_abs_diff(lp.x, ref) > options.match_tolerance) {
        v.status = UniquenessStatus::not_unique;
        v.witness = restore(red, lp.x);
        v.objective_gap = std::max(v.objective_gap, max_abs_diff(lp.x, ref));
        if (side == 1) v.objective_gap = std::max(v.objective_gap, max_abs_diff(optima[0], lp.x));
        return v;
      }
      optima[side] = std::move(lp.x);
    }
    v.objective_gap = std::max(v.objective_gap, max_abs_diff(optima[0], optima[1]));
  }
  v.status = UniquenessStatus::unique;
  return v;
}

namespace {

using detail::Rational;

// Depth-first enumeration of basic feasible solutions. Every candidate column
// is assigned to one of: zero, basic (strictly inside the bounds) or, for the
// box, the upper bound.
class VertexSearch {
 public:
  VertexSearch(std::vector<std::vector<Rational>> cols, std::vector<Rational> b,
               std::vector<Rational> ref, bool box)
      : cols_(std::move(cols)), rhs_(std::move(b)), ref_(std::move(ref)), box_(box) {
    rows_ = rhs_.size();
  }

  // Returns true as soon as a vertex different from ref is found.
  bool run() { return visit(0); }

  std::size_t vertices() const { return vertices_; }
  const std::vector<Rational>& witness() const { return witness_; }

 private:
  enum class Slot { zero, basic, upper };

  bool visit(std::size_t j) {
    if (!feasible_prefix(j)) return false;
    if (j == cols_.size()) return leaf();
    assign_.push_back(Slot::zero);
    if (visit(j + 1)) return true;
    assign_.back() = Slot::basic;
    if (count_basic() <= rows_ && visit(j + 1)) return true;
    if (box_) {
      assign_.back() = Slot::upper;
      for (std::size_t r = 0; r < rows_; ++r) rhs_[r] -= cols_[j][r];
      const bool found = visit(j + 1);
      for (std::size_t r = 0; r < rows_; ++r) rhs_[r] += cols_[j][r];
      if (found) return true;
    }
    assign_.pop_back();
    return false;
  }

  std::size_t count_basic() const {
    return static_cast<std::size_t>(std::count(assign_.begin(), assign_.end(), Slot::basic));
  }

  // The residual right-hand side must stay nonnegative, a zero residual row
  // cannot carry a basic column, and a positive row needs a basic or
  // undecided column.
  bool feasible_prefix(std::size_t decided) const {
    for (std::size_t r = 0; r < rows_; ++r) {
      if (rhs_[r] < 0) return false;
      bool coverable = false;
      for (std::size_t j = 0; j < cols_.size(); ++j) {
        if (cols_[j][r] == 0) continue;
        if (j >= decided) {
          coverable = true;
        } else if (assign_[j] == Slot::basic) {
          if (rhs_[r] == 0) return false;
          coverable = true;
        }
      }
      if (rhs_[r] > 0 && !coverable) return false;
    }
    return true;
  }

  bool leaf() {
    std::vector<std::size_t> basic;
    for (std::size_t j = 0; j < assign_.size(); ++j) {
      if (assign_[j] == Slot::basic) basic.push_back(j);
    }
    const std::size_t t = basic.size();
    // Gaussian elimination on [A_T | rhs]
    std::vector<std::vector<Rational>> m(rows_, std::vector<Rational>(t + 1));
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t k = 0; k < t; ++k) m[r][k] = cols_[basic[k]][r];
      m[r][t] = rhs_[r];
    }
    std::size_t pivot_row = 0;
    for (std::size_t k = 0; k < t; ++k) {
      std::size_t p = pivot_row;
      while (p < rows_ && m[p][k] == 0) ++p;
      if (p == rows_) return false;  // dependent basis
      std::swap(m[p], m[pivot_row]);
      for (std::size_t r = 0; r < rows_; ++r) {
        if (r == pivot_row || m[r][k] == 0) continue;
        const Rational factor = m[r][k] / m[pivot_row][k];
        for (std::size_t c = k; c <= t; ++c) m[r][c] -= factor * m[pivot_row][c];
      }
      ++pivot_row;
    }
    for (std::size_t r = pivot_row; r < rows_; ++r) {
      if (m[r][t] != 0) return false;  // inconsistent
    }
    std::vector<Rational> x(cols_.size(), Rational(0));
    for (std::size_t k = 0; k < t; ++k) {
      const Rational v = m[k][t] / m[k][k];
      if (v <= 0 || (box_ && v >= 1)) return false;
      x[basic[k]] = v;
    }
    for (std::size_t j = 0; j < assign_.size(); ++j) {
      if (assign_[j] == Slot::upper) x[j] = 1;
    }
    ++vertices_;
    if (x != ref_) {
      witness_ = std::move(x);
      return true;
    }
    return false;
  }

  std::vector<std::vector<Rational>> cols_;
  std::vector<Rational> rhs_;
  std::vector<Rational> ref_;
  bool box_;
  std::size_t rows_ = 0;
  std::vector<Slot> assign_;
  std::size_t vertices_ = 0;
  std::vector<Rational> witness_;
};

}  // namespace

OracleVerdict exact_unique_oracle(const IncidenceSystem& a, const ParticleVector& x_ref,
                                  Bounds bounds) {
  check_box(x_ref, a.n_cells(), bounds);
  const std::vector<double> dense = x_ref.dense(a.n_cells());
  for (double v : dense) {
    if (v < 0.0) throw DomainError("negative_component", "reference vector must be nonnegative");
  }

  const auto m = static_cast<std::size_t>(a.n_rays());
  std::vector<Rational> b(m, Rational(0));
  for (Index c = 0; c < a.n_cells(); ++c) {
    if (dense[static_cast<std::size_t>(c)] == 0.0) continue;
    const Rational xc = detail::to_rational(dense[static_cast<std::size_t>(c)]);
    auto rays = a.rays_of(c);
    auto w = a.weights_of(c);
    for (std::size_t t = 0; t < rays.size(); ++t) {
      b[static_cast<std::size_t>(rays[t])] += detail::to_rational(w[t]) * xc;
    }
  }

  // A nonnegative column touching a zero row must vanish in every solution.
  std::vector<Index> candidates;
  for (Index c = 0; c < a.n_cells(); ++c) {
    auto rays = a.rays_of(c);
    bool ok = true;
    for (Index r : rays) ok = ok && b[static_cast<std::size_t>(r)] != 0;
    if (ok) candidates.push_back(c);
  }
  if (static_cast<Index>(candidates.size()) > kOracleMaxCells) {
    throw DomainError("oracle_too_large", "exact oracle accepts at most " +
                                              std::to_string(kOracleMaxCells) +
                                              " reduced cells, got " +
                                              std::to_string(candidates.size()));
  }

  std::vector<std::vector<Rational>> cols;
  std::vector<Rational> ref;
  for (Index c : candidates) {
    std::vector<Rational> col(m, Rational(0));
    auto rays = a.rays_of(c);
    auto w = a.weights_of(c);
    for (std::size_t t = 0; t < rays.size(); ++t) {
      col[static_cast<std::size_t>(rays[t])] = detail::to_rational(w[t]);
    }
    cols.push_back(std::move(col));
    ref.push_back(detail::to_rational(dense[static_cast<std::size_t>(c)]));
  }

  VertexSearch search(std::move(cols), std::move(b), std::move(ref), bounds == Bounds::box01);
  OracleVerdict verdict;
  const bool differs = search.run();
  verdict.vertices = search.vertices();
  verdict.unique = !differs;
  if (differs) {
    std::vector<double> w(static_cast<std::size_t>(a.n_cells()), 0.0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      w[static_cast<std::size_t>(candidates[i])] = search.witness()[i].convert_to<double>();
    }
    verdict.witness = std::move(w);
  }
  return verdict;
}

Certificate rank_certificate(const ReducedSystem& red) {
  if (red.n_red() == 0) return Certificate::certified_unique;
  if (red.m_red() < red.n_red()) return Certificate::uncertified;
  return column_rank_status(red.system) == RankStatus::overdetermined_full_rank
             ? Certificate::certified_unique
             : Certificate::uncertified;
}

}  // namespace sparsetomo
