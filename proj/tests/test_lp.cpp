#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <limits>

#include "sparsetomo/geometry.hpp"
#include "sparsetomo/lp.hpp"
#include "sparsetomo/rng.hpp"

using namespace sparsetomo;

namespace {

// Best objective over all basic feasible solutions of {Ax = b, x >= 0}.
double vertex_optimum(const IncidenceSystem& a, const std::vector<double>& b,
                      const std::vector<double>& f, Sense sense) {
  const int m = a.n_rays(), n = a.n_cells();
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(m, n);
  for (const Entry& e : a.entries()) dense(e.ray, e.cell) = e.weight;
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
  double best = sense == Sense::minimize ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != m) continue;
    Eigen::MatrixXd basis(m, m);
    std::vector<int> cols;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) {
        basis.col(static_cast<Eigen::Index>(cols.size())) = dense.col(j);
        cols.push_back(j);
      }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.rank() < m) continue;
    const Eigen::VectorXd xb = lu.solve(rhs);
    if (xb.minCoeff() < -1e-10) continue;
    double obj = 0;
    for (int i = 0; i < m; ++i) obj += f[static_cast<std::size_t>(cols[static_cast<std::size_t>(i)])] * xb(i);
    best = sense == Sense::minimize ? std::min(best, obj) : std::max(best, obj);
  }
  return best;
}

IncidenceSystem column(int rows) {
  std::vector<Entry> e;
  for (int r = 0; r < rows; ++r) e.push_back({r, 0, 1.0});
  return IncidenceSystem(rows, 1, e);
}

}  // namespace

TEST_CASE("singleton feasible set") {
  const IncidenceSystem a = column(3);
  for (Sense s : {Sense::minimize, Sense::maximize}) {
    for (Bounds bd : {Bounds::nonneg, Bounds::box01}) {
      const LpResult r = solve_lp(a, {1, 1, 1}, bd, {-2.5}, s);
      REQUIRE(r.status == LpStatus::optimal);
      CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("zero right-hand side") {
  const IncidenceSystem a = build_hex2d(5);
  Rng rng(1);
  std::vector<double> f(19);
  for (double& v : f) v = rng.normal();
  for (Sense s : {Sense::minimize, Sense::maximize}) {
    const LpResult r = solve_lp(a, std::vector<double>(15, 0.0), Bounds::nonneg, f, s);
    REQUIRE(r.status == LpStatus::optimal);
    for (double v : r.x) CHECK(std::abs(v) < 1e-9);
  }
}

TEST_CASE("one-parameter family separates min and max") {
  // x0 + x1 = 1, x2 = 1
  const IncidenceSystem a(2, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 2, 1.0}});
  const LpResult lo = solve_lp(a, {1, 1}, Bounds::nonneg, {1, -1, 0}, Sense::minimize);
  const LpResult hi = solve_lp(a, {1, 1}, Bounds::nonneg, {1, -1, 0}, Sense::maximize);
  REQUIRE(lo.status == LpStatus::optimal);
  REQUIRE(hi.status == LpStatus::optimal);
  CHECK(lo.x[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(hi.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(hi.objective - lo.objective == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(lo.basic);
  CHECK(hi.basic);
}

TEST_CASE("weighted family") {
  // x0 + x1 + x2 = 1, x0 + 2 x1 + 3 x2 = 2: x = (t, 1 - 2t, t), t in [0, 1/2]
  const IncidenceSystem a(2, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}, {1, 2, 3.0}});
  const LpResult lo = solve_lp(a, {1, 2}, Bounds::nonneg, {1, 0, 0}, Sense::minimize);
  const LpResult hi = solve_lp(a, {1, 2}, Bounds::nonneg, {1, 0, 0}, Sense::maximize);
  REQUIRE(lo.status == LpStatus::optimal);
  REQUIRE(hi.status == LpStatus::optimal);
  CHECK(lo.x[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(hi.x[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(hi.x[2] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("box bounds are respected") {
  // x0 + x1 = 1.5
  const IncidenceSystem a(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  const LpResult lo = solve_lp(a, {1.5}, Bounds::box01, {1, 0}, Sense::minimize);
  const LpResult hi = solve_lp(a, {1.5}, Bounds::box01, {1, 0}, Sense::maximize);
  REQUIRE(lo.status == LpStatus::optimal);
  REQUIRE(hi.status == LpStatus::optimal);
  CHECK(lo.x[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(hi.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : hi.x) CHECK(v <= 1.0);
}

TEST_CASE("infeasible systems are reported") {
  CHECK(solve_lp(column(3), {1, 2, 1}, Bounds::nonneg, {1}, Sense::minimize).status == LpStatus::infeasible);
  const IncidenceSystem a(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  CHECK(solve_lp(a, {2.5}, Bounds::box01, {1, 1}, Sense::minimize).status == LpStatus::infeasible);
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(solve_lp(column(3), {1, 1}, Bounds::nonneg, {1}, Sense::minimize), DomainError);
  CHECK_THROWS_AS(solve_lp(column(3), {1, 1, 1}, Bounds::nonneg, {1, 2}, Sense::minimize), DomainError);
}

TEST_CASE("optimum agrees with vertex enumeration") {
  Rng rng(31);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int m = 4, n = 9;
    std::vector<Entry> e;
    for (int j = 0; j < n; ++j) {
      const int r0 = static_cast<int>(rng.below(m));
      int r1 = static_cast<int>(rng.below(m - 1));
      if (r1 >= r0) ++r1;
      e.push_back({r0, j, 0.5 + rng.uniform_open()});
      e.push_back({r1, j, 0.5 + rng.uniform_open()});
    }
    const IncidenceSystem a(m, n, e);
    std::vector<double> x0(n), f(n);
    for (double& v : x0) v = rng.below(3) == 0 ? 0.0 : rng.uniform_open();
    for (double& v : f) v = rng.normal();
    const std::vector<double> b = sparsetomo::apply(a, x0);
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(m, n);
    for (const Entry& x : e) dense(x.ray, x.cell) = x.weight;
    if (Eigen::FullPivLU<Eigen::MatrixXd>(dense).rank() < m) continue;
    for (Sense s : {Sense::minimize, Sense::maximize}) {
      const LpResult r = solve_lp(a, b, Bounds::nonneg, f, s);
      REQUIRE(r.status == LpStatus::optimal);
      const double expected = vertex_optimum(a, b, f, s);
      CHECK(r.objective == doctest::Approx(expected).epsilon(1e-7).scale(1.0));
      CHECK(r.primal_residual < 1e-8);
      for (double v : r.x) CHECK(v >= 0.0);
    }
    ++checked;
  }
  CHECK(checked > 80);
}

TEST_CASE("solutions are deterministic") {
  const IncidenceSystem a = perturb(build_hex2d(11), {0.9, 1.1, 2, true});
  Rng rng(6);
  ParticleVector x;
  for (int i = 0; i < 12; ++i) x.support.push_back(static_cast<Index>(rng.below(91))), x.values.push_back(1.0);
  const auto b = matvec(a, x).values;
  std::vector<double> f(91);
  for (double& v : f) v = rng.normal();
  const LpResult r1 = solve_lp(a, b, Bounds::nonneg, f, Sense::minimize);
  const LpResult r2 = solve_lp(a, b, Bounds::nonneg, f, Sense::minimize);
  REQUIRE(r1.status == LpStatus::optimal);
  CHECK(r1.x == r2.x);
  CHECK(r1.iterations == r2.iterations);
}
