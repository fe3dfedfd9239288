#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sparsetomo/analytics.hpp"
#include "sparsetomo/geometry.hpp"
#include "sparsetomo/reduction.hpp"
#include "sparsetomo/rng.hpp"

using namespace sparsetomo;

TEST_CASE("hexagon zero-ray expectation") {
  CHECK(hex_rays_zero(5, 0) == 15.0);
  CHECK(hex_rays_zero(51, 0) == 153.0);
  CHECK(hex_rays_zero(5, 1) == doctest::Approx(12.0).epsilon(1e-14));
  CHECK_THROWS_AS(hex_rays_zero(4, 1), DomainError);
}

TEST_CASE("hexagon closed forms match enumeration") {
  const IncidenceSystem a = build_hex2d(5);
  for (int k : {0, 1, 2, 3}) {
    const oracle::EnumeratedDims e = oracle::enumerate_dims(a, k);
    CAPTURE(k);
    CHECK(hex_rays_zero(5, k) == doctest::Approx(e.rays_zero).epsilon(1e-12));
    CHECK(hex_cells_zero(5, k) == doctest::Approx(e.cells_zero).epsilon(1e-12));
  }
  const oracle::EnumeratedDims e7 = oracle::enumerate_dims(build_hex2d(7), 2);
  CHECK(hex_cells_zero(7, 2) == doctest::Approx(e7.cells_zero).epsilon(1e-12));
  CHECK(hex_cells_zero(5, 2) == doctest::Approx(17.05263157894737).epsilon(1e-12));
}

TEST_CASE("hexagon dims bookkeeping") {
  const ExpectedDims x = hex_dims(11, 7.5);
  CHECK(x.rays == doctest::Approx(33.0 - x.rays_zero));
  CHECK(x.cells == doctest::Approx(91.0 - x.cells_zero));
  CHECK(hex_dims(11, 0).cells == doctest::Approx(0.0).scale(1.0));
  double prev_r = -1, prev_c = -1;
  for (double k = 0; k <= 300; k += 2.5) {
    const ExpectedDims e = hex_dims(11, k);
    CHECK(e.rays >= prev_r - 1e-12);
    CHECK(e.cells >= prev_c - 1e-12);
    CHECK((e.rays >= 0 && e.rays <= 33 + 1e-9));
    CHECK((e.cells >= -1e-9 && e.cells <= 91 + 1e-9));
    prev_r = e.rays;
    prev_c = e.cells;
  }
}

TEST_CASE("hexagon zero-ray approximations") {
  const LinearQuadratic k0 = hex_rays_zero_bounds(51, 0);
  CHECK(k0.linear == 153.0);
  CHECK(k0.quadratic == 153.0);
  const LinearQuadratic k1 = hex_rays_zero_bounds(51, 1);
  CHECK(k1.linear == 150.0);
  CHECK(k1.quadratic == 150.0);
  const double exact = hex_rays_zero(51, 20);
  const LinearQuadratic b = hex_rays_zero_bounds(51, 20);
  CHECK(b.linear <= exact);
  CHECK(exact <= b.quadratic);
  for (int k = 1; k <= 60; ++k) CHECK(hex_rays_zero(51, k) <= hex_rays_zero_bounds(51, k).quadratic + 1e-9);
}

TEST_CASE("cube closed forms match enumeration") {
  CHECK(cube_rays_zero(2, 1) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(cube_rays(2, 1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(cube_rays(30, 0) == doctest::Approx(0.0).scale(1.0));
  CHECK(cube_cells(30, 0) == doctest::Approx(0.0).scale(1.0));
  CHECK(cube_rays(30, 1e6) == doctest::Approx(7080.0));
  for (int d : {2, 3}) {
    const IncidenceSystem a = build_cube3d(d);
    for (int k : {1, 2}) {
      const oracle::EnumeratedDims e = oracle::enumerate_dims(a, k);
      CAPTURE(d);
      CAPTURE(k);
      CHECK(cube_rays_zero(d, k) == doctest::Approx(e.rays_zero).epsilon(1e-12));
      CHECK(cube_cells(d, k) == doctest::Approx(d * d * d - e.cells_zero).epsilon(1e-12));
    }
  }
  const oracle::EnumeratedDims e4 = oracle::enumerate_dims(build_cube3d(4), 2);
  CHECK(cube_cells(4, 2) == doctest::Approx(64.0 - e4.cells_zero).epsilon(1e-12));
  CHECK_THROWS_AS(cube_rays(1, 1), DomainError);
}

TEST_CASE("ratio of expected dimensions is nonincreasing") {
  for (const DimsSource& src : {analytic_hex(21), analytic_cube(10)}) {
    const ExpectedDims first = src.at(1.0);
    CHECK(first.rays / first.cells == doctest::Approx(src.left_degree).epsilon(0.2));
    double prev = first.rays / first.cells;
    for (double k = 2; k < src.max_k; k *= 1.2) {
      const ExpectedDims e = src.at(k);
      const double ratio = e.rays / e.cells;
      CHECK(ratio <= prev + 1e-9);
      prev = ratio;
    }
  }
}

TEST_CASE("critical roots solve their equations") {
  for (const DimsSource& src : {analytic_hex(51), analytic_cube(20)}) {
    const CriticalCurves c = critical_curves(src, 0);
    REQUIRE(c.k_delta);
    REQUIRE(c.k_crit);
    REQUIRE(c.k_opt);
    REQUIRE(c.k_tilde_delta);
    CHECK(*c.k_tilde_delta < *c.k_crit);
    CHECK(*c.k_crit < *c.k_opt);
    for (Criterion cr : {Criterion::delta, Criterion::crit, Criterion::opt, Criterion::inv}) {
      const CriticalRoot r = critical_k(src, cr);
      if (!r.attained) continue;
      const ExpectedDims e = src.at(r.k);
      const double cst = criterion_constant(cr, src.left_degree);
      CHECK(std::abs(e.rays - cst * e.cells) / e.rays < 1e-6);
    }
    const ExpectedDims ed = src.at(*c.k_delta);
    CHECK(*c.k_tilde_delta == doctest::Approx(ed.cells / (1.0 + kDelta)));
  }
}

TEST_CASE("hexagon d=51 thresholds") {
  const CriticalCurves c = critical_curves(analytic_hex(51), 51);
  CHECK(*c.k_delta == doctest::Approx(7.78).epsilon(0.005));
  CHECK(*c.k_tilde_delta == doctest::Approx(7.27).epsilon(0.005));
  CHECK(*c.k_crit == doctest::Approx(13.81).epsilon(0.005));
  CHECK(*c.k_opt == doctest::Approx(23.12).epsilon(0.005));
  CHECK(*c.k_inv == doctest::Approx(21.88).epsilon(0.005));
}

TEST_CASE("criterion constants") {
  CHECK(criterion_constant(Criterion::delta, 3) == doctest::Approx(3 * kDelta));
  CHECK(criterion_constant(Criterion::crit, 3) == 1.0);
  CHECK(criterion_constant(Criterion::opt, 4) == 0.5);
  CHECK(criterion_constant(Criterion::inv, 4) == doctest::Approx((1 + kDelta) / 4));
}

TEST_CASE("criterion not attained without a sign change") {
  DimsSource flat{"flat", 3, 100, false, [](double k) {
                    return ExpectedDims{k, 0, 10, 0, 1};
                  }};
  CHECK_FALSE(critical_k(flat, Criterion::crit).attained);
}

TEST_CASE("empirical dims") {
  const IncidenceSystem a = build_hex2d(21);
  const EmpiricalDims zero = empirical_dims(a, 0, 10, 1);
  CHECK(zero.mean_rays == 0.0);
  CHECK(zero.mean_cells == 0.0);
  const EmpiricalDims e = empirical_dims(a, 10, 4000, 77);
  const ExpectedDims x = hex_dims(21, 10);
  CHECK(std::abs(e.mean_rays - x.rays) < 4 * e.se_rays);
  CHECK(std::abs(e.mean_cells - x.cells) < 4 * e.se_cells);
  const EmpiricalDims again = empirical_dims(a, 10, 4000, 77);
  CHECK(again.mean_cells == e.mean_cells);
}

TEST_CASE("empirical source on a square geometry is monotone") {
  const DimsSource src = empirical_source(build_square2d(20, 6), 100, 3);
  CHECK(src.integer_k);
  double prev = 1e9;
  for (double k : {1.0, 5.0, 20.0, 60.0, 150.0}) {
    const ExpectedDims e = src.at(k);
    CHECK(e.rays / e.cells <= prev + 1e-12);
    prev = e.rays / e.cells;
  }
  const CriticalRoot r = critical_k(src, Criterion::crit);
  CHECK(r.attained);
}

TEST_CASE("tail bound") {
  const TailBound small = tail_bound(51, 25, 1e-9);
  CHECK(small.exact == doctest::Approx(2.0));
  CHECK(small.asymptotic == doctest::Approx(2.0));
  const TailBound t = tail_bound(51, 25, 15);
  CHECK((t.exact > 0 && t.exact <= 2));
  CHECK(t.asymptotic_rate == doctest::Approx(1.0 / (18 * 25)));
  const double p = 1.0 - 2.0 * 52 / (3.0 * 51 * 51 + 1);
  CHECK(t.p_max == doctest::Approx(p));
  CHECK(t.exact_rate == doctest::Approx((1 - p * p) / (18 * (1 - std::pow(p, 50)))));
  CHECK_THROWS_AS(tail_bound(51, 0, 5), DomainError);
  CHECK_THROWS_AS(tail_bound(51, 5, 0), DomainError);
  // the exact rate tends to the asymptotic one as d grows with k fixed
  double prev_gap = 1e9;
  for (int d : {101, 1001, 10001}) {
    const TailBound b = tail_bound(d, 50, 10);
    const double gap = std::abs(b.exact_rate / b.asymptotic_rate - 1);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.01);
}

TEST_CASE("tail bound dominates the empirical tail on small hexagons") {
  for (int d : {11, 21, 31}) {
    const IncidenceSystem a = build_hex2d(d);
    const int k = d / 2;
    const double mean = hex_rays_zero(d, k);
    Rng rng(derive_seed(13, {static_cast<std::uint64_t>(d)}));
    const int trials = 3000;
    for (double dev : {2.0, 4.0, 6.0}) {
      int exceed = 0;
      Rng local = rng;
      for (int t = 0; t < trials; ++t) {
        std::vector<Index> cells;
        for (int i = 0; i < k; ++i) cells.push_back(static_cast<Index>(local.below(static_cast<std::uint64_t>(a.n_cells()))));
        const double zeros = static_cast<double>(a.n_rays()) -
                             static_cast<double>(matvec(a, ParticleVector::binary(cells)).support_size());
        exceed += std::abs(zeros - mean) >= dev ? 1 : 0;
      }
      CHECK(static_cast<double>(exceed) / trials <= tail_bound(d, k, dev).exact);
    }
  }
}

TEST_CASE("wendel probability") {
  CHECK(wendel(3, 2).fraction() == "3/4");
  CHECK(wendel(1, 1).fraction() == "1/1");
  for (int m = 1; m <= 20; ++m)
    for (int n = 1; n <= m; ++n) CHECK(wendel(n, m).value == 1.0);
  for (int m = 1; m <= 10; ++m) CHECK(wendel(2 * m, m).fraction() == "1/2");
  for (int n = 1; n <= 40; ++n)
    for (int m = 1; m <= 40; ++m) CHECK(wendel(n, m).value == doctest::Approx(oracle::wendel_double(n, m)).epsilon(1e-15));
  CHECK(wendel(400, 100).value < 1e-20);
  CHECK_THROWS_AS(wendel(0, 1), DomainError);
}
