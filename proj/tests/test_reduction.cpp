#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "sparsetomo/geometry.hpp"
#include "sparsetomo/reduction.hpp"
#include "sparsetomo/rng.hpp"

using namespace sparsetomo;

namespace {

using Set = std::set<Index>;

Set neighbours_of_cells(const IncidenceSystem& a, const Set& cells) {
  Set out;
  for (Index c : cells)
    for (Index r : a.rays_of(c)) out.insert(r);
  return out;
}

Set neighbours_of_rays(const IncidenceSystem& a, const Set& rays) {
  Set out;
  for (Index r : rays)
    for (Index c : a.cells_on(r)) out.insert(c);
  return out;
}

Set complement(const Set& s, Index n) {
  Set out;
  for (Index i = 0; i < n; ++i)
    if (!s.count(i)) out.insert(i);
  return out;
}

Set minus(const Set& a, const Set& b) {
  Set out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

// N(R_b) \ N(R_b^c) from set operations on the bipartite graph.
Set kept_by_sets(const IncidenceSystem& a, const MeasurementVector& b) {
  Set rb;
  for (Index r = 0; r < a.n_rays(); ++r)
    if (b.values[static_cast<std::size_t>(r)] != 0.0) rb.insert(r);
  return minus(neighbours_of_rays(a, rb), neighbours_of_rays(a, complement(rb, a.n_rays())));
}

std::vector<Index> random_cells(Rng& rng, Index n, int k) {
  std::vector<Index> out;
  for (int i = 0; i < k; ++i) out.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  return out;
}

}  // namespace

TEST_CASE("zero measurement reduces to nothing") {
  const IncidenceSystem a = build_hex2d(5);
  const ReducedSystem red = reduce(a, matvec(a, ParticleVector{}));
  CHECK(red.m_red() == 0);
  CHECK(red.n_red() == 0);
  const auto x = restore(red, {});
  CHECK(x == std::vector<double>(19, 0.0));
}

TEST_CASE("single particle reduces to a 3x1 system") {
  const IncidenceSystem a = build_hex2d(7);
  for (Index c = 0; c < a.n_cells(); ++c) {
    const ReducedSystem red = reduce(a, matvec(a, ParticleVector::binary({c})));
    REQUIRE(red.n_red() == 1);
    CHECK(red.m_red() == 3);
    CHECK(red.kept_cells[0] == c);
    const auto x = restore(red, {1.0});
    CHECK(x == ParticleVector::binary({c}).dense(a.n_cells()));
  }
}

TEST_CASE("kept-cell rule equals the set definition") {
  Rng rng(2024);
  for (const IncidenceSystem& a : {build_hex2d(5), build_square2d(6, 4), build_cube3d(3)}) {
    for (int trial = 0; trial < 200; ++trial) {
      const int k = 1 + static_cast<int>(rng.below(8));
      const MeasurementVector b = matvec(a, ParticleVector::binary(random_cells(rng, a.n_cells(), k)));
      const ReducedSystem red = reduce(a, b);
      const Set expected = kept_by_sets(a, b);
      CHECK(Set(red.kept_cells.begin(), red.kept_cells.end()) == expected);
      CHECK(red.m_red() == static_cast<Index>(b.support_size()));
    }
  }
}

TEST_CASE("reduced system contains the generating vector") {
  const IncidenceSystem a = perturb(build_hex2d(9), {0.9, 1.1, 5, true});
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    ParticleVector x;
    x.kind = VectorKind::nonnegative;
    for (int i = 0; i < 6; ++i) {
      x.support.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(a.n_cells()))));
      x.values.push_back(rng.uniform_upper_closed());
    }
    const MeasurementVector b = matvec(a, x);
    const ReducedSystem red = reduce(a, b);
    const std::vector<double> xr = to_reduced(red, x);
    const auto ax = sparsetomo::apply(red.system, xr);
    for (std::size_t r = 0; r < ax.size(); ++r)
      CHECK(ax[r] == doctest::Approx(red.b_red[r]).epsilon(1e-13));
    const auto full = sparsetomo::apply(a, restore(red, xr));
    for (std::size_t r = 0; r < full.size(); ++r)
      CHECK(full[r] == doctest::Approx(b.values[r]).epsilon(1e-13));
  }
}

TEST_CASE("reduction is idempotent") {
  const IncidenceSystem a = build_hex2d(9);
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const ReducedSystem red = reduce(a, matvec(a, ParticleVector::binary(random_cells(rng, a.n_cells(), 10))));
    const ReducedSystem again = reduce(red.system, MeasurementVector::from_values(red.b_red));
    CHECK(again.m_red() == red.m_red());
    CHECK(again.n_red() == red.n_red());
  }
}

TEST_CASE("adding a particle never shrinks the measured rays") {
  const IncidenceSystem a = build_cube3d(4);
  Rng rng(99);
  std::vector<Index> cells;
  std::size_t prev = 0;
  for (int i = 0; i < 30; ++i) {
    cells.push_back(static_cast<Index>(rng.below(64)));
    const std::size_t now = matvec(a, ParticleVector::binary(cells)).support_size();
    CHECK(now >= prev);
    prev = now;
  }
}

TEST_CASE("reduce and restore reject invalid input") {
  const IncidenceSystem a = build_hex2d(5);
  std::vector<double> values(15, 0.0);
  MeasurementVector bad{values, std::vector<std::uint32_t>(15, 0)};
  bad.values[3] = -1.0;
  CHECK_THROWS_AS(reduce(a, bad), DomainError);
  CHECK_THROWS_AS(MeasurementVector::from_values({1.0, -2.0}), DomainError);
  const ReducedSystem red = reduce(a, matvec(a, ParticleVector::binary({4})));
  CHECK_THROWS_AS(restore(red, {-1.0}), DomainError);
  CHECK_THROWS_AS(restore(red, {1.0, 1.0}), DomainError);
}

TEST_CASE("expansion condition") {
  const IncidenceSystem a = build_hex2d(5);
  SUBCASE("single cell") {
    const ExpansionResult r = expansion_condition(a, {7}, ExpansionVariant::wang);
    CHECK(r.holds);
    CHECK(r.neighbours == 3);
    CHECK(r.supported == 1);
    CHECK(r.ratio == doctest::Approx(1.0));
  }
  SUBCASE("all cells fail the wang condition") {
    std::vector<Index> all(19);
    for (Index i = 0; i < 19; ++i) all[static_cast<std::size_t>(i)] = i;
    const ExpansionResult r = expansion_condition(a, all, ExpansionVariant::wang);
    CHECK_FALSE(r.holds);
    CHECK(r.ratio == doctest::Approx(15.0 / (3.0 * 19.0)));
  }
  SUBCASE("random triples agree with brute force") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      const auto cells = random_cells(rng, 19, 3);
      const Set x(cells.begin(), cells.end());
      const Set nx = neighbours_of_cells(a, x);
      const Set supported = minus(neighbours_of_rays(a, nx), neighbours_of_rays(a, complement(nx, 15)));
      const double ratio = static_cast<double>(nx.size()) / (3.0 * static_cast<double>(supported.size()));
      for (auto v : {ExpansionVariant::wang, ExpansionVariant::hassibi, ExpansionVariant::inverse}) {
        const ExpansionResult r = expansion_condition(a, cells, v);
        CHECK(r.neighbours == static_cast<Index>(nx.size()));
        CHECK(r.supported == static_cast<Index>(supported.size()));
        CHECK(r.ratio == doctest::Approx(ratio));
      }
      CHECK(expansion_condition(a, cells, ExpansionVariant::wang).holds == (ratio >= 0.6180339887498949));
      CHECK(expansion_condition(a, cells, ExpansionVariant::hassibi).holds == (ratio > 1.0 / 3.0));
      CHECK(expansion_condition(a, cells, ExpansionVariant::inverse).holds ==
            (ratio >= 1.6180339887498949 / 9.0));
    }
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(expansion_condition(a, {}, ExpansionVariant::wang), DomainError);
    CHECK_THROWS_AS(expansion_condition(a, {19}, ExpansionVariant::wang), DomainError);
  }
}
