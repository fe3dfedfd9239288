#include "sparsetomo/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>

#include <boost/multiprecision/gmp.hpp>

#include "sparsetomo/rng.hpp"

namespace sparsetomo {

namespace {

void require_hex(int d) {
  if (d < 3 || d % 2 == 0) {
    throw DomainError("invalid_d", "hexagon analytics require an odd d >= 3, got " + std::to_string(d));
  }
}

void require_cube(int d) {
  if (d < 2) throw DomainError("invalid_d", "cube analytics require d >= 2, got " + std::to_string(d));
}

void require_k(double k) {
  if (!(k >= 0.0) || !std::isfinite(k)) {
    throw DomainError("invalid_k", "sparsity k must be a finite nonnegative number");
  }
}

double hex_cells(int d) { return (3.0 * d * d + 1.0) / 4.0; }

// pow_table[x] = (1 - x / total)^k for x in [0, max_x]
std::vector<double> pow_table(double total, int max_x, double k) {
  std::vector<double> t(static_cast<std::size_t>(max_x) + 1);
  for (int x = 0; x <= max_x; ++x) t[static_cast<std::size_t>(x)] = std::pow(std::max(0.0, 1.0 - x / total), k);
  return t;
}

}  // namespace

double hex_rays_zero(int d, double k) {
  require_hex(d);
  require_k(k);
  const int h = (d - 1) / 2;
  const double cells = hex_cells(d);
  long double sum = 0;
  for (int a = -h; a <= h; ++a) sum += std::pow(1.0 - (d - std::abs(a)) / cells, k);
  return static_cast<double>(3 * sum);
}

double hex_cells_zero(int d, double k) {
  require_hex(d);
  require_k(k);
  const int h = (d - 1) / 2;
  const double cells = hex_cells(d);
  const std::vector<double> pw = pow_table(cells, 3 * d, k);
  auto size = [d](int offset) { return d - std::abs(offset); };

  // single direction: every cell of a zero ray is removable
  long double n1 = 0;
  for (int a = -h; a <= h; ++a) n1 += size(a) * pw[static_cast<std::size_t>(size(a))];
  // two directions: intersecting pairs share exactly one cell
  long double n2 = 0;
  for (int a = -h; a <= h; ++a) {
    for (int b = -h; b <= h; ++b) {
      if (std::abs(a + b) > h) continue;
      n2 += pw[static_cast<std::size_t>(size(a) + size(b) - 1)];
    }
  }
  // all three rays of a cell
  long double n3 = 0;
  for (int i = -h; i <= h; ++i) {
    for (int j = -h; j <= h; ++j) {
      if (std::abs(i + j) > h) continue;
      n3 += pw[static_cast<std::size_t>(size(i) + size(j) + size(i + j) - 2)];
    }
  }
  return static_cast<double>(3 * n1 - 3 * n2 + n3);
}

ExpectedDims hex_dims(int d, double k) {
  ExpectedDims e;
  e.k = k;
  e.rays_zero = hex_rays_zero(d, k);
  e.rays = 3.0 * d - e.rays_zero;
  e.cells_zero = hex_cells_zero(d, k);
  e.cells = hex_cells(d) - e.cells_zero;
  return e;
}

LinearQuadratic hex_rays_zero_bounds(int d, double k) {
  require_hex(d);
  require_k(k);
  const double rays = 3.0 * d;
  const double q_max = d / hex_cells(d);
  return {rays - 3.0 * k, rays - 3.0 * k + 1.5 * k * (k - 1.0) * q_max};
}

double cube_rays_zero(int d, double k) {
  require_cube(d);
  require_k(k);
  const double cells = static_cast<double>(d) * d * d;
  long double inner = 0;
  for (int s = 1; s <= d - 1; ++s) inner += std::pow(1.0 - s / cells, k);
  return static_cast<double>(4.0L * d * (std::pow(1.0 - 1.0 / (static_cast<double>(d) * d), k) + 2 * inner));
}

double cube_rays(int d, double k) {
  return 4.0 * d * (2.0 * d - 1.0) - cube_rays_zero(d, k);
}

double cube_cells(int d, double k) {
  require_cube(d);
  require_k(k);
  const double total = static_cast<double>(d) * d * d;
  const std::vector<double> pw = pow_table(total, 4 * d, k);
  auto size = [d](int s) { return d - std::abs(s); };
  auto r2 = [&](int a, int b) { return pw[static_cast<std::size_t>(size(a) + size(b) - 1)]; };
  auto r3 = [&](int a, int b, int c) {
    return pw[static_cast<std::size_t>(size(a) + size(b) + size(c) - 2)];
  };
  auto r4 = [&](int a, int b, int c, int e) {
    return pw[static_cast<std::size_t>(size(a) + size(b) + size(c) + size(e) - 3)];
  };

  long double n1_inner = 0;
  for (int s = 1; s <= d - 1; ++s) n1_inner += s * pw[static_cast<std::size_t>(s)];
  const long double n1 = 4.0L * d * (d * pw[static_cast<std::size_t>(d)] + 2 * n1_inner);

  // directions (1,2) and (3,4); the summand does not depend on the third index
  long double pair_same = 0;
  for (int i = 1; i <= d; ++i) {
    for (int l = 1; l <= d; ++l) pair_same += r2(l + i - 1 - d, i - l);
  }
  long double pair_cross = 0, triple = 0, quad = 0;
  for (int i = 1; i <= d; ++i) {
    for (int j = 1; j <= d; ++j) {
      for (int l = 1; l <= d; ++l) {
        pair_cross += r2(l - i, l - j);
        triple += r3(l + i - 1 - d, l - i, l - j) + r3(l - i, l - j, l + j - 1 - d);
        quad += r4(l + i - 1 - d, l - i, l + j - 1 - d, l - j);
      }
    }
  }
  const long double n2 = 2.0L * d * pair_same + 4 * pair_cross;
  const long double n3 = 2 * triple;
  return static_cast<double>(total - n1 + n2 - n3 + quad);
}

ExpectedDims cube_dims(int d, double k) {
  ExpectedDims e;
  e.k = k;
  e.rays_zero = cube_rays_zero(d, k);
  e.rays = 4.0 * d * (2.0 * d - 1.0) - e.rays_zero;
  e.cells = cube_cells(d, k);
  e.cells_zero = static_cast<double>(d) * d * d - e.cells;
  return e;
}

EmpiricalDims empirical_dims(const IncidenceSystem& a, std::size_t k, std::size_t trials,
                             std::uint64_t seed) {
  if (trials == 0) throw DomainError("invalid_trials", "trials must be >= 1");
  EmpiricalDims out;
  out.k = static_cast<double>(k);
  out.trials = trials;
  if (a.n_cells() == 0) return out;
  std::vector<std::uint32_t> hits(static_cast<std::size_t>(a.n_rays()));
  long double s_r = 0, ss_r = 0, s_c = 0, ss_c = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, {t}));
    std::fill(hits.begin(), hits.end(), 0u);
    for (std::size_t p = 0; p < k; ++p) {
      const auto c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(a.n_cells())));
      for (Index r : a.rays_of(c)) ++hits[static_cast<std::size_t>(r)];
    }
    const auto m_red = static_cast<double>(
        std::count_if(hits.begin(), hits.end(), [](std::uint32_t h) { return h > 0; }));
    double n_red = 0;
    for (Index c = 0; c < a.n_cells(); ++c) {
      auto rays = a.rays_of(c);
      if (std::all_of(rays.begin(), rays.end(),
                      [&](Index r) { return hits[static_cast<std::size_t>(r)] > 0; })) {
        n_red += 1;
      }
    }
    s_r += m_red;
    ss_r += static_cast<long double>(m_red) * m_red;
    s_c += n_red;
    ss_c += static_cast<long double>(n_red) * n_red;
  }
  const auto n = static_cast<long double>(trials);
  auto se = [&](long double s, long double ss) {
    if (trials < 2) return 0.0;
    const long double var = std::max<long double>(0, (ss - s * s / n) / (n - 1));
    return static_cast<double>(std::sqrt(var / n));
  };
  out.mean_rays = static_cast<double>(s_r / n);
  out.se_rays = se(s_r, ss_r);
  out.mean_cells = static_cast<double>(s_c / n);
  out.se_cells = se(s_c, ss_c);
  out.mean_rays_zero = a.n_rays() - out.mean_rays;
  out.se_rays_zero = out.se_rays;
  out.mean_cells_zero = a.n_cells() - out.mean_cells;
  out.se_cells_zero = out.se_cells;
  return out;
}

DimsSource analytic_hex(int d) {
  require_hex(d);
  DimsSource s;
  s.name = "hex2d";
  s.left_degree = 3;
  s.max_k = hex_cells(d);
  s.at = [d](double k) { return hex_dims(d, k); };
  return s;
}

DimsSource analytic_cube(int d) {
  require_cube(d);
  DimsSource s;
  s.name = "cube3d";
  s.left_degree = 4;
  s.max_k = static_cast<double>(d) * d * d;
  s.at = [d](double k) { return cube_dims(d, k); };
  return s;
}

DimsSource empirical_source(const IncidenceSystem& a, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw DomainError("invalid_trials", "trials must be >= 1");
  struct Cache {
    std::mutex mu;
    std::map<std::size_t, ExpectedDims> values;
  };
  auto cache = std::make_shared<Cache>();
  auto system = std::make_shared<IncidenceSystem>(a);
  DimsSource s;
  s.name = "empirical:" + to_string(a.tag().kind);
  s.left_degree = a.left_degree();
  s.max_k = a.n_cells();
  s.integer_k = true;
  s.at = [cache, system, trials, seed](double k) {
    const auto ik = static_cast<std::size_t>(std::llround(k));
    std::lock_guard lock(cache->mu);
    auto it = cache->values.find(ik);
    if (it != cache->values.end()) return it->second;
    const EmpiricalDims e = empirical_dims(*system, ik, trials, seed);
    ExpectedDims out;
    out.k = static_cast<double>(ik);
    out.rays = e.mean_rays;
    out.rays_zero = e.mean_rays_zero;
    out.cells = e.mean_cells;
    out.cells_zero = e.mean_cells_zero;
    cache->values.emplace(ik, out);
    return out;
  };
  return s;
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::delta: return "delta";
    case Criterion::crit: return "crit";
    case Criterion::opt: return "opt";
    case Criterion::inv: return "inv";
  }
  return "delta";
}

double criterion_constant(Criterion c, int left_degree) {
  switch (c) {
    case Criterion::delta: return kDelta * left_degree;
    case Criterion::crit: return 1.0;
    case Criterion::opt: return 0.5;
    case Criterion::inv: return (1.0 + kDelta) / left_degree;
  }
  return 1.0;
}

CriticalRoot critical_k(const DimsSource& source, Criterion criterion) {
  const double c = criterion_constant(criterion, source.left_degree);
  auto f = [&](double k) {
    const ExpectedDims e = source.at(k);
    return e.rays - c * e.cells;
  };
  auto relative = [&](double k) {
    const ExpectedDims e = source.at(k);
    return e.rays > 0 ? (e.rays - c * e.cells) / e.rays : 0.0;
  };
  CriticalRoot root;
  double lo = 1.0;
  double hi = source.integer_k ? std::floor(source.max_k) : source.max_k;
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (!(f_lo > 0.0) || !(f_hi < 0.0)) return root;

  if (source.integer_k) {
    while (hi - lo > 1.0) {
      const double mid = std::floor((lo + hi) / 2.0);
      const double fm = f(mid);
      if (fm > 0.0) {
        lo = mid;
        f_lo = fm;
      } else {
        hi = mid;
        f_hi = fm;
      }
    }
    root.attained = true;
    root.k = lo + f_lo / (f_lo - f_hi);
    root.residual = relative(std::round(root.k));
    return root;
  }

  for (int it = 0; it < 200 && hi - lo > 1e-7; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  root.attained = true;
  root.k = 0.5 * (lo + hi);
  root.residual = relative(root.k);
  return root;
}

CriticalCurves critical_curves(const DimsSource& source, double d) {
  CriticalCurves curves;
  curves.d = d;
  auto get = [&](Criterion c) -> std::optional<double> {
    const CriticalRoot r = critical_k(source, c);
    if (!r.attained) return std::nullopt;
    return r.k;
  };
  curves.k_delta = get(Criterion::delta);
  if (curves.k_delta) curves.k_tilde_delta = source.at(*curves.k_delta).cells / (1.0 + kDelta);
  curves.k_crit = get(Criterion::crit);
  curves.k_opt = get(Criterion::opt);
  curves.k_inv = get(Criterion::inv);
  return curves;
}

TailBound tail_bound(int d, double k, double deviation) {
  require_hex(d);
  if (!(k >= 1.0) || !std::isfinite(k)) {
    throw DomainError("invalid_k", "tail bound requires k >= 1");
  }
  if (!(deviation > 0.0)) throw DomainError("invalid_deviation", "deviation must be positive");
  TailBound t;
  const double q_min = 2.0 * (d + 1.0) / (3.0 * d * d + 1.0);
  t.p_max = 1.0 - q_min;
  const double p2 = t.p_max * t.p_max;
  t.exact_rate = (1.0 - p2) / (18.0 * (1.0 - std::pow(p2, k)));
  t.asymptotic_rate = 1.0 / (18.0 * k);
  t.exact = 2.0 * std::exp(-t.exact_rate * deviation * deviation);
  t.asymptotic = 2.0 * std::exp(-t.asymptotic_rate * deviation * deviation);
  return t;
}

WendelProbability wendel(std::int64_t n, std::int64_t m) {
  using boost::multiprecision::mpq_rational;
  using boost::multiprecision::mpz_int;
  if (n < 1 || m < 1) throw DomainError("invalid_arguments", "wendel requires n >= 1 and m >= 1");
  mpz_int binom = 1;
  mpz_int sum = 0;
  const std::int64_t top = std::min(m - 1, n - 1);
  for (std::int64_t i = 0; i <= top; ++i) {
    if (i > 0) binom = binom * (n - i) / i;  // C(n-1, i) from C(n-1, i-1)
    sum += binom;
  }
  mpz_int denom = 1;
  denom <<= static_cast<unsigned>(n - 1);
  const mpq_rational prob(sum, denom);
  WendelProbability w;
  w.numerator = boost::multiprecision::numerator(prob).str();
  w.denominator = boost::multiprecision::denominator(prob).str();
  w.value = prob.convert_to<double>();
  return w;
}

}  // namespace sparsetomo
