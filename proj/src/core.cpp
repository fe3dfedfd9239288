#include "sparsetomo/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseQR>
#include <Eigen/OrderingMethods>

#include "exact_field.hpp"

namespace sparsetomo {

std::string to_string(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::hex2d: return "hex2d";
    case GeometryKind::square2d: return "square2d";
    case GeometryKind::cube3d: return "cube3d";
    case GeometryKind::external: return "external";
  }
  return "external";
}

std::string to_string(RankStatus status) {
  return status == RankStatus::overdetermined_full_rank ? "overdetermined_full_rank"
                                                        : "rank_deficient_or_underdetermined";
}

IncidenceSystem::IncidenceSystem(Index n_rays, Index n_cells, std::vector<Entry> entries,
                                 GeometryTag tag)
    : n_rays_(n_rays), n_cells_(n_cells), tag_(tag) {
  if (n_rays < 0 || n_cells < 0) {
    throw DomainError("invalid_dimensions", "matrix dimensions must be nonnegative");
  }
  for (const Entry& e : entries) {
    if (e.ray < 0 || e.ray >= n_rays) {
      throw DomainError("index_out_of_range", "ray index " + std::to_string(e.ray) +
                                                  " outside [0, " + std::to_string(n_rays) + ")");
    }
    if (e.cell < 0 || e.cell >= n_cells) {
      throw DomainError("index_out_of_range", "cell index " + std::to_string(e.cell) +
                                                  " outside [0, " + std::to_string(n_cells) + ")");
    }
    if (!(e.weight > 0.0)) {
      throw DomainError("nonpositive_weight", "weight at (" + std::to_string(e.ray) + ", " +
                                                  std::to_string(e.cell) + ") is not positive");
    }
  }

  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.cell != b.cell ? a.cell < b.cell : a.ray < b.ray;
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].cell == entries[i - 1].cell && entries[i].ray == entries[i - 1].ray) {
      throw DomainError("duplicate_entry", "duplicate entry at (" + std::to_string(entries[i].ray) +
                                               ", " + std::to_string(entries[i].cell) + ")");
    }
  }

  if (n_cells > 0) {
    if (entries.size() % static_cast<std::size_t>(n_cells) != 0) {
      throw DomainError("nonconstant_degree", "column supports differ in size");
    }
    left_degree_ = static_cast<Index>(entries.size() / static_cast<std::size_t>(n_cells));
    for (Index c = 0; c < n_cells; ++c) {
      for (Index t = 0; t < left_degree_; ++t) {
        if (entries[static_cast<std::size_t>(c * left_degree_ + t)].cell != c) {
          throw DomainError("nonconstant_degree",
                            "cell " + std::to_string(c) + " does not have " +
                                std::to_string(left_degree_) + " entries");
        }
      }
    }
  } else if (!entries.empty()) {
    throw DomainError("invalid_dimensions", "entries given for a matrix without columns");
  }

  cell_rays_.reserve(entries.size());
  cell_weights_.reserve(entries.size());
  std::vector<Index> row_count(static_cast<std::size_t>(n_rays), 0);
  for (const Entry& e : entries) {
    cell_rays_.push_back(e.ray);
    cell_weights_.push_back(e.weight);
    if (e.weight != 1.0) unit_weights_ = false;
    ++row_count[static_cast<std::size_t>(e.ray)];
  }
  ray_ptr_.assign(static_cast<std::size_t>(n_rays) + 1, 0);
  for (Index r = 0; r < n_rays; ++r) {
    ray_ptr_[static_cast<std::size_t>(r) + 1] = ray_ptr_[static_cast<std::size_t>(r)] +
                                               row_count[static_cast<std::size_t>(r)];
  }
  ray_cells_.resize(entries.size());
  ray_weights_.resize(entries.size());
  std::vector<Index> fill(ray_ptr_.begin(), ray_ptr_.end() - 1);
  // entries are cell-sorted, so each row receives its cells in increasing order
  for (const Entry& e : entries) {
    auto& pos = fill[static_cast<std::size_t>(e.ray)];
    ray_cells_[static_cast<std::size_t>(pos)] = e.cell;
    ray_weights_[static_cast<std::size_t>(pos)] = e.weight;
    ++pos;
  }
}

std::span<const Index> IncidenceSystem::rays_of(Index cell) const {
  return std::span<const Index>(cell_rays_).subspan(
      static_cast<std::size_t>(cell) * static_cast<std::size_t>(left_degree_),
      static_cast<std::size_t>(left_degree_));
}

std::span<const double> IncidenceSystem::weights_of(Index cell) const {
  return std::span<const double>(cell_weights_)
      .subspan(static_cast<std::size_t>(cell) * static_cast<std::size_t>(left_degree_),
               static_cast<std::size_t>(left_degree_));
}

std::span<const Index> IncidenceSystem::cells_on(Index ray) const {
  const auto b = static_cast<std::size_t>(ray_ptr_[static_cast<std::size_t>(ray)]);
  const auto e = static_cast<std::size_t>(ray_ptr_[static_cast<std::size_t>(ray) + 1]);
  return std::span<const Index>(ray_cells_).subspan(b, e - b);
}

std::span<const double> IncidenceSystem::weights_on(Index ray) const {
  const auto b = static_cast<std::size_t>(ray_ptr_[static_cast<std::size_t>(ray)]);
  const auto e = static_cast<std::size_t>(ray_ptr_[static_cast<std::size_t>(ray) + 1]);
  return std::span<const double>(ray_weights_).subspan(b, e - b);
}

Index IncidenceSystem::ray_size(Index ray) const {
  return ray_ptr_[static_cast<std::size_t>(ray) + 1] - ray_ptr_[static_cast<std::size_t>(ray)];
}

std::vector<Entry> IncidenceSystem::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (Index r = 0; r < n_rays_; ++r) {
    auto cells = cells_on(r);
    auto w = weights_on(r);
    for (std::size_t t = 0; t < cells.size(); ++t) out.push_back({r, cells[t], w[t]});
  }
  return out;
}

IncidenceSystem IncidenceSystem::with_weights(std::vector<double> cell_major_weights,
                                              GeometryTag tag) const {
  if (cell_major_weights.size() != cell_weights_.size()) {
    throw DomainError("invalid_dimensions", "weight vector does not match the sparsity pattern");
  }
  std::vector<Entry> out;
  out.reserve(cell_rays_.size());
  for (Index c = 0; c < n_cells_; ++c) {
    for (Index t = 0; t < left_degree_; ++t) {
      const auto idx = static_cast<std::size_t>(c * left_degree_ + t);
      out.push_back({cell_rays_[idx], c, cell_major_weights[idx]});
    }
  }
  return IncidenceSystem(n_rays_, n_cells_, std::move(out), tag);
}

MeasurementVector MeasurementVector::from_values(std::vector<double> values) {
  MeasurementVector b;
  b.hits.resize(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r] < 0.0) {
      throw DomainError("negative_measurement",
                        "measurement " + std::to_string(r) + " is negative");
    }
    b.hits[r] = values[r] != 0.0 ? 1u : 0u;
  }
  b.values = std::move(values);
  return b;
}

std::size_t MeasurementVector::support_size() const {
  return static_cast<std::size_t>(
      std::count_if(hits.begin(), hits.end(), [](std::uint32_t h) { return h > 0; }));
}

ParticleVector ParticleVector::binary(std::vector<Index> cells) {
  ParticleVector x;
  x.values.assign(cells.size(), 1.0);
  x.support = std::move(cells);
  x.kind = VectorKind::binary;
  return x;
}

ParticleVector ParticleVector::merged() const {
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
  ParticleVector out;
  out.kind = kind;
  for (std::size_t i : order) {
    if (!out.support.empty() && out.support.back() == support[i]) {
      out.values.back() += values[i];
    } else {
      out.support.push_back(support[i]);
      out.values.push_back(values[i]);
    }
  }
  return out;
}

std::vector<double> ParticleVector::dense(Index n_cells) const {
  std::vector<double> x(static_cast<std::size_t>(n_cells), 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] < 0 || support[i] >= n_cells) {
      throw DomainError("index_out_of_range",
                        "particle cell index " + std::to_string(support[i]) + " outside [0, " +
                            std::to_string(n_cells) + ")");
    }
    x[static_cast<std::size_t>(support[i])] += values[i];
  }
  return x;
}

MeasurementVector matvec(const IncidenceSystem& a, const ParticleVector& x) {
  if (x.values.size() != x.support.size()) {
    throw DomainError("invalid_dimensions", "particle values and support differ in length");
  }
  MeasurementVector b;
  b.values.assign(static_cast<std::size_t>(a.n_rays()), 0.0);
  b.hits.assign(static_cast<std::size_t>(a.n_rays()), 0u);
  for (std::size_t i = 0; i < x.support.size(); ++i) {
    const Index c = x.support[i];
    if (c < 0 || c >= a.n_cells()) {
      throw DomainError("index_out_of_range", "particle cell index " + std::to_string(c) +
                                                  " outside [0, " +
                                                  std::to_string(a.n_cells()) + ")");
    }
    if (!(x.values[i] > 0.0)) {
      throw DomainError("nonpositive_value", "particle values must be positive");
    }
    auto rays = a.rays_of(c);
    auto w = a.weights_of(c);
    for (std::size_t t = 0; t < rays.size(); ++t) {
      const auto r = static_cast<std::size_t>(rays[t]);
      b.values[r] += w[t] * x.values[i];
      ++b.hits[r];
    }
  }
  return b;
}

std::vector<double> apply(const IncidenceSystem& a, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(a.n_cells())) {
    throw DomainError("invalid_dimensions", "vector length differs from the number of cells");
  }
  std::vector<double> b(static_cast<std::size_t>(a.n_rays()), 0.0);
  for (Index c = 0; c < a.n_cells(); ++c) {
    const double xc = x[static_cast<std::size_t>(c)];
    if (xc == 0.0) continue;
    auto rays = a.rays_of(c);
    auto w = a.weights_of(c);
    for (std::size_t t = 0; t < rays.size(); ++t) b[static_cast<std::size_t>(rays[t])] += w[t] * xc;
  }
  return b;
}

RayStatistics ray_statistics(const IncidenceSystem& a) {
  RayStatistics s;
  const double n = static_cast<double>(a.n_cells());
  s.counts.resize(static_cast<std::size_t>(a.n_rays()));
  s.q.resize(s.counts.size());
  s.p.resize(s.counts.size());
  for (Index r = 0; r < a.n_rays(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    s.counts[i] = a.ray_size(r);
    s.q[i] = n > 0 ? s.counts[i] / n : 0.0;
    s.p[i] = 1.0 - s.q[i];
  }
  if (!s.q.empty()) {
    auto [lo, hi] = std::minmax_element(s.q.begin(), s.q.end());
    s.q_min = *lo;
    s.q_max = *hi;
    s.p_min = 1.0 - s.q_max;
    s.p_max = 1.0 - s.q_min;
  }
  return s;
}

namespace {

template <class Field>
Index echelon_rank(const IncidenceSystem& m, const Field& field) {
  using Value = typename Field::Value;
  const auto rows = static_cast<std::size_t>(m.n_rays());
  std::vector<Index> pivot_slot(rows, -1);
  std::vector<std::vector<std::pair<Index, Value>>> basis;  // leading entry normalized to one
  std::vector<Value> work(rows, field.zero());
  std::vector<char> queued(rows, 0);
  std::priority_queue<Index, std::vector<Index>, std::greater<>> heap;

  Index rank = 0;
  for (Index c = 0; c < m.n_cells(); ++c) {
    auto rays = m.rays_of(c);
    auto w = m.weights_of(c);
    for (std::size_t t = 0; t < rays.size(); ++t) {
      const auto r = static_cast<std::size_t>(rays[t]);
      work[r] = field.from_weight(w[t]);
      queued[r] = 1;
      heap.push(rays[t]);
    }
    bool independent = false;
    while (!heap.empty()) {
      const Index r = heap.top();
      heap.pop();
      const auto ri = static_cast<std::size_t>(r);
      queued[ri] = 0;
      if (field.is_zero(work[ri])) continue;
      const Index slot = pivot_slot[ri];
      if (slot < 0) {
        // r is the leading row of the reduced column: new basis vector
        std::vector<std::pair<Index, Value>> vec;
        const Value inv = field.inverse(work[ri]);
        vec.emplace_back(r, field.one());
        work[ri] = field.zero();
        while (!heap.empty()) {
          const Index s = heap.top();
          heap.pop();
          const auto si = static_cast<std::size_t>(s);
          queued[si] = 0;
          if (!field.is_zero(work[si])) vec.emplace_back(s, field.mul(work[si], inv));
          work[si] = field.zero();
        }
        pivot_slot[ri] = static_cast<Index>(basis.size());
        basis.push_back(std::move(vec));
        independent = true;
        break;
      }
      const Value factor = work[ri];
      for (const auto& [row, val] : basis[static_cast<std::size_t>(slot)]) {
        const auto rr = static_cast<std::size_t>(row);
        work[rr] = field.sub(work[rr], field.mul(factor, val));
        if (!queued[rr] && rr != ri) {
          queued[rr] = 1;
          heap.push(row);
        }
      }
      work[ri] = field.zero();
    }
    if (independent) ++rank;
  }
  return rank;
}

Index float_rank(const IncidenceSystem& m, double tolerance) {
  const auto rows = static_cast<Eigen::Index>(m.n_rays());
  const auto cols = static_cast<Eigen::Index>(m.n_cells());
  if (rows * cols <= 4'000'000) {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows, cols);
    for (Index c = 0; c < m.n_cells(); ++c) {
      auto rays = m.rays_of(c);
      auto w = m.weights_of(c);
      for (std::size_t t = 0; t < rays.size(); ++t) dense(rays[t], c) = w[t];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dense);
    qr.setThreshold(tolerance);
    return static_cast<Index>(qr.rank());
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.nnz());
  for (Index c = 0; c < m.n_cells(); ++c) {
    auto rays = m.rays_of(c);
    auto w = m.weights_of(c);
    for (std::size_t t = 0; t < rays.size(); ++t) trip.emplace_back(rays[t], c, w[t]);
  }
  Eigen::SparseMatrix<double> sp(rows, cols);
  sp.setFromTriplets(trip.begin(), trip.end());
  sp.makeCompressed();
  Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(tolerance);
  qr.compute(sp);
  return static_cast<Index>(qr.rank());
}

}  // namespace

Index column_rank(const IncidenceSystem& m, double tolerance) {
  if (m.n_cells() == 0 || m.n_rays() == 0) return 0;
  if (!m.unit_weights()) return float_rank(m, tolerance);
  // rank over F_p never exceeds the rank over Q, so a full rank result is exact
  const Index r1 = echelon_rank(m, detail::PrimeField{detail::PrimeField::kMersenne61});
  if (r1 == m.n_cells()) return r1;
  const std::size_t size = static_cast<std::size_t>(m.n_rays()) * static_cast<std::size_t>(m.n_cells());
  if (size <= 40'000) return echelon_rank(m, detail::RationalField{});
  const Index r2 = echelon_rank(m, detail::PrimeField{detail::PrimeField::kSecondPrime});
  return std::max(r1, r2);
}

RankStatus column_rank_status(const IncidenceSystem& m, double tolerance) {
  if (m.n_cells() == 0 || m.n_rays() == 0) {
    throw DomainError("empty_matrix", "rank status of an empty matrix is undefined");
  }
  if (m.n_rays() < m.n_cells()) return RankStatus::rank_deficient_or_underdetermined;
  return column_rank(m, tolerance) == m.n_cells() ? RankStatus::overdetermined_full_rank
                                                  : RankStatus::rank_deficient_or_underdetermined;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), ptr);
}

void write_triplets(std::ostream& out, const IncidenceSystem& a) {
  out << a.n_rays() << ' ' << a.n_cells() << ' ' << a.nnz() << '\n';
  for (Index r = 0; r < a.n_rays(); ++r) {
    auto cells = a.cells_on(r);
    auto w = a.weights_on(r);
    for (std::size_t t = 0; t < cells.size(); ++t) {
      out << (r + 1) << ' ' << (cells[t] + 1) << ' ' << format_double(w[t]) << '\n';
    }
  }
}

IncidenceSystem read_triplets(std::istream& in) {
  long long m = 0, n = 0, nnz = 0;
  if (!(in >> m >> n >> nnz) || m < 0 || n < 0 || nnz < 0) {
    throw DomainError("bad_triplet_header", "expected header 'm n nnz'");
  }
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (long long i = 0; i < nnz; ++i) {
    long long r = 0, c = 0;
    std::string token;
    if (!(in >> r >> c >> token)) {
      throw DomainError("bad_triplet_entry", "truncated entry list at entry " + std::to_string(i + 1));
    }
    double w = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), w);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw DomainError("bad_triplet_entry", "unparsable weight '" + token + "'");
    }
    entries.push_back({static_cast<Index>(r - 1), static_cast<Index>(c - 1), w});
  }
  GeometryTag tag;
  tag.kind = GeometryKind::external;
  IncidenceSystem sys(static_cast<Index>(m), static_cast<Index>(n), std::move(entries), tag);
  tag.perturbed = !sys.unit_weights();
  tag.cameras = sys.left_degree();
  return sys.with_weights(std::vector<double>(sys.cell_major_weights().begin(),
                                              sys.cell_major_weights().end()),
                          tag);
}

std::uint64_t content_hash(const IncidenceSystem& a) {
  std::ostringstream os;
  write_triplets(os, a);
  const std::string text = os.str();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace sparsetomo
