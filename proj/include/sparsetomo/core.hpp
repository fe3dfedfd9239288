#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsetomo {

using Index = std::int32_t;

/// Rejection of an input that violates a documented precondition.
///
/// `code` is a short machine-readable token (e.g. "index_out_of_range"),
/// `what()` carries the human-readable message.
class DomainError : public std::invalid_argument {
 public:
  DomainError(std::string code, const std::string& message)
      : std::invalid_argument(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

enum class GeometryKind { hex2d, square2d, cube3d, external };

std::string to_string(GeometryKind kind);

struct GeometryTag {
  GeometryKind kind = GeometryKind::external;
  int d = 0;
  int cameras = 0;
  bool perturbed = false;
};

struct Entry {
  Index ray;
  Index cell;
  double weight;
};

/// Sparse nonnegative projection matrix with constant column support.
///
/// Rows are rays, columns are cells. Both adjacency directions are stored:
/// cell -> rays as a fixed-stride array (every cell has exactly
/// `left_degree()` rays) and ray -> cells in compressed row form. Entries are
/// sorted by cell within a ray and by ray within a cell. Immutable after
/// construction.
class IncidenceSystem {
 public:
  IncidenceSystem() = default;

  /// Validates and normalizes `entries`. Throws DomainError when an index is
  /// out of range, a (ray, cell) pair repeats, a weight is not strictly
  /// positive, or the column supports are not all of the same size.
  IncidenceSystem(Index n_rays, Index n_cells, std::vector<Entry> entries,
                  GeometryTag tag = {});

  Index n_rays() const noexcept { return n_rays_; }
  Index n_cells() const noexcept { return n_cells_; }
  Index left_degree() const noexcept { return left_degree_; }
  std::size_t nnz() const noexcept { return cell_rays_.size(); }
  const GeometryTag& tag() const noexcept { return tag_; }

  /// True when every weight equals 1 exactly.
  bool unit_weights() const noexcept { return unit_weights_; }

  std::span<const Index> rays_of(Index cell) const;
  std::span<const double> weights_of(Index cell) const;

  std::span<const Index> cells_on(Index ray) const;
  std::span<const double> weights_on(Index ray) const;
  Index ray_size(Index ray) const;

  /// Row-major (ray, then cell) entry list.
  std::vector<Entry> entries() const;

  /// Same sparsity pattern, new weights given in cell-major order.
  IncidenceSystem with_weights(std::vector<double> cell_major_weights,
                               GeometryTag tag) const;

  std::span<const double> cell_major_weights() const { return cell_weights_; }

 private:
  Index n_rays_ = 0;
  Index n_cells_ = 0;
  Index left_degree_ = 0;
  bool unit_weights_ = true;
  GeometryTag tag_;
  std::vector<Index> cell_rays_;
  std::vector<double> cell_weights_;
  std::vector<Index> ray_ptr_{0};
  std::vector<Index> ray_cells_;
  std::vector<double> ray_weights_;
};

/// Right-hand side b = A x. Alongside the accumulated values the number of
/// contributions per ray is tracked, so the support is structural and never
/// decided by comparing a floating value against a tolerance.
struct MeasurementVector {
  std::vector<double> values;
  std::vector<std::uint32_t> hits;

  /// Builds from plain values; a ray counts as measured iff its value is
  /// nonzero. Negative values are rejected.
  static MeasurementVector from_values(std::vector<double> values);

  std::size_t size() const noexcept { return values.size(); }
  bool measured(Index ray) const { return hits[static_cast<std::size_t>(ray)] > 0; }
  std::size_t support_size() const;
};

enum class VectorKind { binary, nonnegative };

/// Sparse particle configuration. `support` may list a cell several times
/// (several particles in one cell); `values` is aligned with `support`.
struct ParticleVector {
  std::vector<Index> support;
  std::vector<double> values;
  VectorKind kind = VectorKind::binary;

  static ParticleVector binary(std::vector<Index> cells);

  /// Sorted distinct cells with summed values.
  ParticleVector merged() const;
  std::vector<double> dense(Index n_cells) const;
};

struct RayStatistics {
  std::vector<Index> counts;  // |r|
  std::vector<double> q;      // |r| / |C|
  std::vector<double> p;      // 1 - q
  double q_min = 0, q_max = 0, p_min = 0, p_max = 0;
};

MeasurementVector matvec(const IncidenceSystem& a, const ParticleVector& x);

/// Dense product, used for consistency checks on restored solutions.
std::vector<double> apply(const IncidenceSystem& a, std::span<const double> x);

RayStatistics ray_statistics(const IncidenceSystem& a);

enum class RankStatus { overdetermined_full_rank, rank_deficient_or_underdetermined };

std::string to_string(RankStatus status);

/// Full column rank test. Unit-weight systems are decided exactly (integer
/// elimination over prime fields, confirmed with rational elimination on
/// small deficient cases); weighted systems use column-pivoted QR with
/// `tolerance` relative to the largest diagonal entry of R.
RankStatus column_rank_status(const IncidenceSystem& m, double tolerance = 1e-9);

/// Numerical column rank (same dispatch as column_rank_status).
Index column_rank(const IncidenceSystem& m, double tolerance = 1e-9);

// Coordinate triplet text format: header "m n nnz", then "row col value"
// with 1-based indices in row-major order.
void write_triplets(std::ostream& out, const IncidenceSystem& a);
IncidenceSystem read_triplets(std::istream& in);

/// 64-bit FNV-1a over the triplet text, for run manifests.
std::uint64_t content_hash(const IncidenceSystem& a);

/// Locale-independent shortest round-trip formatting.
std::string format_double(double value);

}  // namespace sparsetomo
