#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparsetomo/core.hpp"
#include "sparsetomo/geometry.hpp"
#include "sparsetomo/rng.hpp"

namespace sparsetomo {

enum class SamplingMode { with_replacement, distinct };

std::string to_string(SamplingMode m);
std::string to_string(VectorKind k);

/// k particles on n_cells cells. with_replacement draws k independent
/// uniform cells; distinct draws a uniform k-subset. Binary vectors carry the
/// particle multiplicity per cell, nonnegative vectors an independent uniform
/// (0, 1] value per occupied cell. The result is merged (sorted, distinct).
ParticleVector sample_particles(Index n_cells, std::size_t k, VectorKind kind, SamplingMode mode,
                                Rng& rng);

struct PhaseChecks {
  bool rank = true;
  bool unique_nonneg = true;
  bool unique_box = true;
  bool dims = true;

  /// Parses a comma separated subset of {rank, unique_nonneg, unique_box,
  /// dims}, or "all".
  static PhaseChecks parse(const std::string& list);
  std::string to_string() const;
};

struct PhaseGridSpec {
  GeometrySpec geometry;  // geometry.d is ignored, d_grid is used instead
  std::vector<int> d_grid;
  std::vector<double> rho_grid;
  std::size_t trials = 50;
  std::uint64_t master_seed = 0;
  std::optional<PerturbationSpec> perturbation;  // seed is mixed with d
  VectorKind vector_kind = VectorKind::binary;
  SamplingMode mode = SamplingMode::distinct;
  PhaseChecks checks;
  std::size_t probes = 5;
  unsigned threads = 0;  // 0: SPARSETOMO_THREADS or hardware concurrency

  void validate() const;
  /// k = floor(rho d^{D-1}) with D the geometry dimension.
  std::size_t sparsity(int d, double rho) const;
};

struct PhaseGridCell {
  int d = 0;
  double rho = 0;
  std::size_t k = 0;
  std::size_t trials = 0;
  // NaN when the check was not requested
  double frac_rank_ok = 0, frac_unique_nonneg = 0, frac_unique_box = 0;
  double mean_m_red = 0, se_m_red = 0, mean_n_red = 0, se_n_red = 0;
  std::size_t inconclusive = 0;  // LP probes that did not finish (counted as not unique)
};

/// Thread count used when a spec leaves `threads` at 0.
unsigned default_threads();

std::vector<PhaseGridCell> run_phase_grid(const PhaseGridSpec& spec);

enum class GridFormat { csv, json };

inline constexpr const char* kGridCsvHeader =
    "d,rho,k,trials,frac_rank_ok,frac_unique_nonneg,frac_unique_box,mean_m_red,se_m_red,"
    "mean_n_red,se_n_red";

/// CSV writes only the cells; JSON also embeds the spec and the seed manifest
/// when `spec` is given. Unrequested checks are empty CSV fields / JSON null.
void emit_grid(std::ostream& out, const std::vector<PhaseGridCell>& cells, GridFormat format,
               const PhaseGridSpec* spec = nullptr);

/// As above, to a file. Throws DomainError("unwritable") on failure.
void emit_grid(const std::string& path, const std::vector<PhaseGridCell>& cells,
               GridFormat format, const PhaseGridSpec* spec = nullptr);

}  // namespace sparsetomo
