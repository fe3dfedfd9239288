#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsetomo/core.hpp"
#include "sparsetomo/lp.hpp"
#include "sparsetomo/reduction.hpp"

namespace sparsetomo {

enum class UniquenessStatus { unique, not_unique, inconclusive };

std::string to_string(UniquenessStatus s);

struct UniquenessVerdict {
  UniquenessStatus status = UniquenessStatus::inconclusive;
  std::size_t probes_used = 0;
  std::optional<std::vector<double>> witness;  // full-length second solution
  double objective_gap = 0.0;  // largest sup-norm distance seen among x_ref, x_min and x_max
  std::string diagnostic;
};

struct VerifyOptions {
  std::size_t probes = 5;
  std::uint64_t seed = 0;
  double match_tolerance = 1e-6;
  LpOptions lp;
};

/// LP probing on the reduced system: for each probe draw f ~ N(0, I) and
/// solve min and max f^T x over {A_red x = b_red} with the given bounds.
/// Unique iff every optimum matches x_ref within match_tolerance.
UniquenessVerdict verify_uniqueness(const IncidenceSystem& a, const ParticleVector& x_ref,
                                    Bounds bounds, const VerifyOptions& options = {});

struct OracleVerdict {
  bool unique = false;
  std::optional<std::vector<double>> witness;
  std::size_t vertices = 0;  // basic feasible solutions visited
};

/// Largest number of reduced cells (cells on measured rays only) accepted by
/// the oracle.
inline constexpr Index kOracleMaxCells = 30;

/// Exact decision by enumerating the basic feasible solutions of
/// {A x = A x_ref, x >= 0 (, x <= 1)} in rational arithmetic. Unique iff the
/// only vertex is x_ref.
OracleVerdict exact_unique_oracle(const IncidenceSystem& a, const ParticleVector& x_ref,
                                  Bounds bounds);

enum class Certificate { certified_unique, uncertified };

std::string to_string(Certificate c);

/// Certified iff m_red >= n_red and A_red has full column rank. The empty
/// reduction (b = 0) is certified: x = 0 is the only nonnegative solution.
Certificate rank_certificate(const ReducedSystem& red);

}  // namespace sparsetomo
