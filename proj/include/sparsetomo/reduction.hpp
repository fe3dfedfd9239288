#pragma once

#include <vector>

#include "sparsetomo/core.hpp"

namespace sparsetomo {

/// Subsystem on the measured rays and the cells not excluded by any zero
/// measurement. `system` is itself a constant-degree incidence system whose
/// row r is `kept_rays[r]` of the parent and whose column c is
/// `kept_cells[c]`.
struct ReducedSystem {
  std::vector<Index> kept_rays;
  std::vector<Index> kept_cells;
  IncidenceSystem system;
  std::vector<double> b_red;
  Index parent_rays = 0;
  Index parent_cells = 0;

  Index m_red() const { return static_cast<Index>(kept_rays.size()); }
  Index n_red() const { return static_cast<Index>(kept_cells.size()); }
};

ReducedSystem reduce(const IncidenceSystem& a, const MeasurementVector& b);

/// Embeds a reduced solution into the parent cell space (zero off the kept
/// cells). Rejects wrong lengths and negative components.
std::vector<double> restore(const ReducedSystem& red, const std::vector<double>& x_red);

/// Maps a parent-space particle vector into reduced coordinates. Throws when
/// the vector has mass outside the kept cells.
std::vector<double> to_reduced(const ReducedSystem& red, const ParticleVector& x);

enum class ExpansionVariant { wang, hassibi, inverse };

struct ExpansionResult {
  bool holds = false;
  Index neighbours = 0;     // |N(X)|
  Index supported = 0;      // |N(N(X)) \ N(N(X)^c)|
  double ratio = 0.0;       // |N(X)| / (l * supported)
  double threshold = 0.0;   // variant bound on ratio
};

/// Expansion diagnostic for the cell set X with delta = (sqrt5 - 1)/2:
///   wang     holds iff ratio >= delta
///   hassibi  holds iff ratio >  1/l      (some delta > 1/l exists)
///   inverse  holds iff ratio >= (1+delta)/l^2
/// The inverse variant is diagnostic only; it does not certify uniqueness.
ExpansionResult expansion_condition(const IncidenceSystem& a, const std::vector<Index>& cells,
                                    ExpansionVariant variant);

}  // namespace sparsetomo
