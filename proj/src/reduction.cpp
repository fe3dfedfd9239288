#include "sparsetomo/reduction.hpp"

#include <algorithm>
#include <cmath>


namespace sparsetomo {

ReducedSystem reduce(const IncidenceSystem& a, const MeasurementVector& b) {
  if (b.size() != static_cast<std::size_t>(a.n_rays()) || b.hits.size() != b.values.size()) {
    throw DomainError("invalid_dimensions", "measurement length differs from the number of rays");
  }
  for (std::size_t r = 0; r < b.values.size(); ++r) {
    if (b.values[r] < 0.0) {
      throw DomainError("negative_measurement", "measurement " + std::to_string(r) + " is negative");
    }
  }

  ReducedSystem red;
  red.parent_rays = a.n_rays();
  red.parent_cells = a.n_cells();
  std::vector<Index> row_map(static_cast<std::size_t>(a.n_rays()), -1);
  for (Index r = 0; r < a.n_rays(); ++r) {
    if (b.measured(r)) {
      row_map[static_cast<std::size_t>(r)] = static_cast<Index>(red.kept_rays.size());
      red.kept_rays.push_back(r);
      red.b_red.push_back(b.values[static_cast<std::size_t>(r)]);
    }
  }

  std::vector<Entry> entries;
  for (Index c = 0; c < a.n_cells(); ++c) {
    auto rays = a.rays_of(c);
    // kept iff every incident ray is measured
    const bool kept = std::all_of(rays.begin(), rays.end(),
                                  [&](Index r) { return row_map[static_cast<std::size_t>(r)] >= 0; });
    if (!kept) continue;
    const auto col = static_cast<Index>(red.kept_cells.size());
    red.kept_cells.push_back(c);
    auto w = a.weights_of(c);
    for (std::size_t t = 0; t < rays.size(); ++t) {
      entries.push_back({row_map[static_cast<std::size_t>(rays[t])], col, w[t]});
    }
  }
  GeometryTag tag = a.tag();
  red.system = IncidenceSystem(red.m_red(), red.n_red(), std::move(entries), tag);
  return red;
}

std::vector<double> restore(const ReducedSystem& red, const std::vector<double>& x_red) {
  if (x_red.size() != red.kept_cells.size()) {
    throw DomainError("invalid_dimensions", "reduced solution has length " +
                                                std::to_string(x_red.size()) + ", expected " +
                                                std::to_string(red.kept_cells.size()));
  }
  std::vector<double> x(static_cast<std::size_t>(red.parent_cells), 0.0);
  for (std::size_t i = 0; i < x_red.size(); ++i) {
    if (x_red[i] < 0.0) {
      throw DomainError("negative_component", "reduced solution component " + std::to_string(i) +
                                                  " is negative");
    }
    x[static_cast<std::size_t>(red.kept_cells[i])] = x_red[i];
  }
  return x;
}

std::vector<double> to_reduced(const ReducedSystem& red, const ParticleVector& x) {
  std::vector<Index> position(static_cast<std::size_t>(red.parent_cells), -1);
  for (std::size_t i = 0; i < red.kept_cells.size(); ++i) {
    position[static_cast<std::size_t>(red.kept_cells[i])] = static_cast<Index>(i);
  }
  std::vector<double> out(red.kept_cells.size(), 0.0);
  for (std::size_t i = 0; i < x.support.size(); ++i) {
    const Index c = x.support[i];
    if (c < 0 || c >= red.parent_cells || position[static_cast<std::size_t>(c)] < 0) {
      throw DomainError("outside_reduction", "cell " + std::to_string(c) + " is not a kept cell");
    }
    out[static_cast<std::size_t>(position[static_cast<std::size_t>(c)])] += x.values[i];
  }
  return out;
}

ExpansionResult expansion_condition(const IncidenceSystem& a, const std::vector<Index>& cells,
                                    ExpansionVariant variant) {
  if (cells.empty()) throw DomainError("empty_set", "expansion condition needs a nonempty cell set");
  std::vector<char> in_nx(static_cast<std::size_t>(a.n_rays()), 0);
  for (Index c : cells) {
    if (c < 0 || c >= a.n_cells()) {
      throw DomainError("index_out_of_range", "cell index " + std::to_string(c) + " out of range");
    }
    for (Index r : a.rays_of(c)) in_nx[static_cast<std::size_t>(r)] = 1;
  }
  ExpansionResult res;
  res.neighbours = static_cast<Index>(std::count(in_nx.begin(), in_nx.end(), 1));
  for (Index c = 0; c < a.n_cells(); ++c) {
    auto rays = a.rays_of(c);
    if (std::all_of(rays.begin(), rays.end(),
                    [&](Index r) { return in_nx[static_cast<std::size_t>(r)] != 0; })) {
      ++res.supported;
    }
  }
  const double ell = a.left_degree();
  const double delta = (std::sqrt(5.0) - 1.0) / 2.0;
  res.ratio = res.neighbours / (ell * res.supported);
  switch (variant) {
    case ExpansionVariant::wang:
      res.threshold = delta;
      res.holds = res.ratio >= delta;
      break;
    case ExpansionVariant::hassibi:
      res.threshold = 1.0 / ell;
      res.holds = res.ratio > 1.0 / ell;
      break;
    case ExpansionVariant::inverse:
      res.threshold = (1.0 + delta) / (ell * ell);
      res.holds = res.ratio >= res.threshold;
      break;
  }
  return res;
}

}  // namespace sparsetomo
