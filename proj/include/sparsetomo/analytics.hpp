#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "sparsetomo/core.hpp"

namespace sparsetomo {

/// Golden-section expansion constant (sqrt5 - 1)/2.
inline constexpr double kDelta = 0.6180339887498948482;

/// Expected reduced-system dimensions for sparsity k:
/// rays_zero = E[#zero measurements], rays = |R| - rays_zero = E[m_red],
/// cells_zero = E[#removable cells], cells = |C| - cells_zero = E[n_red].
struct ExpectedDims {
  double k = 0;
  double rays_zero = 0;
  double rays = 0;
  double cells_zero = 0;
  double cells = 0;
};

// Hexagon, three cameras (k real, d odd >= 3).
double hex_rays_zero(int d, double k);
double hex_cells_zero(int d, double k);
ExpectedDims hex_dims(int d, double k);

struct LinearQuadratic {
  double linear;     // |R| - 3k
  double quadratic;  // |R| - 3k + 1.5 k (k-1) q_max
};
LinearQuadratic hex_rays_zero_bounds(int d, double k);

// Cube, four cameras (k real, d >= 2).
double cube_rays(int d, double k);
double cube_rays_zero(int d, double k);
double cube_cells(int d, double k);
ExpectedDims cube_dims(int d, double k);

struct EmpiricalDims {
  double k = 0;
  std::size_t trials = 0;
  double mean_rays = 0, se_rays = 0;    // m_red
  double mean_cells = 0, se_cells = 0;  // n_red
  double mean_rays_zero = 0, se_rays_zero = 0;
  double mean_cells_zero = 0, se_cells_zero = 0;
};

/// Monte Carlo mean of (m_red, n_red) over `trials` with-replacement
/// placements of k particles. Trial t uses the stream derive_seed(seed, {t}),
/// so increasing k extends each trial's placement (common random numbers).
EmpiricalDims empirical_dims(const IncidenceSystem& a, std::size_t k, std::size_t trials,
                             std::uint64_t seed);

/// Source of (N_R(k), N_C(k)) for the critical sparsity solver.
struct DimsSource {
  std::string name;
  int left_degree = 0;
  double max_k = 0;       // bracket upper end (number of cells)
  bool integer_k = false; // evaluate only at integer k
  std::function<ExpectedDims(double)> at;
};

DimsSource analytic_hex(int d);
DimsSource analytic_cube(int d);
/// Empirical source; evaluations are memoized per integer k.
DimsSource empirical_source(const IncidenceSystem& a, std::size_t trials, std::uint64_t seed);

enum class Criterion { delta, crit, opt, inv };

std::string to_string(Criterion c);

/// Constant c of N_R(k) = c N_C(k): delta*l, 1, 1/2, (1+delta)/l.
double criterion_constant(Criterion c, int left_degree);

struct CriticalRoot {
  bool attained = false;
  double k = 0;
  double residual = 0;  // (N_R - c N_C) / N_R at k
};

/// Root of N_R(k) = c N_C(k) on [1, max_k] by bisection to 1e-4 in k (to one
/// unit and linear interpolation for integer sources).
CriticalRoot critical_k(const DimsSource& source, Criterion criterion);

struct CriticalCurves {
  double d = 0;
  std::optional<double> k_delta, k_tilde_delta, k_crit, k_opt, k_inv;
};

/// All four roots plus k_tilde_delta = N_C(k_delta) / (1 + delta).
CriticalCurves critical_curves(const DimsSource& source, double d);

struct TailBound {
  double exact;       // 2 exp(-(1 - p^2) / (18 (1 - p^{2k})) dev^2), p = p_max
  double asymptotic;  // 2 exp(-dev^2 / (18 k))
  double exact_rate;       // coefficient of dev^2 in the exact exponent
  double asymptotic_rate;  // 1 / (18 k)
  double p_max;
};

/// Deviation bound for the number of zero measurements, hexagon geometry.
TailBound tail_bound(int d, double k, double deviation);

struct WendelProbability {
  std::string numerator;
  std::string denominator;
  double value = 0;
  std::string fraction() const { return numerator + "/" + denominator; }
};

/// 2^{-(n-1)} sum_{i<m} C(n-1, i), exact and reduced.
WendelProbability wendel(std::int64_t n, std::int64_t m);

}  // namespace sparsetomo
