#pragma once

#include <string>
#include <vector>

#include "sparsetomo/core.hpp"

namespace sparsetomo {

enum class Bounds { nonneg, box01 };
enum class Sense { minimize, maximize };
enum class LpStatus { optimal, infeasible, failed };

std::string to_string(Bounds b);
std::string to_string(LpStatus s);

struct LpOptions {
  double tolerance = 1e-8;  // relative primal/dual residual and gap
  int max_iterations = 200;
  bool purify = true;        // snap to a basic solution after convergence
};

struct LpResult {
  LpStatus status = LpStatus::failed;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  bool basic = false;  // x passed the basic-solution check
  double primal_residual = 0.0;  // ||Ax - b||_inf
  std::string diagnostic;
};

/// optimize f^T x  s.t.  A x = b,  x >= 0  (and x <= 1 for box01).
///
/// Primal-dual predictor-corrector interior point method on the normal
/// equations, followed by a purification step that identifies the support of
/// the optimum and re-solves A_P x_P = b - A_U 1 on it. The result is
/// deterministic given the inputs.
LpResult solve_lp(const IncidenceSystem& a, const std::vector<double>& b, Bounds bounds,
                  const std::vector<double>& f, Sense sense, const LpOptions& options = {});

}  // namespace sparsetomo
