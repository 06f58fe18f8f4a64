#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "detcert/linalg.hpp"

namespace detcert {

struct NmOptions {
  std::size_t max_evals = 400;
  double f_tol = 1e-10;    // simplex value spread
  double x_tol = 1e-12;    // simplex size
};

struct NmResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

// Derivative-free simplex maximization. The objective is evaluated at the
// box projection of each vertex, so the returned point always lies in box
// (unbounded box entries pass through). Deterministic for a fixed start.
NmResult nelder_mead_maximize(std::span<const double> x0, std::span<const double> init_step,
                              const Box& box,
                              const std::function<double(std::span<const double>)>& objective,
                              const NmOptions& opt);

}  // namespace detcert
