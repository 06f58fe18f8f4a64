#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "detcert/linalg.hpp"
#include "detcert/neldermead.hpp"
#include "detcert/parallel.hpp"

namespace detcert {

// Seeded multi-start driver shared by the falsifier, the candidate estimator
// and the full-information observer. Restart i draws its start point from the
// stream seed^i (uniform inside bounded box dimensions, Gaussian with
// radius for unbounded ones) and refines it with Nelder-Mead. Seed points are
// deterministic extra restarts prepended to the random ones, so a larger
// restart count extends a smaller one (nested-budget monotonicity). Results
// are merged by (value desc, restart index asc) and therefore independent of
// scheduling.
struct MultistartOptions {
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  std::size_t evals_per_restart = 400;
  std::optional<double> radius;  // for unbounded box dimensions
  par::Exec exec = par::Exec::Parallel;
};

struct MultistartResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t restart_index = 0;  // seed points first, then random restarts
  std::size_t total_evals = 0;
  bool best_converged = false;
};

MultistartResult multistart_maximize(const Box& box,
                                     const std::function<double(std::span<const double>)>& objective,
                                     const MultistartOptions& opt,
                                     const std::vector<std::vector<double>>& seed_points = {});

}  // namespace detcert
