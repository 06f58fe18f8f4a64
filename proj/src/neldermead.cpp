#include "detcert/neldermead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace detcert {

namespace {

double eval_projected(const std::function<double(std::span<const double>)>& objective, const Box& box,
                      std::vector<double> x, std::vector<double>& scratch) {
  scratch = std::move(x);
  box.clamp(scratch);
  double v = objective(scratch);
  if (std::isnan(v)) v = -1e300;
  return std::min(v, 1e300);
}

}  // namespace

NmResult nelder_mead_maximize(std::span<const double> x0, std::span<const double> init_step,
                              const Box& box,
                              const std::function<double(std::span<const double>)>& objective,
                              const NmOptions& opt) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw std::invalid_argument("nelder_mead: empty decision vector");
  if (init_step.size() != dim) throw std::invalid_argument("nelder_mead: init_step size mismatch");
  if (opt.max_evals < dim + 2) throw std::invalid_argument("nelder_mead: eval budget below simplex size");

  // internally minimizes -objective
  std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(x0.begin(), x0.end()));
  std::vector<double> fvals(dim + 1);
  std::vector<double> scratch;
  std::size_t evals = 0;
  auto feval = [&](const std::vector<double>& x) {
    ++evals;
    return -eval_projected(objective, box, x, scratch);
  };

  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += (init_step[i] != 0.0 ? init_step[i] : 1e-3);
  for (std::size_t i = 0; i <= dim; ++i) fvals[i] = feval(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);
  bool converged = false;

  while (evals + 2 <= opt.max_evals) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[dim - 1];

    double spread = std::abs(fvals[worst] - fvals[best]);
    double size = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      size = std::max(size, std::abs(simplex[worst][i] - simplex[best][i]));
    if (spread <= opt.f_tol * (1.0 + std::abs(fvals[best])) && size <= opt.x_tol * (1.0 + size)) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= dim; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[k][i];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    for (std::size_t i = 0; i < dim; ++i) xr[i] = centroid[i] + (centroid[i] - simplex[worst][i]);
    const double fr = feval(xr);

    if (fr < fvals[best]) {
      if (evals + 1 > opt.max_evals) {
        simplex[worst] = xr;
        fvals[worst] = fr;
        break;
      }
      for (std::size_t i = 0; i < dim; ++i) xe[i] = centroid[i] + 2.0 * (centroid[i] - simplex[worst][i]);
      const double fe = feval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fvals[worst] = fe;
      } else {
        simplex[worst] = xr;
        fvals[worst] = fr;
      }
    } else if (fr < fvals[second]) {
      simplex[worst] = xr;
      fvals[worst] = fr;
    } else {
      const bool outside = fr < fvals[worst];
      if (outside)
        for (std::size_t i = 0; i < dim; ++i) xc[i] = centroid[i] + 0.5 * (xr[i] - centroid[i]);
      else
        for (std::size_t i = 0; i < dim; ++i) xc[i] = centroid[i] + 0.5 * (simplex[worst][i] - centroid[i]);
      if (evals + 1 > opt.max_evals) break;
      const double fc = feval(xc);
      if (fc < std::min(fr, fvals[worst])) {
        simplex[worst] = xc;
        fvals[worst] = fc;
      } else {
        // shrink toward the best vertex
        for (std::size_t k = 0; k <= dim; ++k) {
          if (k == best) continue;
          for (std::size_t i = 0; i < dim; ++i)
            simplex[k][i] = simplex[best][i] + 0.5 * (simplex[k][i] - simplex[best][i]);
          if (evals >= opt.max_evals) break;
          fvals[k] = feval(simplex[k]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= dim; ++i)
    if (fvals[i] < fvals[best]) best = i;

  NmResult res;
  res.x = simplex[best];
  box.clamp(res.x);
  res.value = -fvals[best];
  res.evals = evals;
  res.converged = converged;
  return res;
}

}  // namespace detcert
