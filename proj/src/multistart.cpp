#include "detcert/multistart.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>

#include "detcert/rng.hpp"

namespace detcert {

MultistartResult multistart_maximize(const Box& box,
                                     const std::function<double(std::span<const double>)>& objective,
                                     const MultistartOptions& opt,
                                     const std::vector<std::vector<double>>& seed_points) {
  const std::size_t dim = box.dim();
  if (dim == 0) throw std::invalid_argument("multistart: empty box");
  if (!box.bounded() && !opt.radius)
    throw std::invalid_argument("multistart: unbounded box requires a search radius");
  const std::size_t total = seed_points.size() + opt.restarts;
  if (total == 0) throw std::invalid_argument("multistart: no restarts and no seed points");
  if (opt.evals_per_restart < dim + 2)
    throw std::invalid_argument(
        "multistart: budget exhausted before any evaluation (need >= dim+2 evals per restart)");
  for (const auto& sp : seed_points)
    if (sp.size() != dim) throw std::invalid_argument("multistart: seed point size mismatch");

  std::vector<double> step(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const bool fin = std::isfinite(box.lo[i]) && std::isfinite(box.hi[i]);
    step[i] = fin ? 0.25 * (box.hi[i] - box.lo[i]) : 0.5 * opt.radius.value_or(1.0);
    if (step[i] == 0.0) step[i] = 1e-3;
  }

  struct Entry {
    double value = -1e301;
    std::vector<double> x;
    std::size_t evals = 0;
    bool converged = false;
  };
  std::vector<Entry> results(total);

  NmOptions nm;
  nm.max_evals = opt.evals_per_restart;

  // exceptions may not escape a parallel region; capture the first one
  std::exception_ptr error;
  std::mutex error_mu;

  par::for_each_index(total, opt.exec, [&](std::size_t r) {
    try {
      std::vector<double> x0(dim);
      if (r < seed_points.size()) {
        x0 = seed_points[r];
      } else {
        Rng rng(stream_seed(opt.seed, r - seed_points.size()));
        for (std::size_t i = 0; i < dim; ++i) {
          const bool fin = std::isfinite(box.lo[i]) && std::isfinite(box.hi[i]);
          x0[i] = fin ? rng.uniform(box.lo[i], box.hi[i]) : rng.gaussian(0.0, *opt.radius);
        }
      }
      box.clamp(x0);
      NmResult nmres = nelder_mead_maximize(x0, step, box, objective, nm);
      results[r] = Entry{nmres.value, std::move(nmres.x), nmres.evals, nmres.converged};
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);

  // deterministic merge: highest value, ties to the lowest restart index
  std::size_t best = 0;
  for (std::size_t r = 1; r < total; ++r)
    if (results[r].value > results[best].value) best = r;

  MultistartResult out;
  out.x = results[best].x;
  out.value = results[best].value;
  out.restart_index = best;
  out.best_converged = results[best].converged;
  for (const auto& e : results) out.total_evals += e.evals;
  return out;
}

}  // namespace detcert
