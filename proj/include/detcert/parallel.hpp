#pragma once

#include <cstddef>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace detcert::par {

// Process-wide worker cap, set from the CLI --threads flag.
int max_threads();
void set_max_threads(int n);

// Serial is the reference path; Parallel must produce bit-identical results
// for every kernel built on these helpers (per-index work keyed only on the
// index, order-independent reduction).
enum class Exec { Serial, Parallel };

#ifdef _OPENMP
namespace detail {
int clamp_threads(int requested);
}
#endif

// body(i) for i in [0,n). body must be a pure function of i up to writes into
// disjoint per-index slots.
template <class F>
void for_each_index(std::size_t n, Exec mode, F&& body) {
#ifdef _OPENMP
  if (mode == Exec::Parallel && n > 1) {
    const int nt = detail::clamp_threads(max_threads());
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(n); ++i) body(static_cast<std::size_t>(i));
    return;
  }
#endif
  (void)mode;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace detcert::par
