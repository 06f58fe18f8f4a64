#include "detcert/parallel.hpp"

#include <atomic>

namespace detcert::par {

namespace {
std::atomic<int> g_max_threads{0};  // 0: library default
}

int max_threads() {
  const int v = g_max_threads.load(std::memory_order_relaxed);
  if (v > 0) return v;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) { g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed); }

#ifdef _OPENMP
namespace detail {
int clamp_threads(int requested) {
  const int hw = omp_get_max_threads();
  if (requested <= 0) return hw;
  return requested < hw ? requested : hw;
}
}  // namespace detail
#endif

}  // namespace detcert::par
