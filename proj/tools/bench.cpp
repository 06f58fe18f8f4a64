// Benchmark comparing the serial reference kernels against the OpenMP
// parallel ones. Both paths must produce bit-identical results; the point of
// the run is the wall-time ratio.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "detcert/detectability.hpp"
#include "detcert/parallel.hpp"
#include "detcert/system.hpp"

using namespace detcert;

namespace {

double time_of(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", name, serial_s, parallel_s,
              serial_s / parallel_s, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("%-28s %11s %11s %9s   %s\n", "kernel", "serial", "parallel", "speedup", "check");

  // increment-bound audit over 4e5 sample pairs
  {
    SystemModel m = registry_get("linear_2d_detectable");
    AuditReport a, b;
    const double ts = time_of([&] { a = audit_increment_bounds(m, 400000, 7, {}, par::Exec::Serial); });
    const double tp = time_of([&] { b = audit_increment_bounds(m, 400000, 7, {}, par::Exec::Parallel); });
    report("audit 4e5 pairs", ts, tp,
           a.max_f_ratio == b.max_f_ratio && a.max_h_ratio == b.max_h_ratio);
  }

  // multi-start falsification, 16 restarts
  {
    SystemModel m = registry_get("unstable_unobservable");
    IossCertificate cert{ComparisonFunction::identity(), ComparisonFunction::identity(),
                         ComparisonFunction::identity(), ComparisonFunction::identity(), 0.5};
    FalsifySearch search;
    search.restarts = 16;
    search.budget = 16000;
    search.seed = 3;
    FalsifyResult a, b;
    search.exec = par::Exec::Serial;
    const double ts = time_of([&] { a = falsify(m, cert, search); });
    search.exec = par::Exec::Parallel;
    const double tp = time_of([&] { b = falsify(m, cert, search); });
    report("falsify 16 restarts", ts, tp,
           a.best.max_residual == b.best.max_residual && a.witness.chi1 == b.witness.chi1);
  }

  // candidate estimation, 12 restarts
  {
    SystemModel m = registry_get("linear_scalar");
    IossCertificate cert{ComparisonFunction::power_law(1, 2), ComparisonFunction::power_law(1, 2),
                         ComparisonFunction::power_law(2, 2), ComparisonFunction::power_law(1, 2),
                         std::exp(-1.0)};
    std::vector<double> chi1{1.0}, chi2{0.0};
    LyapEstimateSearch search;
    search.restarts = 12;
    search.evals_per_restart = 400;
    search.seed = 3;
    LyapEstimate a, b;
    search.exec = par::Exec::Serial;
    const double ts = time_of([&] { a = estimate_lyap_candidate(m, cert, chi1, chi2, search); });
    search.exec = par::Exec::Parallel;
    const double tp = time_of([&] { b = estimate_lyap_candidate(m, cert, chi1, chi2, search); });
    report("candidate est 12 restarts", ts, tp, a.value == b.value && a.t_witness == b.t_witness);
  }

  // scenario-family residual sweep, 256 scenarios
  {
    SystemModel m = registry_get("linear_scalar");
    IossCertificate cert{ComparisonFunction::power_law(1, 2), ComparisonFunction::power_law(1, 2),
                         ComparisonFunction::power_law(2, 2), ComparisonFunction::power_law(1, 2),
                         std::exp(-1.0)};
    ScenarioSampler sampler{2.0, 0.0, 4, 11, {}};
    const std::size_t count = 256;
    std::vector<double> rs(count), rp(count);
    auto sweep = [&](par::Exec exec, std::vector<double>& out) {
      par::for_each_index(count, exec, [&](std::size_t i) {
        out[i] = ioss_residual(m, cert, sample_scenario(m, sampler, i)).max_residual;
      });
    };
    const double ts = time_of([&] { sweep(par::Exec::Serial, rs); });
    const double tp = time_of([&] { sweep(par::Exec::Parallel, rp); });
    report("residual sweep 256", ts, tp, rs == rp);
  }

  return 0;
}
