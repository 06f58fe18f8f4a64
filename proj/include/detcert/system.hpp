#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "detcert/comparison.hpp"
#include "detcert/linalg.hpp"
#include "detcert/parallel.hpp"
#include "detcert/signal.hpp"

namespace detcert {

// vector field / output map callback; must be pure and thread-safe
// (the falsifier and the audit evaluate models concurrently)
using VecFn = std::function<void(std::span<const double> x, std::span<const double> u,
                                 std::span<const double> d, std::span<double> out)>;

// Optional linear structure: xdot = A x + Bw w + Bd d, y = C x (+ v), where
// u = (w, v) and v is the trailing noise_dim block of u entering only the
// output. Required by the Luenberger observer.
struct LinearParts {
  std::vector<double> A;   // n x n, row-major
  std::vector<double> Bw;  // n x (m - noise_dim)
  std::vector<double> Bd;  // n x q
  std::vector<double> C;   // p x n
};

struct SystemDims {
  std::size_t n;  // state
  std::size_t m;  // unknown input u
  std::size_t q;  // known input d
  std::size_t p;  // output
};

class SimulationBlowup : public std::runtime_error {
 public:
  SimulationBlowup(double t, const std::string& what) : std::runtime_error(what), time(t) {}
  double time;
};

// Continuous-time model xdot = f(x,u,d), y = h(x,u,d) with declared increment
// moduli kappa1 (for f, divergence-checked at construction) and kappa2 (for h,
// K-infinity). Boxes are declaratory: samplers and the falsifier draw from
// them; simulation reports box exits instead of clamping. Immutable after
// construction; f and h are required to be pure.
class SystemModel {
 public:
  SystemModel(SystemDims dims, VecFn f, VecFn h, ComparisonFunction kappa1,
              ComparisonFunction kappa2, Box state_box, Box u_box, Box d_box,
              std::size_t noise_dim = 0, std::optional<LinearParts> linear = std::nullopt);

  const SystemDims& dims() const { return dims_; }
  std::size_t n() const { return dims_.n; }
  std::size_t m() const { return dims_.m; }
  std::size_t q() const { return dims_.q; }
  std::size_t p() const { return dims_.p; }

  void f(std::span<const double> x, std::span<const double> u, std::span<const double> d,
         std::span<double> out) const {
    f_(x, u, d, out);
  }
  void h(std::span<const double> x, std::span<const double> u, std::span<const double> d,
         std::span<double> out) const {
    h_(x, u, d, out);
  }

  const ComparisonFunction& kappa1() const { return kappa1_; }
  const ComparisonFunction& kappa2() const { return kappa2_; }
  const Box& state_box() const { return state_box_; }
  const Box& u_box() const { return u_box_; }
  const Box& d_box() const { return d_box_; }
  std::size_t noise_dim() const { return noise_dim_; }
  const std::optional<LinearParts>& linear() const { return linear_; }

  const BihariSolver& bihari() const { return *bihari_; }

  // copy with replacement moduli (used to audit declared vs. false bounds)
  SystemModel with_moduli(ComparisonFunction kappa1, ComparisonFunction kappa2) const;

 private:
  SystemDims dims_;
  VecFn f_, h_;
  ComparisonFunction kappa1_, kappa2_;
  Box state_box_, u_box_, d_box_;
  std::size_t noise_dim_;
  std::optional<LinearParts> linear_;
  std::shared_ptr<const BihariSolver> bihari_;
};

struct Trajectory {
  double dt = 0.0;
  std::size_t n = 0, p = 0;
  std::vector<double> times;
  std::vector<double> states;   // (nodes) x n, flat
  std::vector<double> outputs;  // (nodes) x p, flat
  std::optional<double> left_state_box_at;

  std::size_t nodes() const { return times.size(); }
  std::span<const double> state(std::size_t k) const { return {states.data() + k * n, n}; }
  std::span<const double> output(std::size_t k) const { return {outputs.data() + k * p, p}; }
};

// Classical fixed-step RK4 with inputs held constant per step; dt must divide
// both input grids and T so no input discontinuity falls inside a step.
// Throws SimulationBlowup at the first non-finite state.
Trajectory simulate(const SystemModel& model, std::span<const double> chi, const VectorSignal& u,
                    const VectorSignal& d, double T, double dt);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);

// Randomized increment-bound audit: max over sampled pairs of
// |f(z1)-f(z2)| / kappa1(|z1-z2|) and the analogue for h (h pairs share d).
// A pass is evidence for the declared moduli, not proof.
struct AuditReport {
  double max_f_ratio = 0.0;
  double max_h_ratio = 0.0;
  std::size_t samples = 0;
  std::size_t skipped = 0;  // identical pairs (0/0 convention)
  bool pass = false;
  // witness of the max f-ratio: (x,u,d) and (x',u',d') flattened
  std::vector<double> f_witness_a, f_witness_b;
  std::vector<double> h_witness_a, h_witness_b;
};

AuditReport audit_increment_bounds(const SystemModel& model, std::size_t sample_count,
                                   std::uint64_t seed, std::optional<double> radius = std::nullopt,
                                   par::Exec exec = par::Exec::Parallel);

// Named example systems with valid declared moduli:
//   linear_scalar(a,c)     xdot = a x + w,        y = c x + v,  u = (w, v)
//   linear_2d_detectable   xdot = (-x1+x2, -x2+w), y = x1 + v,  u = (w, v)
//   unstable_unobservable  xdot = x + u,          y = 0
//   lure_saturated         xdot = -x + tanh(x) + u, y = x
SystemModel registry_get(const std::string& name, const std::map<std::string, double>& params = {});

std::vector<std::string> registry_names();

}  // namespace detcert
