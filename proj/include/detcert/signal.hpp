#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace detcert {

// Grid helpers. All time grids in the toolbox are uniform; alignment checks
// tolerate 1e-9 relative rounding noise.
bool grid_aligned(double t, double dt);
// round(t/dt) after an alignment check; throws if t is not on the grid
std::int64_t grid_count(double t, double dt);
// knot index containing time t (floor with rounding slack)
std::int64_t grid_floor(double t, double dt);

// Piecewise-constant vector signal on a uniform grid. Knot k holds its value
// on [k*dt, (k+1)*dt); the signal is zero at and beyond support_end.
// Immutable after construction; all operations are pure.
class VectorSignal {
 public:
  VectorSignal() = default;  // empty scalar signal
  VectorSignal(std::size_t dim, double dt);
  VectorSignal(std::size_t dim, double dt, std::vector<double> values);  // flat, knot-major

  static VectorSignal zero(std::size_t dim, double dt, std::size_t knots);

  std::size_t dim() const { return dim_; }
  double dt() const { return dt_; }
  std::size_t knots() const { return values_.size() / dim_; }
  double support_end() const { return static_cast<double>(knots()) * dt_; }
  std::span<const double> knot(std::size_t k) const;
  const std::vector<double>& values() const { return values_; }

  void sample(double t, std::span<double> out) const;
  std::vector<double> sample(double t) const;

 private:
  std::size_t dim_ = 1;
  double dt_ = 1.0;
  std::vector<double> values_;
};

// head on [0,t], tail shifted to (t,inf). t must be grid-aligned; t = 0
// degenerates to the tail itself.
VectorSignal concat(const VectorSignal& tail, const VectorSignal& head, double t);

// equals sig on [0,t), zero afterwards
VectorSignal truncate(const VectorSignal& sig, double t);

// max Euclidean norm over the knots intersecting [a,b] (exact for
// piecewise-constant signals, zero extension beyond support)
double sup_norm(const VectorSignal& sig, double a, double b);

VectorSignal signal_add(const VectorSignal& a, const VectorSignal& b);
VectorSignal signal_sub(const VectorSignal& a, const VectorSignal& b);
VectorSignal signal_scale(const VectorSignal& a, double c);

// Composite-trapezoid approximation of the fading-memory integral
//   int_0^t lambda^(t-tau) g(tau) dtau
// with exact exponential node weights. samples[k] is g at time k*dt and must
// be nonnegative; lambda must lie in (0,1).
double discounted_integral(std::span<const double> samples, double dt, double lambda, double t);

// Incremental form of the same quadrature. Advancing by h then by g over the
// same samples equals one advance over h+g (semigroup, up to roundoff).
// Single-owner mutable state; not meant to be shared across threads.
class DiscountedAccumulator {
 public:
  explicit DiscountedAccumulator(double lambda);
  double lambda() const { return lambda_; }
  double value() const { return value_; }
  double time() const { return time_; }
  // one trapezoid cell: g0 = g(time), g1 = g(time + h)
  void advance(double h, double g0, double g1);

 private:
  double lambda_;
  double value_ = 0.0;
  double time_ = 0.0;
};

// lambda^x as exp(x*ln lambda); avoids drift from repeated multiplication
double pow_lambda(double lambda, double x);

// CSV: header "t,v0,...,v{dim-1}", one row per knot start time. dt is
// inferred from consecutive rows and must be uniform to 1e-9 relative.
void write_signal_csv(const std::string& path, const VectorSignal& sig);
VectorSignal read_signal_csv(const std::string& path);

}  // namespace detcert
