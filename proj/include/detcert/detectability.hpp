#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "detcert/multistart.hpp"
#include "detcert/system.hpp"

namespace detcert {

// Incremental detectability certificate: the claim that along any pair of
// trajectories driven by the same known input d,
//   alpha(|x1(t)-x2(t)|) <= alpha_x(|chi1-chi2|) lambda^t
//       + int_0^t lambda^(t-tau) (alpha_u(|u1-u2|) + alpha_y(|y1-y2|)) dtau.
struct IossCertificate {
  ComparisonFunction alpha, alpha_x, alpha_u, alpha_y;
  double lambda = 0.5;

  void validate() const;
};

// Two-state energy function U >= 0. Quadratic forms derive their sandwich
// bounds from the eigenvalue range of P; custom functions declare theirs.
class LyapFunction {
 public:
  LyapFunction() = default;  // unset; build via quadratic() or custom()

  static LyapFunction quadratic(std::vector<double> P, std::size_t n);
  static LyapFunction custom(std::function<double(std::span<const double>, std::span<const double>)> fn);

  double operator()(std::span<const double> chi1, std::span<const double> chi2) const;
  bool is_quadratic() const { return !P_.empty(); }
  const std::vector<double>& P() const { return P_; }
  std::size_t n() const { return n_; }
  double eig_min() const { return eig_min_; }
  double eig_max() const { return eig_max_; }

 private:
  std::vector<double> P_;
  std::size_t n_ = 0;
  double eig_min_ = 0.0, eig_max_ = 0.0;
  std::function<double(std::span<const double>, std::span<const double>)> fn_;
};

// Dissipation certificate: sandwich alpha1(|xd|) <= U <= alpha2(|xd|) plus
//   U(x1(t),x2(t)) <= U(chi1,chi2) lambda^t
//       + int_0^t lambda^(t-tau) (sigma_u(|u_delta|) + sigma_y(|y_delta|)) dtau.
struct LyapCertificate {
  LyapFunction U;
  ComparisonFunction alpha1, alpha2, sigma_u, sigma_y;
  double lambda = 0.5;

  // quadratic U: alpha1/alpha2 are derived as eig_min*s^2 / eig_max*s^2
  static LyapCertificate quadratic(std::vector<double> P, std::size_t n, ComparisonFunction sigma_u,
                                   ComparisonFunction sigma_y, double lambda);
  void validate() const;
};

// Universally quantified data of the two-trajectory inequalities; d is shared.
struct TrajectoryPairScenario {
  std::vector<double> chi1, chi2;
  VectorSignal u1, u2;  // dim m
  VectorSignal d;       // dim q
  double T = 1.0;
  double dt = 1e-2;
};

// LHS(t) - RHS(t) of an inequality along a simulated scenario, per grid node.
// holds <=> max residual <= tol. err_model is a heuristic bound combining the
// trapezoid variation estimate and an RK4 term; halving dt should move the max
// residual by less than a small multiple of it.
struct ResidualSeries {
  std::vector<double> times, lhs, rhs, residual;
  double max_residual = 0.0;
  double argmax_time = 0.0;
  double tol = 0.0;
  bool holds = false;
  double err_model = 0.0;
  // dissipation checks also verify the sandwich at every node
  double max_sandwich_violation = 0.0;
  double sandwich_argmax_time = 0.0;
};

void write_residual_csv(const std::string& path, const ResidualSeries& rs);

ResidualSeries ioss_residual(const SystemModel& model, const IossCertificate& cert,
                             const TrajectoryPairScenario& sc);

ResidualSeries lyap_residual(const SystemModel& model, const LyapCertificate& cert,
                             const TrajectoryPairScenario& sc);

// (alpha1, alpha2, sigma_u, sigma_y, lambda) -> (alpha, alpha_x, alpha_u,
// alpha_y, lambda): applying the sandwich to the dissipation inequality.
IossCertificate certificate_from_lyapunov(const LyapCertificate& cert);

// Seeded scenario generator: uniform over bounded boxes, Gaussian with the
// given radius otherwise. Index i draws from stream seed^i.
struct ScenarioSampler {
  double T = 2.0;
  double dt = 0.0;          // 0: chosen as sig_dt / ceil(sig_dt / (T/1000))
  std::size_t knots = 4;    // per signal
  std::uint64_t seed = 1;
  std::optional<double> radius;
};

TrajectoryPairScenario sample_scenario(const SystemModel& model, const ScenarioSampler& sampler,
                                       std::uint64_t index);

// Adversarial search for a scenario with positive residual. Deterministic
// given seed; restarts run concurrently with per-restart streams seed^i and a
// (value desc, index asc) merge. A positive result is re-verified at dt/2; a
// nonpositive one is evidence only. Simulation blow-up inside the search is
// treated as residual +inf with the blow-up time recorded.
struct FalsifySearch {
  std::size_t restarts = 10;
  std::size_t segments = 4;  // knots per decision signal
  double horizon = 2.0;
  std::uint64_t seed = 0;
  std::size_t budget = 8000;  // total objective evaluations
  double dt = 0.0;            // 0: horizon/segments subdivided to ~256 steps
  std::optional<double> radius;
  par::Exec exec = par::Exec::Parallel;
};

struct FalsifyResult {
  ResidualSeries best;
  TrajectoryPairScenario witness;
  bool violation = false;        // certified: reverified at dt/2
  double refined_max = 0.0;      // max residual at dt/2
  std::optional<double> blowup_time;
  std::size_t best_restart = 0;
  std::size_t evals = 0;
};

FalsifyResult falsify(const SystemModel& model, const IossCertificate& cert,
                      const FalsifySearch& search);

// Lower estimate of the converse construction
//   sup over (t, u1, u2, d) of lambda^(-t/2) ( alpha(|x_delta(t)|)
//       - int_0^inf lambda^(t-tau) 2 alpha_u(|u_delta|) dtau
//       - int_0^t  lambda^(t-tau) alpha_y(|y_delta|) dtau ),
// the infinite integral collapsing to the signals' finite support. The seed
// candidate (t=0, u1=u2, d=0) is always included, so the estimate is at least
// alpha(|chi1-chi2|).
struct LyapEstimateSearch {
  std::size_t restarts = 6;
  std::size_t segments = 4;
  double t_max = 3.0;
  std::uint64_t seed = 0;
  std::size_t evals_per_restart = 250;
  double dt = 0.0;  // 0: t_max subdivided to ~256 steps
  par::Exec exec = par::Exec::Parallel;
};

struct LyapEstimate {
  double value = 0.0;
  double lambda_used = 0.0;  // discount base the functional was evaluated with
  double t_witness = 0.0;
  VectorSignal u1, u2, d;
};

LyapEstimate estimate_lyap_candidate(const SystemModel& model, const IossCertificate& cert,
                                     std::span<const double> chi1, std::span<const double> chi2,
                                     const LyapEstimateSearch& search);

// Empirical modulus-of-continuity table for the candidate estimate around a
// base state pair. All evaluations share the search seed so estimates are
// comparable; refuses to run when the base estimate exceeds the certificate's
// upper bracket (invalid certificate, sup likely unbounded).
struct ContinuityProbeResult {
  std::vector<std::pair<double, double>> table;  // (radius, max deviation)
  double base_value = 0.0;
  double noise = 0.0;  // reseeded base spread
  bool pass = false;   // deviations nonincreasing down to 10x noise
};

ContinuityProbeResult continuity_probe(const SystemModel& model, const IossCertificate& cert,
                                       std::span<const double> chi1, std::span<const double> chi2,
                                       std::span<const double> radii,
                                       const LyapEstimateSearch& search);

}  // namespace detcert
