#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace detcert {

// Class-K style comparison function. Variants:
//   power_law(a,b):   s -> a*s^b           (K-infinity for a,b > 0)
//   log_affine(a):    s -> a*s*ln(1+s)     (K-infinity for a > 0)
//   scaled_sum:       positive combination of variants
//   tabulated:        monotone knot table, linear interpolation, power-law
//                     tail of declared exponent beyond the last knot
class ComparisonFunction {
 public:
  enum class Kind { PowerLaw, LogAffine, Sum, Tabulated };

  ComparisonFunction() = default;  // identity

  static ComparisonFunction power_law(double a, double b);
  static ComparisonFunction log_affine(double a);
  static ComparisonFunction identity() { return power_law(1.0, 1.0); }
  static ComparisonFunction scaled_sum(std::vector<ComparisonFunction> terms,
                                       std::vector<double> weights);
  static ComparisonFunction tabulated(std::vector<double> s, std::vector<double> v,
                                      double tail_exponent);

  double operator()(double s) const;

  // inverse for K-infinity variants: |f(s) - v| <= 1e-10 * max(1, v)
  double inverse(double v) const;

  Kind kind() const { return kind_; }
  bool is_kinf() const;
  bool strictly_increasing() const;
  bool unbounded() const;
  // kappa1 admissibility: f(s) > 0 for all s > 0
  bool positive_on_positive() const;

  // parameter access for serialization
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  const std::vector<ComparisonFunction>& terms() const { return terms_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& table_s() const;
  const std::vector<double>& table_v() const;
  double tail_exponent() const;

 private:
  Kind kind_ = Kind::PowerLaw;
  double a_ = 1.0, b_ = 1.0;
  std::vector<ComparisonFunction> terms_;
  std::vector<double> weights_;
  struct Table {
    std::vector<double> s, v;
    double tail_exponent;
    bool strict;
  };
  std::shared_ptr<const Table> tab_;
};

// Divergence report for the two reciprocal-modulus integrals
//   int_0^1 ds/k1(3s)  and  int_1^inf ds/k1(3s).
// Parametric variants are classified analytically; tabulated ones by a
// documented numeric heuristic whose partial integrals are kept as evidence.
struct OsgoodReport {
  enum class Method { Analytic, NumericHeuristic };
  bool divergent_at_zero = false;
  bool divergent_at_infinity = false;
  Method method = Method::Analytic;
  std::vector<std::pair<double, double>> evidence_zero;      // (eps, partial integral)
  std::vector<std::pair<double, double>> evidence_infinity;  // (M, partial integral)

  bool satisfied() const { return divergent_at_zero && divergent_at_infinity; }
};

OsgoodReport osgood_check(const ComparisonFunction& kappa1);

// Machinery around G(s) = int_1^s dr / k1(3r). The factor 3 inside the
// argument is part of the contract and fixed here.
//
// Thread contract: the solver keeps an internal monotone cache on a geometric
// grid over [1e-9, 1e9], extended on demand; every access is serialized by an
// internal mutex, so a const solver is safe to share across threads.
class BihariSolver {
 public:
  explicit BihariSolver(ComparisonFunction kappa1);  // throws if the divergence check fails

  const OsgoodReport& report() const { return report_; }
  const ComparisonFunction& kappa1() const { return kappa1_; }

  // adaptive quadrature of int_1^s dr/k1(3r); negative for s < 1, 0 at s = 1
  double G(double s) const;

  // unique v with G(v) = G(c) + t, solved in log space; 0 for c = 0.
  // Returns +inf when the enclosing value exceeds the double range.
  double bound(double c, double t) const;

  // bound(c, times[k]) with warm-started solves; times must be nondecreasing
  std::vector<double> bound_curve(double c, std::span<const double> times) const;

 private:
  // clamped so 3r cannot overflow to +inf near the top of the double range
  double kbar(double r) const;
  double cell_integral(double lo, double hi) const;
  double node_s(std::int64_t j) const;
  void ensure_cover_locked(std::int64_t j_need_lo, std::int64_t j_need_hi) const;
  double g_locked(double s) const;
  double solve_locked(double target, double v_lo) const;

  ComparisonFunction kappa1_;
  OsgoodReport report_;
  mutable std::mutex mu_;
  mutable std::int64_t j_lo_ = 0, j_hi_ = 0;  // node index range, s = 10^(j/8)
  mutable std::vector<double> gvals_;
};

// one-shot conveniences (each builds a solver; use BihariSolver in loops)
double osgood_G(const ComparisonFunction& kappa1, double s);
double bihari_bound(const ComparisonFunction& kappa1, double c, double t);

// R_x = bound(k1, r_chi + r_u, T), R_y = k2(2*R_x) + k2(2*r_u)
std::pair<double, double> reachable_diff_bounds(const ComparisonFunction& kappa1,
                                                const ComparisonFunction& kappa2, double T,
                                                double r_chi, double r_u);

}  // namespace detcert
