#include "detcert/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace detcert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kNodesPerDecade = 8;
constexpr std::int64_t kJMin = -2400;  // s floor ~1e-300
constexpr std::int64_t kJMax = 2464;   // s cap  ~1e308
}  // namespace

ComparisonFunction ComparisonFunction::power_law(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("power_law: need a > 0 and b > 0");
  ComparisonFunction f;
  f.kind_ = Kind::PowerLaw;
  f.a_ = a;
  f.b_ = b;
  return f;
}

ComparisonFunction ComparisonFunction::log_affine(double a) {
  if (!(a > 0.0)) throw std::invalid_argument("log_affine: need a > 0");
  ComparisonFunction f;
  f.kind_ = Kind::LogAffine;
  f.a_ = a;
  return f;
}

ComparisonFunction ComparisonFunction::scaled_sum(std::vector<ComparisonFunction> terms,
                                                  std::vector<double> weights) {
  if (terms.empty()) throw std::invalid_argument("scaled_sum: no terms");
  if (terms.size() != weights.size()) throw std::invalid_argument("scaled_sum: weight count mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("scaled_sum: weights must be positive");
  ComparisonFunction f;
  f.kind_ = Kind::Sum;
  f.terms_ = std::move(terms);
  f.weights_ = std::move(weights);
  return f;
}

ComparisonFunction ComparisonFunction::tabulated(std::vector<double> s, std::vector<double> v,
                                                 double tail_exponent) {
  if (s.size() != v.size() || s.size() < 2) throw std::invalid_argument("tabulated: need >= 2 knots");
  if (std::abs(s.front()) > 0.0 || std::abs(v.front()) > 0.0)
    throw std::invalid_argument("tabulated: first knot must be (0,0)");
  bool strict = true;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s[i] > s[i - 1])) throw std::invalid_argument("tabulated: abscissae must strictly increase");
    if (v[i] < v[i - 1]) throw std::invalid_argument("tabulated: values must be nondecreasing");
    if (!(v[i] > v[i - 1])) strict = false;
  }
  if (!(tail_exponent >= 0.0)) throw std::invalid_argument("tabulated: tail exponent must be >= 0");
  ComparisonFunction f;
  f.kind_ = Kind::Tabulated;
  auto tab = std::make_shared<Table>();
  tab->s = std::move(s);
  tab->v = std::move(v);
  tab->tail_exponent = tail_exponent;
  tab->strict = strict;
  f.tab_ = std::move(tab);
  return f;
}

const std::vector<double>& ComparisonFunction::table_s() const {
  if (!tab_) throw std::logic_error("table_s: not a tabulated function");
  return tab_->s;
}

const std::vector<double>& ComparisonFunction::table_v() const {
  if (!tab_) throw std::logic_error("table_v: not a tabulated function");
  return tab_->v;
}

double ComparisonFunction::tail_exponent() const {
  if (!tab_) throw std::logic_error("tail_exponent: not a tabulated function");
  return tab_->tail_exponent;
}

double ComparisonFunction::operator()(double s) const {
  if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("comparison eval: need finite s >= 0");
  switch (kind_) {
    case Kind::PowerLaw:
      return a_ * std::pow(s, b_);
    case Kind::LogAffine:
      return a_ * s * std::log1p(s);
    case Kind::Sum: {
      double acc = 0.0;
      for (std::size_t i = 0; i < terms_.size(); ++i) acc += weights_[i] * terms_[i](s);
      return acc;
    }
    case Kind::Tabulated: {
      const auto& t = *tab_;
      if (s >= t.s.back()) {
        if (s == t.s.back() || t.tail_exponent == 0.0) return t.v.back();
        return t.v.back() * std::pow(s / t.s.back(), t.tail_exponent);
      }
      const auto it = std::upper_bound(t.s.begin(), t.s.end(), s);
      const std::size_t i = static_cast<std::size_t>(it - t.s.begin());  // s < t.s[i], i >= 1
      const double w = (s - t.s[i - 1]) / (t.s[i] - t.s[i - 1]);
      return t.v[i - 1] + w * (t.v[i] - t.v[i - 1]);
    }
  }
  return 0.0;
}

bool ComparisonFunction::strictly_increasing() const {
  switch (kind_) {
    case Kind::PowerLaw:
    case Kind::LogAffine:
      return true;
    case Kind::Sum:
      for (const auto& t : terms_)
        if (t.strictly_increasing()) return true;
      return false;
    case Kind::Tabulated:
      return tab_->strict;
  }
  return false;
}

bool ComparisonFunction::unbounded() const {
  switch (kind_) {
    case Kind::PowerLaw:
    case Kind::LogAffine:
      return true;
    case Kind::Sum:
      for (const auto& t : terms_)
        if (t.unbounded()) return true;
      return false;
    case Kind::Tabulated:
      return tab_->tail_exponent > 0.0;
  }
  return false;
}

bool ComparisonFunction::is_kinf() const { return strictly_increasing() && unbounded(); }

bool ComparisonFunction::positive_on_positive() const {
  switch (kind_) {
    case Kind::PowerLaw:
    case Kind::LogAffine:
      return true;
    case Kind::Sum:
      for (const auto& t : terms_)
        if (t.positive_on_positive()) return true;
      return false;
    case Kind::Tabulated:
      // linear interpolation from (0,0): positive on (0,s1] iff v1 > 0
      return tab_->v[1] > 0.0;
  }
  return false;
}

double ComparisonFunction::inverse(double v) const {
  if (!is_kinf()) throw std::invalid_argument("inverse requires a class-Kinf function");
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("inverse: need finite v >= 0");
  if (v == 0.0) return 0.0;
  if (kind_ == Kind::PowerLaw) return std::pow(v / a_, 1.0 / b_);

  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while ((*this)(hi) < v) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 4000) throw std::runtime_error("inverse: bracket growth failed");
  }
  const double tol = 1e-10 * std::max(1.0, v);
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    mid = 0.5 * (lo + hi);
    const double fm = (*this)(mid);
    if (std::abs(fm - v) <= tol) return mid;
    if (fm < v)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

// -------- divergence classification --------

namespace {

// adaptive Simpson of fn over [a,b]
double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double rel_tol,
                        int max_depth) {
  struct Rec {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  auto simpson = [](double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); };
  const double fa = fn(a), fb = fn(b), fm = fn(0.5 * (a + b));
  double whole = simpson(fa, fm, fb, b - a);
  std::vector<Rec> stack{{a, b, fa, fm, fb, whole, 0}};
  double total = 0.0;
  double scale = std::abs(whole) + 1e-300;
  while (!stack.empty()) {
    Rec r = stack.back();
    stack.pop_back();
    const double m = 0.5 * (r.a + r.b);
    const double flm = fn(0.5 * (r.a + m));
    const double frm = fn(0.5 * (m + r.b));
    const double left = simpson(r.fa, flm, r.fm, m - r.a);
    const double right = simpson(r.fm, frm, r.fb, r.b - m);
    const double s2 = left + right;
    if (r.depth >= max_depth || std::abs(s2 - r.whole) <= 15.0 * rel_tol * (scale + std::abs(s2))) {
      total += s2 + (s2 - r.whole) / 15.0;
    } else {
      stack.push_back({r.a, m, r.fa, flm, r.fm, left, r.depth + 1});
      stack.push_back({m, r.b, r.fm, frm, r.fb, right, r.depth + 1});
    }
  }
  return total;
}

// int_{lo}^{hi} ds / k(3s) in log coordinates (x = ln s)
double reciprocal_integral(const ComparisonFunction& k, double lo, double hi, double rel_tol = 1e-10) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("reciprocal_integral: need 0 < lo < hi");
  auto fn = [&](double x) {
    const double s = std::exp(x);
    const double denom = k(3.0 * s);
    if (!(denom > 0.0))
      throw std::runtime_error("kappa1 vanishes at s = " + std::to_string(3.0 * s) +
                               " > 0; divergence integrals undefined");
    return s / denom;
  };
  return adaptive_simpson(fn, std::log(lo), std::log(hi), rel_tol, 48);
}

// increments per decade neither vanish nor decay away -> at-least-log growth
bool classify_divergent(const std::vector<double>& partials) {
  if (partials.size() < 2) return false;
  std::vector<double> inc;
  for (std::size_t i = 1; i < partials.size(); ++i) inc.push_back(partials[i] - partials[i - 1]);
  const double first = inc.front();
  const double last = inc.back();
  double mn = inc.front();
  for (double d : inc) mn = std::min(mn, d);
  const double floor_abs = 1e-9 * (1.0 + std::abs(partials.back()));
  return mn > 0.0 && last > floor_abs && last >= 0.3 * first;
}

bool analytic_rules_available(const ComparisonFunction& f) {
  switch (f.kind()) {
    case ComparisonFunction::Kind::PowerLaw:
    case ComparisonFunction::Kind::LogAffine:
      return true;
    case ComparisonFunction::Kind::Sum:
      for (const auto& t : f.terms())
        if (!analytic_rules_available(t)) return false;
      return true;
    case ComparisonFunction::Kind::Tabulated:
      return false;
  }
  return false;
}

std::pair<bool, bool> analytic_divergence(const ComparisonFunction& f) {
  switch (f.kind()) {
    case ComparisonFunction::Kind::PowerLaw:
      return {f.param_b() >= 1.0, f.param_b() <= 1.0};
    case ComparisonFunction::Kind::LogAffine:
      return {true, true};
    case ComparisonFunction::Kind::Sum: {
      // 1/(k_a + k_b) is integrable iff either reciprocal is, so the sum
      // diverges at an end iff every term does
      bool z = true, inf = true;
      for (const auto& t : f.terms()) {
        auto [tz, tinf] = analytic_divergence(t);
        z = z && tz;
        inf = inf && tinf;
      }
      return {z, inf};
    }
    default:
      throw std::logic_error("analytic_divergence: unsupported variant");
  }
}

}  // namespace

OsgoodReport osgood_check(const ComparisonFunction& kappa1) {
  if (!kappa1.positive_on_positive())
    throw std::invalid_argument("osgood_check: kappa1 must be positive for s > 0");
  OsgoodReport rep;
  if (analytic_rules_available(kappa1)) {
    rep.method = OsgoodReport::Method::Analytic;
    auto [z, inf] = analytic_divergence(kappa1);
    rep.divergent_at_zero = z;
    rep.divergent_at_infinity = inf;
    return rep;
  }

  rep.method = OsgoodReport::Method::NumericHeuristic;
  std::vector<double> pz, pi;
  for (int e = 2; e <= 8; ++e) {
    const double eps = std::pow(10.0, -e);
    pz.push_back(reciprocal_integral(kappa1, eps, 1.0, 1e-8));
    rep.evidence_zero.emplace_back(eps, pz.back());
  }
  for (int e = 2; e <= 8; ++e) {
    const double M = std::pow(10.0, e);
    pi.push_back(reciprocal_integral(kappa1, 1.0, M, 1e-8));
    rep.evidence_infinity.emplace_back(M, pi.back());
  }
  rep.divergent_at_zero = classify_divergent(pz);
  rep.divergent_at_infinity = classify_divergent(pi);
  return rep;
}

// -------- Bihari machinery --------

BihariSolver::BihariSolver(ComparisonFunction kappa1) : kappa1_(std::move(kappa1)) {
  report_ = osgood_check(kappa1_);
  if (!report_.satisfied())
    throw std::invalid_argument(
        "BihariSolver: kappa1 fails the divergence conditions (reciprocal integral must diverge at "
        "0 and at infinity)");
  // initial geometric grid over [1e-9, 1e9]
  j_lo_ = -9 * kNodesPerDecade;
  j_hi_ = 9 * kNodesPerDecade;
  gvals_.assign(static_cast<std::size_t>(j_hi_ - j_lo_ + 1), 0.0);
  const std::size_t origin = static_cast<std::size_t>(-j_lo_);
  for (std::int64_t j = 1; j <= j_hi_; ++j)
    gvals_[origin + j] = gvals_[origin + j - 1] + cell_integral(node_s(j - 1), node_s(j));
  for (std::int64_t j = -1; j >= j_lo_; --j)
    gvals_[origin + j] = gvals_[origin + j + 1] - cell_integral(node_s(j), node_s(j + 1));
}

double BihariSolver::node_s(std::int64_t j) const {
  return std::pow(10.0, static_cast<double>(j) / kNodesPerDecade);
}

double BihariSolver::kbar(double r) const {
  return kappa1_(std::min(3.0 * r, std::numeric_limits<double>::max()));
}

double BihariSolver::cell_integral(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  auto fn = [&](double x) {
    const double r = std::exp(x);
    const double denom = kbar(r);
    if (!(denom > 0.0))
      throw std::runtime_error("kappa1 vanishes inside the G integral at r = " + std::to_string(r));
    return r / denom;
  };
  return adaptive_simpson(fn, std::log(lo), std::log(hi), 1e-10, 40);
}

void BihariSolver::ensure_cover_locked(std::int64_t j_need_lo, std::int64_t j_need_hi) const {
  j_need_lo = std::max(j_need_lo, kJMin);
  j_need_hi = std::min(j_need_hi, kJMax);
  if (j_need_hi > j_hi_) {
    gvals_.reserve(static_cast<std::size_t>(j_need_hi - j_lo_ + 1));
    for (std::int64_t j = j_hi_ + 1; j <= j_need_hi; ++j)
      gvals_.push_back(gvals_.back() + cell_integral(node_s(j - 1), node_s(j)));
    j_hi_ = j_need_hi;
  }
  if (j_need_lo < j_lo_) {
    std::vector<double> front;
    double g = gvals_.front();
    for (std::int64_t j = j_lo_ - 1; j >= j_need_lo; --j) {
      g -= cell_integral(node_s(j), node_s(j + 1));
      front.push_back(g);
    }
    std::reverse(front.begin(), front.end());
    front.insert(front.end(), gvals_.begin(), gvals_.end());
    gvals_ = std::move(front);
    j_lo_ = j_need_lo;
  }
}

double BihariSolver::g_locked(double s) const {
  std::int64_t j = static_cast<std::int64_t>(std::floor(kNodesPerDecade * std::log10(s)));
  j = std::clamp<std::int64_t>(j, kJMin, kJMax - 1);
  ensure_cover_locked(j, j + 1);
  j = std::clamp<std::int64_t>(j, j_lo_, j_hi_ - 1);
  const double base = gvals_[static_cast<std::size_t>(j - j_lo_)];
  const double sj = node_s(j);
  if (s >= sj) return base + cell_integral(sj, s);
  return base - cell_integral(s, sj);
}

double BihariSolver::G(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("G: need finite s > 0");
  std::lock_guard<std::mutex> lock(mu_);
  return g_locked(s);
}

double BihariSolver::solve_locked(double target, double v_lo) const {
  // bracket upward from v_lo on the node grid
  std::int64_t j = static_cast<std::int64_t>(std::floor(kNodesPerDecade * std::log10(v_lo)));
  j = std::clamp<std::int64_t>(j, kJMin, kJMax);
  ensure_cover_locked(j, j);
  std::int64_t j_up = std::max(j, j_lo_);
  while (true) {
    ensure_cover_locked(j_lo_, j_up);
    if (gvals_[static_cast<std::size_t>(std::min(j_up, j_hi_) - j_lo_)] >= target) break;
    if (j_up >= kJMax) return kInf;  // enclosing value beyond double range
    j_up = std::min<std::int64_t>(j_up + kNodesPerDecade, kJMax);
  }

  const double g_tol = 1e-11 * std::max(1.0, std::abs(target));
  double lo = v_lo, hi = node_s(std::min(j_up, j_hi_));
  double g_hi = g_locked(hi);
  double g_lo = g_locked(lo);
  if (g_lo >= target - g_tol && g_lo <= target + g_tol) return lo;
  (void)g_hi;

  // Newton in log space with bisection safeguard; G' = 1/kbar
  double x_lo = std::log(lo), x_hi = std::log(hi);
  double x = 0.5 * (x_lo + x_hi);
  for (int it = 0; it < 200; ++it) {
    const double v = std::exp(x);
    const double g = g_locked(v);
    if (std::abs(g - target) <= g_tol) return v;
    if (g < target)
      x_lo = x;
    else
      x_hi = x;
    const double deriv = v / kbar(v);  // dG/d(ln v)
    double x_next = x;
    if (deriv > 0.0 && std::isfinite(deriv)) x_next = x + (target - g) / deriv;
    if (!(x_next > x_lo) || !(x_next < x_hi)) x_next = 0.5 * (x_lo + x_hi);
    x = x_next;
  }
  return std::exp(x);
}

double BihariSolver::bound(double c, double t) const {
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("bihari bound: need finite c >= 0");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("bihari bound: need finite t >= 0");
  if (c == 0.0) return 0.0;
  if (c < 1e-280) return 0.0;  // below the cache floor; indistinguishable from zero
  std::lock_guard<std::mutex> lock(mu_);
  const double target = g_locked(c) + t;
  return solve_locked(target, c);
}

std::vector<double> BihariSolver::bound_curve(double c, std::span<const double> times) const {
  std::vector<double> out(times.size());
  if (times.empty()) return out;
  if (!(c >= 0.0)) throw std::invalid_argument("bihari bound_curve: need c >= 0");
  if (c == 0.0 || c < 1e-280) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  std::lock_guard<std::mutex> lock(mu_);
  const double g0 = g_locked(c);
  double v = c;
  double prev_t = -1.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (!(t >= 0.0)) throw std::invalid_argument("bihari bound_curve: need t >= 0");
    if (t < prev_t) throw std::invalid_argument("bihari bound_curve: times must be nondecreasing");
    prev_t = t;
    if (!std::isfinite(v)) {
      out[k] = kInf;
      continue;
    }
    v = solve_locked(g0 + t, v);
    out[k] = v;
  }
  return out;
}

double osgood_G(const ComparisonFunction& kappa1, double s) { return BihariSolver(kappa1).G(s); }

double bihari_bound(const ComparisonFunction& kappa1, double c, double t) {
  return BihariSolver(kappa1).bound(c, t);
}

std::pair<double, double> reachable_diff_bounds(const ComparisonFunction& kappa1,
                                                const ComparisonFunction& kappa2, double T,
                                                double r_chi, double r_u) {
  if (!kappa2.is_kinf()) throw std::invalid_argument("reachable_diff_bounds: kappa2 must be class-Kinf");
  if (!(T >= 0.0) || !(r_chi >= 0.0) || !(r_u >= 0.0))
    throw std::invalid_argument("reachable_diff_bounds: arguments must be nonnegative");
  const double rx = bihari_bound(kappa1, r_chi + r_u, T);
  const double ry = kappa2(2.0 * rx) + kappa2(2.0 * r_u);
  return {rx, ry};
}

}  // namespace detcert
