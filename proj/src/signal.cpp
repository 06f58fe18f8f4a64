#include "detcert/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "detcert/linalg.hpp"

namespace detcert {

namespace {

void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("signal: dt must be positive and finite");
}

}  // namespace

bool grid_aligned(double t, double dt) {
  check_dt(dt);
  const double r = t / dt;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

std::int64_t grid_count(double t, double dt) {
  if (!grid_aligned(t, dt)) {
    std::ostringstream os;
    os << "time " << t << " is not aligned to grid step " << dt;
    throw std::invalid_argument(os.str());
  }
  return static_cast<std::int64_t>(std::llround(t / dt));
}

std::int64_t grid_floor(double t, double dt) {
  check_dt(dt);
  // slack absorbs accumulated rounding in t = k*dt node arithmetic
  return static_cast<std::int64_t>(std::floor(t / dt + 1e-8));
}

VectorSignal::VectorSignal(std::size_t dim, double dt) : dim_(dim), dt_(dt) {
  if (dim_ == 0) throw std::invalid_argument("signal: dim must be positive");
  check_dt(dt_);
}

VectorSignal::VectorSignal(std::size_t dim, double dt, std::vector<double> values)
    : dim_(dim), dt_(dt), values_(std::move(values)) {
  if (dim_ == 0) throw std::invalid_argument("signal: dim must be positive");
  check_dt(dt_);
  if (values_.size() % dim_ != 0) throw std::invalid_argument("signal: value count not a multiple of dim");
  if (!all_finite(values_)) throw std::invalid_argument("signal: non-finite value");
}

VectorSignal VectorSignal::zero(std::size_t dim, double dt, std::size_t knots) {
  return VectorSignal(dim, dt, std::vector<double>(dim * knots, 0.0));
}

std::span<const double> VectorSignal::knot(std::size_t k) const {
  if (k >= knots()) throw std::out_of_range("signal: knot index out of range");
  return {values_.data() + k * dim_, dim_};
}

void VectorSignal::sample(double t, std::span<double> out) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("signal: sample time must be nonnegative and finite");
  if (out.size() != dim_) throw std::invalid_argument("signal: sample output size mismatch");
  const std::int64_t k = grid_floor(t, dt_);
  if (k < 0 || static_cast<std::size_t>(k) >= knots()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double* src = values_.data() + static_cast<std::size_t>(k) * dim_;
  std::copy(src, src + dim_, out.begin());
}

std::vector<double> VectorSignal::sample(double t) const {
  std::vector<double> out(dim_);
  sample(t, out);
  return out;
}

VectorSignal concat(const VectorSignal& tail, const VectorSignal& head, double t) {
  if (tail.dim() != head.dim()) throw std::invalid_argument("concat: dim mismatch");
  const double rel = std::abs(tail.dt() - head.dt()) / std::max(tail.dt(), head.dt());
  if (rel > 1e-9) throw std::invalid_argument("concat: dt mismatch");
  if (!(t >= 0.0)) throw std::invalid_argument("concat: t must be nonnegative");
  const std::int64_t cut = grid_count(t, head.dt());
  if (cut == 0) return tail;  // degenerate prefix has measure zero

  const std::size_t dim = head.dim();
  std::vector<double> vals;
  vals.reserve((static_cast<std::size_t>(cut) + tail.knots()) * dim);
  for (std::int64_t k = 0; k < cut; ++k) {
    if (static_cast<std::size_t>(k) < head.knots()) {
      auto kn = head.knot(static_cast<std::size_t>(k));
      vals.insert(vals.end(), kn.begin(), kn.end());
    } else {
      vals.insert(vals.end(), dim, 0.0);
    }
  }
  vals.insert(vals.end(), tail.values().begin(), tail.values().end());
  return VectorSignal(dim, head.dt(), std::move(vals));
}

VectorSignal truncate(const VectorSignal& sig, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("truncate: t must be nonnegative");
  const std::int64_t cut = grid_count(t, sig.dt());
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(cut), sig.knots());
  // canonical minimal representation: drop trailing zero knots
  while (keep > 0) {
    bool all_zero = true;
    for (std::size_t i = 0; i < sig.dim(); ++i)
      if (sig.knot(keep - 1)[i] != 0.0) all_zero = false;
    if (!all_zero) break;
    --keep;
  }
  std::vector<double> vals(sig.values().begin(), sig.values().begin() + keep * sig.dim());
  return VectorSignal(sig.dim(), sig.dt(), std::move(vals));
}

double sup_norm(const VectorSignal& sig, double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("sup_norm: non-finite endpoint");
  if (!(0.0 <= a) || !(a <= b)) throw std::invalid_argument("sup_norm: need 0 <= a <= b");
  const std::int64_t k_first = grid_floor(a, sig.dt());
  const std::int64_t k_last = grid_floor(b, sig.dt());
  double best = 0.0;  // zero extension beyond support always participates
  for (std::int64_t k = k_first; k <= k_last; ++k) {
    if (k < 0 || static_cast<std::size_t>(k) >= sig.knots()) continue;
    best = std::max(best, norm2(sig.knot(static_cast<std::size_t>(k))));
  }
  return best;
}

namespace {

VectorSignal combine(const VectorSignal& a, const VectorSignal& b, double ca, double cb) {
  if (a.dim() != b.dim()) throw std::invalid_argument("signal combine: dim mismatch");
  const double rel = std::abs(a.dt() - b.dt()) / std::max(a.dt(), b.dt());
  if (rel > 1e-9) throw std::invalid_argument("signal combine: dt mismatch");
  const std::size_t knots = std::max(a.knots(), b.knots());
  std::vector<double> vals(knots * a.dim(), 0.0);
  for (std::size_t k = 0; k < knots; ++k) {
    for (std::size_t i = 0; i < a.dim(); ++i) {
      const double va = k < a.knots() ? a.knot(k)[i] : 0.0;
      const double vb = k < b.knots() ? b.knot(k)[i] : 0.0;
      vals[k * a.dim() + i] = ca * va + cb * vb;
    }
  }
  return VectorSignal(a.dim(), a.dt(), std::move(vals));
}

}  // namespace

VectorSignal signal_add(const VectorSignal& a, const VectorSignal& b) { return combine(a, b, 1.0, 1.0); }
VectorSignal signal_sub(const VectorSignal& a, const VectorSignal& b) { return combine(a, b, 1.0, -1.0); }

VectorSignal signal_scale(const VectorSignal& a, double c) {
  std::vector<double> vals = a.values();
  for (double& v : vals) v *= c;
  return VectorSignal(a.dim(), a.dt(), std::move(vals));
}

double pow_lambda(double lambda, double x) { return std::exp(x * std::log(lambda)); }

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw std::invalid_argument("discount base lambda must lie in (0,1)");
}

}  // namespace

double discounted_integral(std::span<const double> samples, double dt, double lambda, double t) {
  check_lambda(lambda);
  const std::int64_t steps = grid_count(t, dt);
  if (samples.size() < static_cast<std::size_t>(steps) + 1)
    throw std::invalid_argument("discounted_integral: samples do not cover [0,t]");
  double acc = 0.0;
  for (std::int64_t k = 0; k <= steps; ++k) {
    if (samples[static_cast<std::size_t>(k)] < 0.0)
      throw std::invalid_argument("discounted_integral: negative sample");
  }
  for (std::int64_t k = 0; k < steps; ++k) {
    const double tau0 = static_cast<double>(k) * dt;
    const double tau1 = static_cast<double>(k + 1) * dt;
    const double w0 = pow_lambda(lambda, t - tau0);
    const double w1 = pow_lambda(lambda, t - tau1);
    acc += 0.5 * dt * (w0 * samples[static_cast<std::size_t>(k)] + w1 * samples[static_cast<std::size_t>(k + 1)]);
  }
  return acc;
}

DiscountedAccumulator::DiscountedAccumulator(double lambda) : lambda_(lambda) { check_lambda(lambda_); }

void DiscountedAccumulator::advance(double h, double g0, double g1) {
  if (!(h > 0.0)) throw std::invalid_argument("DiscountedAccumulator: step must be positive");
  if (g0 < 0.0 || g1 < 0.0) throw std::invalid_argument("DiscountedAccumulator: negative sample");
  const double lh = pow_lambda(lambda_, h);
  value_ = lh * value_ + 0.5 * h * (lh * g0 + g1);
  time_ += h;
}

void write_signal_csv(const std::string& path, const VectorSignal& sig) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "t";
  for (std::size_t i = 0; i < sig.dim(); ++i) os << ",v" << i;
  os << "\n";
  char buf[32];
  for (std::size_t k = 0; k < sig.knots(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", static_cast<double>(k) * sig.dt());
    os << buf;
    for (double v : sig.knot(k)) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      os << "," << buf;
    }
    os << "\n";
  }
}

VectorSignal read_signal_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open signal csv: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty signal csv: " + path);
  std::size_t dim = 0;
  for (char c : line)
    if (c == ',') ++dim;
  if (dim == 0) throw std::runtime_error("signal csv needs header t,v0,...: " + path);

  std::vector<double> times, vals;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      if (col == 0)
        times.push_back(v);
      else
        vals.push_back(v);
      ++col;
    }
    if (col != dim + 1)
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected " +
                               std::to_string(dim + 1) + " columns");
  }
  if (times.empty()) throw std::runtime_error("signal csv has no rows: " + path);
  if (std::abs(times.front()) > 1e-12) throw std::runtime_error("signal csv must start at t=0: " + path);
  double dt = 0.0;
  if (times.size() == 1) {
    dt = 1.0;  // a single knot carries no grid information
  } else {
    dt = times[1] - times[0];
    if (!(dt > 0.0)) throw std::runtime_error("signal csv times must increase: " + path);
    for (std::size_t k = 1; k + 1 < times.size(); ++k) {
      const double d = times[k + 1] - times[k];
      if (std::abs(d - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
        throw std::runtime_error("signal csv grid is not uniform: " + path);
    }
  }
  return VectorSignal(dim, dt, std::move(vals));
}

}  // namespace detcert
