#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace detcert {

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dist2: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Axis-aligned box, entries may be +-infinity for unbounded directions.
struct Box {
  std::vector<double> lo, hi;

  Box() = default;
  Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi size mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw std::invalid_argument("Box: lo > hi");
  }

  static Box cube(std::size_t dim, double lo, double hi) {
    return Box(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
  }

  std::size_t dim() const { return lo.size(); }

  bool bounded() const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
    return true;
  }

  bool contains(std::span<const double> x, double slack = 0.0) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    return true;
  }

  bool contains_zero() const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (lo[i] > 0.0 || hi[i] < 0.0) return false;
    return true;
  }

  void clamp(std::span<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < lo[i]) x[i] = lo[i];
      if (x[i] > hi[i]) x[i] = hi[i];
    }
  }
};

// Eigenvalue range of a symmetric matrix by cyclic Jacobi rotations.
// Intended for the small matrices that appear in quadratic forms.
inline std::pair<double, double> sym_eig_range(const std::vector<double>& m, std::size_t n) {
  if (m.size() != n * n) throw std::invalid_argument("sym_eig_range: bad size");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(m[i * n + j] - m[j * n + i]) > 1e-12 * (1.0 + std::abs(m[i * n + j])))
        throw std::invalid_argument("sym_eig_range: matrix not symmetric");

  std::vector<double> a = m;
  auto off = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a[i * n + j] * a[i * n + j];
    return s;
  };
  for (int sweep = 0; sweep < 100 && off() > 1e-24; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
    }
  }
  double lmin = a[0], lmax = a[0];
  for (std::size_t i = 1; i < n; ++i) {
    lmin = std::min(lmin, a[i * n + i]);
    lmax = std::max(lmax, a[i * n + i]);
  }
  return {lmin, lmax};
}

}  // namespace detcert
