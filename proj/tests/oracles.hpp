#pragma once

// Test-only oracles, independent of the library's computation paths.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

// Adaptive Runge-Kutta-Fehlberg 4(5) for scalar ODEs v' = f(t, v).
inline double rkf45_scalar(const std::function<double(double, double)>& f, double t0, double v0,
                           double t1, double rtol, double atol) {
  double t = t0, v = v0;
  double h = (t1 - t0) / 64.0;
  const double hmin = (t1 - t0) * 1e-14;
  int guard = 0;
  while (t < t1) {
    if (++guard > 20000000) throw std::runtime_error("rkf45: step limit");
    if (t + h > t1) h = t1 - t;
    const double k1 = f(t, v);
    const double k2 = f(t + h / 4.0, v + h * k1 / 4.0);
    const double k3 = f(t + 3.0 * h / 8.0, v + h * (3.0 * k1 + 9.0 * k2) / 32.0);
    const double k4 =
        f(t + 12.0 * h / 13.0, v + h * (1932.0 * k1 - 7200.0 * k2 + 7296.0 * k3) / 2197.0);
    const double k5 =
        f(t + h, v + h * (439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 - 845.0 / 4104.0 * k4));
    const double k6 = f(t + h / 2.0, v + h * (-8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 +
                                              1859.0 / 4104.0 * k4 - 11.0 / 40.0 * k5));
    const double v4 =
        v + h * (25.0 / 216.0 * k1 + 1408.0 / 2565.0 * k3 + 2197.0 / 4104.0 * k4 - k5 / 5.0);
    const double v5 = v + h * (16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 + 28561.0 / 56430.0 * k4 -
                               9.0 / 50.0 * k5 + 2.0 / 55.0 * k6);
    const double err = std::abs(v5 - v4);
    const double tol = atol + rtol * std::max(std::abs(v), std::abs(v5));
    if (err <= tol || h <= hmin) {
      t += h;
      v = v5;
    }
    const double factor = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 4.0;
    h *= std::min(4.0, std::max(0.1, factor));
    if (h < hmin) h = hmin;
  }
  return v;
}

// v' = k1(3 v), v(0) = c for k1(s) = s*ln(1+s), integrated in the coordinate
// sigma = ln(3 v + 1) where the dynamics stay well-scaled:
//   sigma' = 3 sigma (1 - exp(-sigma)).
inline double logaffine_comparison_ode(double c, double t, double rtol) {
  if (c == 0.0 || t <= 0.0) return c;
  const double s0 = std::log1p(3.0 * c);
  auto f = [](double, double s) { return 3.0 * s * (1.0 - std::exp(-s)); };
  const double s1 = rkf45_scalar(f, 0.0, s0, t, rtol, rtol);
  return (std::exp(s1) - 1.0) / 3.0;
}

// closed forms for xdot = a x + u with constant u
inline double linear_scalar_state(double a, double chi, double u_const, double t) {
  if (a == 0.0) return chi + u_const * t;
  return std::exp(a * t) * chi + u_const / a * (std::exp(a * t) - 1.0);
}

// closed form for int_0^t lambda^(t-tau) dtau = (1 - lambda^t)/(-ln lambda)
inline double discounted_unit_integral(double lambda, double t) {
  return (1.0 - std::exp(t * std::log(lambda))) / (-std::log(lambda));
}

}  // namespace oracles
