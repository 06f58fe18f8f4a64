#include "detcert/detectability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "detcert/rng.hpp"

namespace detcert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_lambda_open(double lambda, const char* what) {
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw std::invalid_argument(std::string(what) + ": discount base must lie in (0,1)");
}

void check_kinf(const ComparisonFunction& f, const char* what) {
  if (!f.is_kinf()) throw std::invalid_argument(std::string(what) + ": function must be class-Kinf");
}
}  // namespace

void IossCertificate::validate() const {
  check_kinf(alpha, "certificate alpha");
  check_kinf(alpha_x, "certificate alpha_x");
  check_kinf(alpha_u, "certificate alpha_u");
  check_kinf(alpha_y, "certificate alpha_y");
  check_lambda_open(lambda, "certificate");
}

LyapFunction LyapFunction::quadratic(std::vector<double> P, std::size_t n) {
  auto [lmin, lmax] = sym_eig_range(P, n);
  if (!(lmin > 0.0)) throw std::invalid_argument("LyapFunction: P must be positive definite");
  LyapFunction U;
  U.P_ = std::move(P);
  U.n_ = n;
  U.eig_min_ = lmin;
  U.eig_max_ = lmax;
  return U;
}

LyapFunction LyapFunction::custom(std::function<double(std::span<const double>, std::span<const double>)> fn) {
  LyapFunction U;
  U.fn_ = std::move(fn);
  return U;
}

double LyapFunction::operator()(std::span<const double> chi1, std::span<const double> chi2) const {
  if (!P_.empty()) {
    if (chi1.size() != n_ || chi2.size() != n_)
      throw std::invalid_argument("LyapFunction: state dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n_; ++j) row += P_[i * n_ + j] * (chi1[j] - chi2[j]);
      acc += (chi1[i] - chi2[i]) * row;
    }
    return acc;
  }
  return fn_(chi1, chi2);
}

LyapCertificate LyapCertificate::quadratic(std::vector<double> P, std::size_t n,
                                           ComparisonFunction sigma_u, ComparisonFunction sigma_y,
                                           double lambda) {
  LyapCertificate c;
  c.U = LyapFunction::quadratic(std::move(P), n);
  c.alpha1 = ComparisonFunction::power_law(c.U.eig_min(), 2.0);
  c.alpha2 = ComparisonFunction::power_law(c.U.eig_max(), 2.0);
  c.sigma_u = std::move(sigma_u);
  c.sigma_y = std::move(sigma_y);
  c.lambda = lambda;
  c.validate();
  return c;
}

void LyapCertificate::validate() const {
  check_kinf(alpha1, "certificate alpha1");
  check_kinf(alpha2, "certificate alpha2");
  check_kinf(sigma_u, "certificate sigma_u");
  check_kinf(sigma_y, "certificate sigma_y");
  check_lambda_open(lambda, "certificate");
}

IossCertificate certificate_from_lyapunov(const LyapCertificate& cert) {
  cert.validate();
  IossCertificate out;
  out.alpha = cert.alpha1;
  out.alpha_x = cert.alpha2;
  out.alpha_u = cert.sigma_u;
  out.alpha_y = cert.sigma_y;
  out.lambda = cert.lambda;
  return out;
}

void write_residual_csv(const std::string& path, const ResidualSeries& rs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "t,lhs,rhs,residual\n";
  char buf[32];
  for (std::size_t k = 0; k < rs.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", rs.times[k]);
    os << buf;
    std::snprintf(buf, sizeof buf, "%.12g", rs.lhs[k]);
    os << "," << buf;
    std::snprintf(buf, sizeof buf, "%.12g", rs.rhs[k]);
    os << "," << buf;
    std::snprintf(buf, sizeof buf, "%.12g", rs.residual[k]);
    os << "," << buf;
    os << "\n";
  }
}

namespace {

struct PairTrajectories {
  Trajectory t1, t2;
};

PairTrajectories simulate_pair(const SystemModel& model, const TrajectoryPairScenario& sc) {
  PairTrajectories out;
  out.t1 = simulate(model, sc.chi1, sc.u1, sc.d, sc.T, sc.dt);
  out.t2 = simulate(model, sc.chi2, sc.u2, sc.d, sc.T, sc.dt);
  return out;
}

// shared residual sweep: lhs(k) given, rhs = head*lambda^t + discounted
// trapezoid of g; err_model = variation bound of the quadrature + RK4 term
ResidualSeries residual_sweep(const std::vector<double>& times, const std::vector<double>& lhs,
                              const std::vector<double>& g, double head, double lambda, double dt,
                              double tol) {
  ResidualSeries rs;
  rs.times = times;
  rs.lhs = lhs;
  rs.tol = tol;
  rs.rhs.resize(times.size());
  rs.residual.resize(times.size());
  DiscountedAccumulator acc(lambda);
  rs.max_residual = -kInf;
  double variation = 0.0, gmax = 0.0, lhs_max = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) {
      acc.advance(dt, g[k - 1], g[k]);
      variation += std::abs(g[k] - g[k - 1]);
    }
    gmax = std::max(gmax, g[k]);
    lhs_max = std::max(lhs_max, std::abs(lhs[k]));
    rs.rhs[k] = head * pow_lambda(lambda, times[k]) + acc.value();
    rs.residual[k] = lhs[k] - rs.rhs[k];
    if (rs.residual[k] > rs.max_residual) {
      rs.max_residual = rs.residual[k];
      rs.argmax_time = times[k];
    }
  }
  rs.err_model = 0.5 * dt * variation + dt * dt * gmax + std::pow(dt, 4) * lhs_max +
                 1e-14 * (1.0 + head);
  rs.holds = rs.max_residual <= tol;
  return rs;
}

}  // namespace

ResidualSeries ioss_residual(const SystemModel& model, const IossCertificate& cert,
                             const TrajectoryPairScenario& sc) {
  cert.validate();
  auto pair = simulate_pair(model, sc);
  const std::size_t nodes = pair.t1.nodes();
  std::vector<double> lhs(nodes), g(nodes);
  std::vector<double> u1v(model.m()), u2v(model.m());
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = pair.t1.times[k];
    lhs[k] = cert.alpha(dist2(pair.t1.state(k), pair.t2.state(k)));
    sc.u1.sample(t, u1v);
    sc.u2.sample(t, u2v);
    g[k] = cert.alpha_u(dist2(u1v, u2v)) + cert.alpha_y(dist2(pair.t1.output(k), pair.t2.output(k)));
  }
  const double chid = dist2(sc.chi1, sc.chi2);
  const double head = cert.alpha_x(chid);
  const double tol = 1e-6 * (1.0 + head);
  return residual_sweep(pair.t1.times, lhs, g, head, cert.lambda, sc.dt, tol);
}

ResidualSeries lyap_residual(const SystemModel& model, const LyapCertificate& cert,
                             const TrajectoryPairScenario& sc) {
  cert.validate();
  auto pair = simulate_pair(model, sc);
  const std::size_t nodes = pair.t1.nodes();
  std::vector<double> lhs(nodes), g(nodes);
  std::vector<double> u1v(model.m()), u2v(model.m());
  double sandwich = 0.0, sandwich_t = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = pair.t1.times[k];
    const double uval = cert.U(pair.t1.state(k), pair.t2.state(k));
    if (!std::isfinite(uval) || uval < 0.0)
      throw std::runtime_error("lyap_residual: U returned a negative or non-finite value");
    lhs[k] = uval;
    const double xd = dist2(pair.t1.state(k), pair.t2.state(k));
    const double lo_gap = cert.alpha1(xd) - uval;
    const double hi_gap = uval - cert.alpha2(xd);
    double viol = std::max(std::max(lo_gap, hi_gap), 0.0);
    if (viol <= 1e-12 * (1.0 + uval)) viol = 0.0;  // rounding floor
    if (viol > sandwich) {
      sandwich = viol;
      sandwich_t = t;
    }
    sc.u1.sample(t, u1v);
    sc.u2.sample(t, u2v);
    g[k] = cert.sigma_u(dist2(u1v, u2v)) + cert.sigma_y(dist2(pair.t1.output(k), pair.t2.output(k)));
  }
  const double head = cert.U(sc.chi1, sc.chi2);
  const double tol = 1e-3 * (1.0 + head);
  ResidualSeries rs = residual_sweep(pair.t1.times, lhs, g, head, cert.lambda, sc.dt, tol);
  rs.max_sandwich_violation = sandwich;
  rs.sandwich_argmax_time = sandwich_t;
  return rs;
}

// -------- scenario sampling --------

namespace {

double pick_dt(double span, double dt_req, std::size_t knots) {
  const double sig_dt = span / static_cast<double>(knots);
  if (dt_req > 0.0) {
    const double ratio = sig_dt / dt_req;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
      throw std::invalid_argument("scenario dt must divide the knot spacing");
    return dt_req;
  }
  const double target = span / 1000.0;
  const double spk = std::max(1.0, std::ceil(sig_dt / target));
  return sig_dt / spk;
}

void draw_box(Rng& rng, const Box& box, std::optional<double> radius, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::isfinite(box.lo[i]) && std::isfinite(box.hi[i])) {
      out[i] = rng.uniform(box.lo[i], box.hi[i]);
    } else {
      if (!radius) throw std::invalid_argument("sampling an unbounded box requires a radius");
      out[i] = std::clamp(rng.gaussian(0.0, *radius), box.lo[i], box.hi[i]);
    }
  }
}

VectorSignal draw_signal(Rng& rng, const Box& box, std::optional<double> radius, std::size_t dim,
                         double sig_dt, std::size_t knots) {
  std::vector<double> vals(dim * knots);
  for (std::size_t k = 0; k < knots; ++k)
    draw_box(rng, box, radius, std::span<double>(vals.data() + k * dim, dim));
  return VectorSignal(dim, sig_dt, std::move(vals));
}

}  // namespace

TrajectoryPairScenario sample_scenario(const SystemModel& model, const ScenarioSampler& sampler,
                                       std::uint64_t index) {
  if (sampler.knots == 0) throw std::invalid_argument("sampler: knots must be positive");
  if (!(sampler.T > 0.0)) throw std::invalid_argument("sampler: T must be positive");
  Rng rng(stream_seed(sampler.seed, index));
  const double sig_dt = sampler.T / static_cast<double>(sampler.knots);
  TrajectoryPairScenario sc{
      std::vector<double>(model.n()), std::vector<double>(model.n()),
      VectorSignal(model.m(), sig_dt),  VectorSignal(model.m(), sig_dt),
      VectorSignal(model.q(), sig_dt),  sampler.T,
      pick_dt(sampler.T, sampler.dt, sampler.knots)};
  draw_box(rng, model.state_box(), sampler.radius, sc.chi1);
  draw_box(rng, model.state_box(), sampler.radius, sc.chi2);
  sc.u1 = draw_signal(rng, model.u_box(), sampler.radius, model.m(), sig_dt, sampler.knots);
  sc.u2 = draw_signal(rng, model.u_box(), sampler.radius, model.m(), sig_dt, sampler.knots);
  sc.d = draw_signal(rng, model.d_box(), sampler.radius, model.q(), sig_dt, sampler.knots);
  return sc;
}

// -------- falsification --------

namespace {

struct DecisionLayout {
  std::size_t n, m, q, segments;
  std::size_t dim() const { return 2 * n + 2 * segments * m + segments * q; }
};

Box decision_box(const SystemModel& model, std::size_t segments) {
  std::vector<double> lo, hi;
  auto push = [&](const Box& b, std::size_t times) {
    for (std::size_t k = 0; k < times; ++k) {
      lo.insert(lo.end(), b.lo.begin(), b.lo.end());
      hi.insert(hi.end(), b.hi.begin(), b.hi.end());
    }
  };
  push(model.state_box(), 2);
  push(model.u_box(), 2 * segments);
  push(model.d_box(), segments);
  return Box(std::move(lo), std::move(hi));
}

TrajectoryPairScenario decode_scenario(const DecisionLayout& lay, std::span<const double> x,
                                       double T, double dt) {
  const double sig_dt = T / static_cast<double>(lay.segments);
  TrajectoryPairScenario sc{std::vector<double>(x.begin(), x.begin() + lay.n),
                            std::vector<double>(x.begin() + lay.n, x.begin() + 2 * lay.n),
                            VectorSignal(lay.m, sig_dt),
                            VectorSignal(lay.m, sig_dt),
                            VectorSignal(lay.q, sig_dt),
                            T,
                            dt};
  std::size_t off = 2 * lay.n;
  sc.u1 = VectorSignal(lay.m, sig_dt, std::vector<double>(x.begin() + off, x.begin() + off + lay.segments * lay.m));
  off += lay.segments * lay.m;
  sc.u2 = VectorSignal(lay.m, sig_dt, std::vector<double>(x.begin() + off, x.begin() + off + lay.segments * lay.m));
  off += lay.segments * lay.m;
  sc.d = VectorSignal(lay.q, sig_dt, std::vector<double>(x.begin() + off, x.begin() + off + lay.segments * lay.q));
  return sc;
}

double falsify_dt(double horizon, std::size_t segments, double dt_req) {
  const double sig_dt = horizon / static_cast<double>(segments);
  if (dt_req > 0.0) {
    const double ratio = sig_dt / dt_req;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
      throw std::invalid_argument("falsify: dt must divide the knot spacing");
    return dt_req;
  }
  const double spk = std::max(1.0, std::ceil(256.0 / static_cast<double>(segments)));
  return sig_dt / spk;
}

}  // namespace

FalsifyResult falsify(const SystemModel& model, const IossCertificate& cert,
                      const FalsifySearch& search) {
  cert.validate();
  if (search.restarts == 0) throw std::invalid_argument("falsify: need at least one restart");
  if (!(search.horizon > 0.0)) throw std::invalid_argument("falsify: horizon must be positive");
  if (search.segments == 0) throw std::invalid_argument("falsify: segments must be positive");
  const DecisionLayout lay{model.n(), model.m(), model.q(), search.segments};
  const Box box = decision_box(model, search.segments);
  if (!box.bounded() && !search.radius)
    throw std::invalid_argument("falsify: unbounded boxes require a search radius");
  const double dt = falsify_dt(search.horizon, search.segments, search.dt);

  const std::size_t per_restart = search.budget / search.restarts;
  if (per_restart < lay.dim() + 2)
    throw std::invalid_argument("falsify: budget exhausted before any evaluation");

  auto objective = [&](std::span<const double> x) -> double {
    try {
      TrajectoryPairScenario sc = decode_scenario(lay, x, search.horizon, dt);
      return ioss_residual(model, cert, sc).max_residual;
    } catch (const SimulationBlowup&) {
      return 1e300;  // a blow-up under bounded inputs already defeats the model assumptions
    }
  };

  MultistartOptions opt;
  opt.restarts = search.restarts;
  opt.seed = search.seed;
  opt.evals_per_restart = per_restart;
  opt.radius = search.radius;
  opt.exec = search.exec;
  MultistartResult best = multistart_maximize(box, objective, opt);

  FalsifyResult res;
  res.best_restart = best.restart_index;
  res.evals = best.total_evals;
  res.witness = decode_scenario(lay, best.x, search.horizon, dt);
  try {
    res.best = ioss_residual(model, cert, res.witness);
  } catch (const SimulationBlowup& ex) {
    res.blowup_time = ex.time;
    res.violation = true;
    res.refined_max = kInf;
    res.best.max_residual = kInf;
    res.best.tol = 0.0;
    return res;
  }
  if (res.best.max_residual > res.best.tol) {
    // certify on a refined grid
    TrajectoryPairScenario refined = res.witness;
    refined.dt = res.witness.dt / 2.0;
    try {
      ResidualSeries fine = ioss_residual(model, cert, refined);
      res.refined_max = fine.max_residual;
      res.violation = fine.max_residual > fine.tol;
    } catch (const SimulationBlowup& ex) {
      res.blowup_time = ex.time;
      res.refined_max = kInf;
      res.violation = true;
    }
  } else {
    res.refined_max = res.best.max_residual;
    res.violation = false;
  }
  return res;
}

// -------- converse candidate estimate --------

namespace {

struct EstimateLayout {
  std::size_t m, q, segments;
  std::size_t dim() const { return 1 + 2 * segments * m + segments * q; }
};

double estimate_dt(double t_max, std::size_t segments, double dt_req) {
  return falsify_dt(t_max, segments, dt_req);
}

// candidate functional: lambda^(-t/2) ( alpha(|x_delta(t)|)
//   - int over the full support of lambda^(t-tau) 2 alpha_u(|u_delta|)
//   - int_0^t lambda^(t-tau) alpha_y(|y_delta|) )
double candidate_value(const SystemModel& model, const IossCertificate& cert,
                       std::span<const double> chi1, std::span<const double> chi2, double t_snap,
                       const VectorSignal& u1, const VectorSignal& u2, const VectorSignal& d,
                       double t_max, double dt) {
  Trajectory t1 = simulate(model, chi1, u1, d, t_snap, dt);
  Trajectory t2 = simulate(model, chi2, u2, d, t_snap, dt);
  const std::size_t nodes = t1.nodes();

  const std::int64_t steps_all = grid_count(t_max, dt);
  std::vector<double> u1v(model.m()), u2v(model.m());
  double iu = 0.0;
  double prev = 0.0;
  for (std::int64_t k = 0; k <= steps_all; ++k) {
    const double tau = static_cast<double>(k) * dt;
    u1.sample(tau, u1v);
    u2.sample(tau, u2v);
    const double g = 2.0 * cert.alpha_u(dist2(u1v, u2v));
    if (k > 0) {
      const double w0 = pow_lambda(cert.lambda, t_snap - (static_cast<double>(k - 1) * dt));
      const double w1 = pow_lambda(cert.lambda, t_snap - tau);
      iu += 0.5 * dt * (w0 * prev + w1 * g);
    }
    prev = g;
  }

  double iy = 0.0;
  prev = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double tau = t1.times[k];
    const double g = cert.alpha_y(dist2(t1.output(k), t2.output(k)));
    if (k > 0) {
      const double w0 = pow_lambda(cert.lambda, t_snap - t1.times[k - 1]);
      const double w1 = pow_lambda(cert.lambda, t_snap - tau);
      iy += 0.5 * dt * (w0 * prev + w1 * g);
    }
    prev = g;
  }

  const double xterm = cert.alpha(dist2(t1.state(nodes - 1), t2.state(nodes - 1)));
  return pow_lambda(cert.lambda, -0.5 * t_snap) * (xterm - iu - iy);
}

}  // namespace

LyapEstimate estimate_lyap_candidate(const SystemModel& model, const IossCertificate& cert,
                                     std::span<const double> chi1, std::span<const double> chi2,
                                     const LyapEstimateSearch& search) {
  cert.validate();
  if (model.state_box().dim() != chi1.size() || chi1.size() != chi2.size())
    throw std::invalid_argument("estimate_lyap_candidate: state dimension mismatch");
  if (!(search.t_max > 0.0)) throw std::invalid_argument("estimate_lyap_candidate: t_max must be positive");
  const EstimateLayout lay{model.m(), model.q(), search.segments};
  const double dt = estimate_dt(search.t_max, search.segments, search.dt);

  std::vector<double> lo{0.0}, hi{search.t_max};
  auto push = [&](const Box& b, std::size_t times) {
    for (std::size_t k = 0; k < times; ++k) {
      lo.insert(lo.end(), b.lo.begin(), b.lo.end());
      hi.insert(hi.end(), b.hi.begin(), b.hi.end());
    }
  };
  push(model.u_box(), 2 * search.segments);
  push(model.d_box(), search.segments);
  Box box(std::move(lo), std::move(hi));

  const double sig_dt = search.t_max / static_cast<double>(search.segments);
  auto objective = [&](std::span<const double> x) -> double {
    const double t_snap = static_cast<double>(grid_floor(std::clamp(x[0], 0.0, search.t_max), dt)) * dt;
    std::size_t off = 1;
    VectorSignal u1(lay.m, sig_dt,
                    std::vector<double>(x.begin() + off, x.begin() + off + lay.segments * lay.m));
    off += lay.segments * lay.m;
    VectorSignal u2(lay.m, sig_dt,
                    std::vector<double>(x.begin() + off, x.begin() + off + lay.segments * lay.m));
    off += lay.segments * lay.m;
    VectorSignal d(lay.q, sig_dt,
                   std::vector<double>(x.begin() + off, x.begin() + off + lay.segments * lay.q));
    try {
      return candidate_value(model, cert, chi1, chi2, std::min(t_snap, search.t_max), u1, u2, d,
                             search.t_max, dt);
    } catch (const SimulationBlowup&) {
      return 1e300;
    }
  };

  // the (t=0, u1=u2=0, d=0) candidate is always part of the search
  std::vector<std::vector<double>> seeds{std::vector<double>(lay.dim(), 0.0)};

  MultistartOptions opt;
  opt.restarts = search.restarts;
  opt.seed = search.seed;
  opt.evals_per_restart = search.evals_per_restart;
  opt.exec = search.exec;
  MultistartResult best = multistart_maximize(box, objective, opt, seeds);

  LyapEstimate est{best.value, cert.lambda, 0.0, VectorSignal(lay.m, sig_dt),
                   VectorSignal(lay.m, sig_dt), VectorSignal(lay.q, sig_dt)};
  est.t_witness = static_cast<double>(grid_floor(std::clamp(best.x[0], 0.0, search.t_max), dt)) * dt;
  std::size_t off = 1;
  est.u1 = VectorSignal(lay.m, sig_dt,
                        std::vector<double>(best.x.begin() + off, best.x.begin() + off + lay.segments * lay.m));
  off += lay.segments * lay.m;
  est.u2 = VectorSignal(lay.m, sig_dt,
                        std::vector<double>(best.x.begin() + off, best.x.begin() + off + lay.segments * lay.m));
  off += lay.segments * lay.m;
  est.d = VectorSignal(lay.q, sig_dt,
                       std::vector<double>(best.x.begin() + off, best.x.begin() + off + lay.segments * lay.q));
  return est;
}

ContinuityProbeResult continuity_probe(const SystemModel& model, const IossCertificate& cert,
                                       std::span<const double> chi1, std::span<const double> chi2,
                                       std::span<const double> radii,
                                       const LyapEstimateSearch& search) {
  if (radii.empty()) throw std::invalid_argument("continuity_probe: need at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] <= radii[i - 1]))
      throw std::invalid_argument("continuity_probe: radii must be nonincreasing");

  ContinuityProbeResult out;
  LyapEstimate base = estimate_lyap_candidate(model, cert, chi1, chi2, search);
  out.base_value = base.value;
  const double chid = dist2(chi1, chi2);
  const double upper = cert.alpha_x(chid);
  if (base.value > upper * 1.01 + 1e-9)
    throw std::runtime_error(
        "continuity_probe: base estimate exceeds the certificate's upper bracket; the certificate "
        "appears invalid (supremum likely unbounded)");

  LyapEstimateSearch reseeded = search;
  reseeded.seed = mix_seed(search.seed, 0x5eedu);
  out.noise =
      std::abs(estimate_lyap_candidate(model, cert, chi1, chi2, reseeded).value - base.value);

  const std::size_t n = chi1.size();
  std::vector<double> p1(chi1.begin(), chi1.end()), p2(chi2.begin(), chi2.end());
  for (double r : radii) {
    double dev = 0.0;
    if (r > 0.0) {
      for (std::size_t which = 0; which < 2; ++which) {
        for (std::size_t i = 0; i < n; ++i) {
          for (double sgn : {+1.0, -1.0}) {
            std::vector<double> q1(chi1.begin(), chi1.end()), q2(chi2.begin(), chi2.end());
            (which == 0 ? q1 : q2)[i] += sgn * r;
            model.state_box().clamp(q1);
            model.state_box().clamp(q2);
            const double v = estimate_lyap_candidate(model, cert, q1, q2, search).value;
            dev = std::max(dev, std::abs(v - base.value));
          }
        }
      }
    } else {
      // identical evaluation, deterministic by construction
      const double v = estimate_lyap_candidate(model, cert, p1, p2, search).value;
      dev = std::abs(v - base.value);
    }
    out.table.emplace_back(r, dev);
  }

  out.pass = true;
  for (std::size_t i = 1; i < out.table.size(); ++i)
    if (out.table[i].second > out.table[i - 1].second + 10.0 * out.noise + 1e-12) out.pass = false;
  return out;
}

}  // namespace detcert
