#include "detcert/observer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "detcert/multistart.hpp"
#include "detcert/rng.hpp"

namespace detcert {

void RgasCertificate::validate() const {
  auto check = [](const ComparisonFunction& f, const char* what) {
    if (!f.is_kinf()) throw std::invalid_argument(std::string(what) + ": function must be class-Kinf");
  };
  check(beta, "certificate beta");
  check(beta_x, "certificate beta_x");
  check(beta_u, "certificate beta_u");
  check(beta_y, "certificate beta_y");
  if (!(eta > 0.0) || !(eta < 1.0))
    throw std::invalid_argument("certificate: discount base eta must lie in (0,1)");
}

namespace {

// innovation data m(t) = y_bar(t) - v_bar(t), sampled at grid nodes and
// bridged linearly inside each step. Sampling the combination keeps the
// interpolation exact for continuous outputs even when the measurement-noise
// channel jumps at input knots.
std::vector<double> innovation_nodes(const SystemModel& model, const VectorSignal& u_bar,
                                     const VectorSignal& y_bar, double dt, std::int64_t steps) {
  const std::size_t p = model.p();
  const std::size_t noise_off = model.m() - model.noise_dim();
  std::vector<double> m_nodes(static_cast<std::size_t>(steps + 1) * p);
  std::vector<double> yv(p), uv(model.m());
  for (std::int64_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    y_bar.sample(t, yv);
    u_bar.sample(t, uv);
    for (std::size_t i = 0; i < p; ++i) {
      double v = yv[i];
      if (model.noise_dim() == p) v -= uv[noise_off + i];
      m_nodes[static_cast<std::size_t>(k) * p + i] = v;
    }
  }
  return m_nodes;
}

struct LuenbergerCore {
  const SystemModel* model;
  std::vector<double> L;  // n x p

  // integrate to node `steps`; when hold_last is set the final step reuses the
  // left innovation sample (strictly truncated data lack the sample at t)
  std::vector<double> integrate(std::span<const double> chi_bar, const VectorSignal& u_bar,
                                const VectorSignal& d, std::span<const double> m_nodes, double dt,
                                std::int64_t steps, bool hold_last) const {
    const auto& lin = *model->linear();
    const std::size_t n = model->n(), p = model->p(), q = model->q();
    const std::size_t mw = model->m() - model->noise_dim();

    std::vector<double> xs(static_cast<std::size_t>(steps + 1) * n);
    std::vector<double> x(chi_bar.begin(), chi_bar.end());
    std::vector<double> uval(model->m()), dval(q);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), st(n), mstage(p);

    auto deriv = [&](std::span<const double> s, std::span<const double> w, std::span<const double> dd,
                     std::span<const double> m, std::span<double> out) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += lin.A[i * n + j] * s[j];
        for (std::size_t j = 0; j < mw; ++j) acc += lin.Bw[i * mw + j] * w[j];
        for (std::size_t j = 0; j < q; ++j) acc += lin.Bd[i * q + j] * dd[j];
        out[i] = acc;
      }
      for (std::size_t r = 0; r < p; ++r) {
        double innov = m[r];
        for (std::size_t j = 0; j < n; ++j) innov -= lin.C[r * n + j] * s[j];
        for (std::size_t i = 0; i < n; ++i) out[i] += L[i * p + r] * innov;
      }
    };

    std::copy(x.begin(), x.end(), xs.begin());
    for (std::int64_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      u_bar.sample(t, uval);
      d.sample(t, dval);
      std::span<const double> w(uval.data(), mw);
      const double* m0 = m_nodes.data() + static_cast<std::size_t>(k) * p;
      const double* m1 = m0 + p;
      const bool hold = hold_last && k == steps - 1;

      std::span<const double> m_left(m0, p);
      deriv(x, w, dval, m_left, k1);
      for (std::size_t i = 0; i < p; ++i) mstage[i] = hold ? m0[i] : 0.5 * (m0[i] + m1[i]);
      for (std::size_t i = 0; i < n; ++i) st[i] = x[i] + 0.5 * dt * k1[i];
      deriv(st, w, dval, mstage, k2);
      for (std::size_t i = 0; i < n; ++i) st[i] = x[i] + 0.5 * dt * k2[i];
      deriv(st, w, dval, mstage, k3);
      for (std::size_t i = 0; i < p; ++i) mstage[i] = hold ? m0[i] : m1[i];
      for (std::size_t i = 0; i < n; ++i) st[i] = x[i] + dt * k3[i];
      deriv(st, w, dval, mstage, k4);
      for (std::size_t i = 0; i < n; ++i)
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!all_finite(x)) {
        std::ostringstream os;
        os << "observer integration diverged at t = " << (t + dt);
        throw SimulationBlowup(t + dt, os.str());
      }
      std::copy(x.begin(), x.end(), xs.begin() + static_cast<std::size_t>(k + 1) * n);
    }
    return xs;
  }
};

class LuenbergerObserver final : public Observer {
 public:
  LuenbergerObserver(SystemModel model, std::vector<double> L)
      : model_(std::move(model)), core_{&model_, std::move(L)} {}

  // Strictly truncated dispatch: with hold_last set, no sample at or beyond
  // t is ever read, which is the action of the truncation z_t on the data.
  std::vector<double> estimate(double t, std::span<const double> chi_bar, const VectorSignal& u_bar,
                               const VectorSignal& d, const VectorSignal& y_bar,
                               double dt) const override {
    const std::int64_t steps = grid_count(t, dt);
    if (steps == 0) return std::vector<double>(chi_bar.begin(), chi_bar.end());
    auto m_nodes = innovation_nodes(model_, u_bar, y_bar, dt, steps - 1);
    m_nodes.insert(m_nodes.end(), model_.p(), 0.0);  // node at t, never read under hold_last
    auto xs = core_.integrate(chi_bar, u_bar, d, m_nodes, dt, steps, /*hold_last=*/true);
    return std::vector<double>(xs.end() - static_cast<std::ptrdiff_t>(model_.n()), xs.end());
  }

  std::vector<double> estimate_series(std::span<const double> chi_bar, const VectorSignal& u_bar,
                                      const VectorSignal& d, const VectorSignal& y_bar, double T,
                                      double dt) const override {
    const std::int64_t steps = grid_count(T, dt);
    auto m_nodes = innovation_nodes(model_, u_bar, y_bar, dt, steps);
    return core_.integrate(chi_bar, u_bar, d, m_nodes, dt, steps, /*hold_last=*/false);
  }

  std::size_t state_dim() const override { return model_.n(); }

 private:
  SystemModel model_;
  LuenbergerCore core_;
};

bool hurwitz_small(const std::vector<double>& M, std::size_t n) {
  if (n == 1) return M[0] < 0.0;
  if (n == 2) {
    const double tr = M[0] + M[3];
    const double det = M[0] * M[3] - M[1] * M[2];
    return tr < 0.0 && det > 0.0;
  }
  throw std::invalid_argument("luenberger: Hurwitz test implemented for n <= 2");
}

}  // namespace

std::unique_ptr<Observer> make_luenberger(const SystemModel& model, std::vector<double> L) {
  if (!model.linear()) throw std::invalid_argument("luenberger: model must carry linear structure");
  const std::size_t n = model.n(), p = model.p();
  if (L.size() != n * p) throw std::invalid_argument("luenberger: gain must be n x p");
  const auto& lin = *model.linear();
  std::vector<double> M(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = lin.A[i * n + j];
      for (std::size_t r = 0; r < p; ++r) acc -= L[i * p + r] * lin.C[r * n + j];
      M[i * n + j] = acc;
    }
  if (!hurwitz_small(M, n))
    throw std::invalid_argument("luenberger: A - L C is not Hurwitz");
  return std::make_unique<LuenbergerObserver>(model, std::move(L));
}

// -------- full-information estimator --------

FullInformationObserver::FullInformationObserver(SystemModel model, FiWeights weights, double eta,
                                                 FiOptions opts)
    : model_(std::move(model)), weights_(std::move(weights)), eta_(eta), opts_(opts) {
  if (!(eta_ > 0.0) || !(eta_ < 1.0))
    throw std::invalid_argument("full_information: eta must lie in (0,1)");
  if (opts_.segments == 0) throw std::invalid_argument("full_information: segments must be positive");
  if (!model_.state_box().bounded() || !model_.u_box().bounded())
    throw std::invalid_argument("full_information: state and input boxes must be bounded");
}

FullInformationObserver::Detail FullInformationObserver::estimate_detail(
    double t, std::span<const double> chi_bar, const VectorSignal& u_bar, const VectorSignal& d,
    const VectorSignal& y_bar, double dt) const {
  const std::size_t n = model_.n(), p = model_.p();
  const std::size_t mw = model_.m() - model_.noise_dim();
  const std::int64_t steps = grid_count(t, dt);
  Detail out;
  if (steps == 0) {
    // only the prior is active; its minimizer is the nominal initial state
    out.xhat.assign(chi_bar.begin(), chi_bar.end());
    out.cost = 0.0;
    out.converged = true;
    return out;
  }

  const std::size_t segs = std::min<std::size_t>(opts_.segments, static_cast<std::size_t>(steps));
  // segment s covers sim steps [s*steps/segs, (s+1)*steps/segs)
  auto seg_of_step = [&](std::int64_t k) {
    return std::min<std::size_t>(static_cast<std::size_t>(k) * segs / static_cast<std::size_t>(steps),
                                 segs - 1);
  };

  std::vector<double> lo(model_.state_box().lo), hi(model_.state_box().hi);
  for (std::size_t s = 0; s < segs; ++s) {
    lo.insert(lo.end(), model_.u_box().lo.begin(), model_.u_box().lo.begin() + mw);
    hi.insert(hi.end(), model_.u_box().hi.begin(), model_.u_box().hi.begin() + mw);
  }
  Box box(std::move(lo), std::move(hi));

  const double eta_t = pow_lambda(eta_, t);
  std::vector<double> ubar_w_nodes(static_cast<std::size_t>(steps + 1) * mw);
  std::vector<double> ybar_nodes(static_cast<std::size_t>(steps + 1) * p);
  {
    std::vector<double> uv(model_.m()), yv(p);
    for (std::int64_t k = 0; k <= steps; ++k) {
      const double tau = static_cast<double>(k) * dt;
      u_bar.sample(tau, uv);
      y_bar.sample(tau, yv);
      std::copy(uv.begin(), uv.begin() + mw, ubar_w_nodes.begin() + static_cast<std::size_t>(k) * mw);
      std::copy(yv.begin(), yv.end(), ybar_nodes.begin() + static_cast<std::size_t>(k) * p);
    }
  }

  auto cost = [&](std::span<const double> z) -> double {
    std::vector<double> chi_hat(z.begin(), z.begin() + n);
    // expand the segment knots onto the sim grid; the noise block stays zero
    std::vector<double> uvals(static_cast<std::size_t>(steps) * model_.m(), 0.0);
    for (std::int64_t k = 0; k < steps; ++k) {
      const std::size_t s = seg_of_step(k);
      for (std::size_t j = 0; j < mw; ++j)
        uvals[static_cast<std::size_t>(k) * model_.m() + j] = z[n + s * mw + j];
    }
    VectorSignal w_hat(model_.m(), dt, std::move(uvals));
    Trajectory traj;
    try {
      traj = simulate(model_, chi_hat, w_hat, d, t, dt);
    } catch (const SimulationBlowup&) {
      return -1e300;
    }
    double prior = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dchi = chi_hat[i] - chi_bar[i];
      prior += dchi * dchi;
    }
    double acc = weights_.w_x(std::sqrt(prior)) * eta_t;
    double prev_g = 0.0;
    std::vector<double> wk(mw);
    for (std::int64_t k = 0; k <= steps; ++k) {
      const double tau = static_cast<double>(k) * dt;
      const std::size_t s = k < steps ? seg_of_step(k) : seg_of_step(steps - 1);
      for (std::size_t j = 0; j < mw; ++j) wk[j] = z[n + s * mw + j];
      double du = 0.0;
      for (std::size_t j = 0; j < mw; ++j) {
        const double dd = wk[j] - ubar_w_nodes[static_cast<std::size_t>(k) * mw + j];
        du += dd * dd;
      }
      double dy = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double dd =
            traj.outputs[static_cast<std::size_t>(k) * p + j] - ybar_nodes[static_cast<std::size_t>(k) * p + j];
        dy += dd * dd;
      }
      const double g = weights_.w_u(std::sqrt(du)) + weights_.w_y(std::sqrt(dy));
      if (k > 0) {
        const double w0 = pow_lambda(eta_, t - static_cast<double>(k - 1) * dt);
        const double w1 = pow_lambda(eta_, t - tau);
        acc += 0.5 * dt * (w0 * prev_g + w1 * g);
      }
      prev_g = g;
    }
    return -acc;  // driver maximizes
  };

  // the nominal data always seed the search
  std::vector<double> seed(n + segs * mw);
  std::copy(chi_bar.begin(), chi_bar.end(), seed.begin());
  {
    std::vector<double> uv(model_.m());
    for (std::size_t s = 0; s < segs; ++s) {
      const std::int64_t k0 = static_cast<std::int64_t>(s * static_cast<std::size_t>(steps) / segs);
      u_bar.sample(static_cast<double>(k0) * dt, uv);
      std::copy(uv.begin(), uv.begin() + mw, seed.begin() + n + s * mw);
    }
  }

  MultistartOptions mo;
  mo.restarts = opts_.restarts;
  mo.seed = mix_seed(opts_.seed, static_cast<std::uint64_t>(steps));
  mo.evals_per_restart = opts_.evals_per_restart;
  mo.exec = opts_.exec;
  MultistartResult best = multistart_maximize(box, cost, mo, {seed});

  std::vector<double> chi_hat(best.x.begin(), best.x.begin() + n);
  std::vector<double> uvals(static_cast<std::size_t>(steps) * model_.m(), 0.0);
  for (std::int64_t k = 0; k < steps; ++k) {
    const std::size_t s = seg_of_step(k);
    for (std::size_t j = 0; j < mw; ++j)
      uvals[static_cast<std::size_t>(k) * model_.m() + j] = best.x[n + s * mw + j];
  }
  VectorSignal w_hat(model_.m(), dt, std::move(uvals));
  Trajectory traj = simulate(model_, chi_hat, w_hat, d, t, dt);
  out.xhat.assign(traj.state(traj.nodes() - 1).begin(), traj.state(traj.nodes() - 1).end());
  out.cost = -best.value;
  out.converged = best.best_converged;
  out.evals = best.total_evals;
  return out;
}

std::vector<double> FullInformationObserver::estimate(double t, std::span<const double> chi_bar,
                                                      const VectorSignal& u_bar, const VectorSignal& d,
                                                      const VectorSignal& y_bar, double dt) const {
  return estimate_detail(t, chi_bar, u_bar, d, y_bar, dt).xhat;
}

std::vector<double> FullInformationObserver::estimate_series(std::span<const double> chi_bar,
                                                             const VectorSignal& u_bar,
                                                             const VectorSignal& d,
                                                             const VectorSignal& y_bar, double T,
                                                             double dt) const {
  const std::int64_t steps = grid_count(T, dt);
  const std::size_t n = model_.n();
  std::vector<double> xs(static_cast<std::size_t>(steps + 1) * n);
  // queries at distinct times are independent; no state is carried over
  for (std::int64_t k = 0; k <= steps; ++k) {
    auto xhat = estimate(static_cast<double>(k) * dt, chi_bar, u_bar, d, y_bar, dt);
    std::copy(xhat.begin(), xhat.end(), xs.begin() + static_cast<std::size_t>(k) * n);
  }
  return xs;
}

std::unique_ptr<Observer> make_full_information(const SystemModel& model, FiWeights weights,
                                                double eta, FiOptions opts) {
  return std::make_unique<FullInformationObserver>(model, std::move(weights), eta, opts);
}

// -------- residuals --------

ResidualSeries rgas_residual(const SystemModel& model, const Observer& obs,
                             const RgasCertificate& cert, const ObserverScenario& sc, double T,
                             double dt) {
  cert.validate();
  if (sc.chi.size() != model.n() || sc.chi_bar.size() != model.n())
    throw std::invalid_argument("rgas_residual: state dimension mismatch");
  Trajectory truth = simulate(model, sc.chi, sc.u, sc.d, T, dt);
  const std::int64_t steps = grid_count(T, dt);
  const std::size_t p = model.p();

  VectorSignal y_bar = sc.y_bar ? *sc.y_bar : VectorSignal(p, dt, truth.outputs);
  if (y_bar.dim() != p) throw std::invalid_argument("rgas_residual: y_bar dimension mismatch");

  auto xhat = obs.estimate_series(sc.chi_bar, sc.u_bar, sc.d, y_bar, T, dt);

  const std::size_t n = model.n();
  std::vector<double> lhs(static_cast<std::size_t>(steps + 1)), g(static_cast<std::size_t>(steps + 1));
  std::vector<double> uv(model.m()), ubv(model.m()), ybv(p);
  for (std::int64_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    std::span<const double> x(truth.states.data() + static_cast<std::size_t>(k) * n, n);
    std::span<const double> xh(xhat.data() + static_cast<std::size_t>(k) * n, n);
    lhs[static_cast<std::size_t>(k)] = cert.beta(dist2(x, xh));
    sc.u.sample(t, uv);
    sc.u_bar.sample(t, ubv);
    y_bar.sample(t, ybv);
    g[static_cast<std::size_t>(k)] =
        cert.beta_u(dist2(uv, ubv)) + cert.beta_y(dist2(truth.output(static_cast<std::size_t>(k)), ybv));
  }
  const double head = cert.beta_x(dist2(sc.chi, sc.chi_bar));
  const double tol = 1e-3 * (1.0 + head);

  ResidualSeries rs;
  rs.times = truth.times;
  rs.lhs = lhs;
  rs.tol = tol;
  rs.rhs.resize(lhs.size());
  rs.residual.resize(lhs.size());
  DiscountedAccumulator acc(cert.eta);
  rs.max_residual = -std::numeric_limits<double>::infinity();
  double variation = 0.0, gmax = 0.0;
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    if (k > 0) {
      acc.advance(dt, g[k - 1], g[k]);
      variation += std::abs(g[k] - g[k - 1]);
    }
    gmax = std::max(gmax, g[k]);
    rs.rhs[k] = head * pow_lambda(cert.eta, rs.times[k]) + acc.value();
    rs.residual[k] = lhs[k] - rs.rhs[k];
    if (rs.residual[k] > rs.max_residual) {
      rs.max_residual = rs.residual[k];
      rs.argmax_time = rs.times[k];
    }
  }
  rs.err_model = 0.5 * dt * variation + dt * dt * gmax + 1e-14 * (1.0 + head);
  rs.holds = rs.max_residual <= tol;
  return rs;
}

NecessityResult derive_ioss_from_observer(const SystemModel& model, const Observer& obs,
                                          const RgasCertificate& cert,
                                          const TrajectoryPairScenario& sc) {
  cert.validate();
  // observer must reproduce trajectory 2 from its own data
  Trajectory t2 = simulate(model, sc.chi2, sc.u2, sc.d, sc.T, sc.dt);
  VectorSignal y2(model.p(), sc.dt, t2.outputs);
  auto xhat = obs.estimate_series(sc.chi2, sc.u2, sc.d, y2, sc.T, sc.dt);

  const std::size_t n = model.n();
  double mismatch = 0.0, xmax = 0.0;
  for (std::size_t k = 0; k < t2.nodes(); ++k) {
    std::span<const double> xh(xhat.data() + k * n, n);
    mismatch = std::max(mismatch, dist2(t2.state(k), xh));
    xmax = std::max(xmax, norm2(t2.state(k)));
  }
  const double threshold = 10.0 * sc.dt * sc.dt * (1.0 + xmax);
  if (mismatch > threshold) {
    std::ostringstream os;
    os << "derive_ioss_from_observer: consistency pre-check failed (mismatch " << mismatch
       << " > " << threshold << ")";
    throw std::runtime_error(os.str());
  }

  IossCertificate induced{cert.beta, cert.beta_x, cert.beta_u, cert.beta_y, cert.eta};
  NecessityResult out;
  out.consistency_mismatch = mismatch;
  out.consistency_threshold = threshold;
  out.induced = ioss_residual(model, induced, sc);
  return out;
}

void write_estimate_csv(const std::string& path, const Trajectory& truth,
                        const std::vector<double>& xhat_series, std::size_t n, double dt) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",xhat" << i;
  os << ",err_norm\n";
  char buf[32];
  const std::size_t nodes = xhat_series.size() / n;
  for (std::size_t k = 0; k < nodes; ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", static_cast<double>(k) * dt);
    os << buf;
    std::span<const double> xh(xhat_series.data() + k * n, n);
    for (double v : xh) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      os << "," << buf;
    }
    double err = 0.0;
    if (k < truth.nodes()) err = dist2(truth.state(k), xh);
    std::snprintf(buf, sizeof buf, "%.12g", err);
    os << "," << buf << "\n";
  }
}

}  // namespace detcert
