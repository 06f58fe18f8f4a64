#include "detcert/system.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "detcert/rng.hpp"

namespace detcert {

SystemModel::SystemModel(SystemDims dims, VecFn f, VecFn h, ComparisonFunction kappa1,
                         ComparisonFunction kappa2, Box state_box, Box u_box, Box d_box,
                         std::size_t noise_dim, std::optional<LinearParts> linear)
    : dims_(dims),
      f_(std::move(f)),
      h_(std::move(h)),
      kappa1_(std::move(kappa1)),
      kappa2_(std::move(kappa2)),
      state_box_(std::move(state_box)),
      u_box_(std::move(u_box)),
      d_box_(std::move(d_box)),
      noise_dim_(noise_dim),
      linear_(std::move(linear)) {
  if (dims_.n == 0 || dims_.m == 0 || dims_.q == 0 || dims_.p == 0)
    throw std::invalid_argument("SystemModel: all dimensions must be positive");
  if (state_box_.dim() != dims_.n || u_box_.dim() != dims_.m || d_box_.dim() != dims_.q)
    throw std::invalid_argument("SystemModel: box dimensions do not match");
  if (!state_box_.contains_zero() || !u_box_.contains_zero() || !d_box_.contains_zero())
    throw std::invalid_argument("SystemModel: every box must contain 0");
  if (noise_dim_ != 0 && noise_dim_ != dims_.p)
    throw std::invalid_argument("SystemModel: noise_dim must be 0 or equal to the output dimension");
  if (noise_dim_ > dims_.m) throw std::invalid_argument("SystemModel: noise_dim exceeds input dimension");
  if (!kappa2_.is_kinf()) throw std::invalid_argument("SystemModel: kappa2 must be class-Kinf");

  // equilibrium at the origin
  std::vector<double> x0(dims_.n, 0.0), u0(dims_.m, 0.0), d0(dims_.q, 0.0), out(dims_.n, 0.0);
  f_(x0, u0, d0, out);
  if (norm2(out) > 1e-12) throw std::invalid_argument("SystemModel: f(0,0,0) must vanish");

  if (linear_) {
    const std::size_t mw = dims_.m - noise_dim_;
    if (linear_->A.size() != dims_.n * dims_.n || linear_->Bw.size() != dims_.n * mw ||
        linear_->Bd.size() != dims_.n * dims_.q || linear_->C.size() != dims_.p * dims_.n)
      throw std::invalid_argument("SystemModel: linear part sizes do not match dims");
  }

  bihari_ = std::make_shared<const BihariSolver>(kappa1_);  // runs the divergence check
}

SystemModel SystemModel::with_moduli(ComparisonFunction kappa1, ComparisonFunction kappa2) const {
  return SystemModel(dims_, f_, h_, std::move(kappa1), std::move(kappa2), state_box_, u_box_, d_box_,
                     noise_dim_, linear_);
}

namespace {

void check_signal_fits(const char* what, const VectorSignal& sig, std::size_t dim, const Box& box,
                       double dt) {
  if (sig.dim() != dim) throw std::invalid_argument(std::string("simulate: ") + what + " dimension mismatch");
  const double ratio = sig.dt() / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
    throw std::invalid_argument(std::string("simulate: dt must divide the ") + what + " grid step");
  for (std::size_t k = 0; k < sig.knots(); ++k) {
    if (!box.contains(sig.knot(k), 1e-12))
      throw std::invalid_argument(std::string("simulate: ") + what + " value outside its box at knot " +
                                  std::to_string(k));
  }
}

}  // namespace

Trajectory simulate(const SystemModel& model, std::span<const double> chi, const VectorSignal& u,
                    const VectorSignal& d, double T, double dt) {
  const std::size_t n = model.n(), p = model.p();
  if (chi.size() != n) throw std::invalid_argument("simulate: initial state dimension mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument("simulate: T must be nonnegative");
  if (!model.state_box().contains(chi, 1e-12))
    throw std::invalid_argument("simulate: initial state outside the state box");
  check_signal_fits("u", u, model.m(), model.u_box(), dt);
  check_signal_fits("d", d, model.q(), model.d_box(), dt);
  const std::int64_t steps = grid_count(T, dt);

  Trajectory traj;
  traj.dt = dt;
  traj.n = n;
  traj.p = p;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve((static_cast<std::size_t>(steps) + 1) * n);
  traj.outputs.reserve((static_cast<std::size_t>(steps) + 1) * p);

  std::vector<double> x(chi.begin(), chi.end());
  std::vector<double> uval(model.m()), dval(model.q()), y(p);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), xs(n);

  for (std::int64_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    u.sample(t, uval);
    d.sample(t, dval);
    model.h(x, uval, dval, y);
    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), x.begin(), x.end());
    traj.outputs.insert(traj.outputs.end(), y.begin(), y.end());
    if (!traj.left_state_box_at && !model.state_box().contains(x, 1e-9)) traj.left_state_box_at = t;
    if (k == steps) break;

    // classical RK4, inputs held over the step (steps are knot-aligned)
    model.f(x, uval, dval, k1);
    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k1[i];
    model.f(xs, uval, dval, k2);
    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k2[i];
    model.f(xs, uval, dval, k3);
    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + dt * k3[i];
    model.f(xs, uval, dval, k4);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    if (!all_finite(x)) {
      std::ostringstream os;
      os << "simulate: non-finite state at t = " << (t + dt);
      throw SimulationBlowup(t + dt, os.str());
    }
  }
  return traj;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "t";
  for (std::size_t i = 0; i < traj.n; ++i) os << ",x" << i;
  for (std::size_t i = 0; i < traj.p; ++i) os << ",y" << i;
  os << "\n";
  char buf[32];
  for (std::size_t k = 0; k < traj.nodes(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", traj.times[k]);
    os << buf;
    for (double v : traj.state(k)) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      os << "," << buf;
    }
    for (double v : traj.output(k)) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      os << "," << buf;
    }
    os << "\n";
  }
}

namespace {

void draw_in_box(Rng& rng, const Box& box, std::optional<double> radius, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::isfinite(box.lo[i]) && std::isfinite(box.hi[i])) {
      out[i] = rng.uniform(box.lo[i], box.hi[i]);
    } else {
      if (!radius)
        throw std::invalid_argument("sampling an unbounded box requires a radius");
      out[i] = rng.gaussian(0.0, *radius);
      out[i] = std::clamp(out[i], box.lo[i], box.hi[i]);
    }
  }
}

}  // namespace

AuditReport audit_increment_bounds(const SystemModel& model, std::size_t sample_count,
                                   std::uint64_t seed, std::optional<double> radius, par::Exec exec) {
  if (sample_count == 0) throw std::invalid_argument("audit: sample_count must be positive");
  if (!radius &&
      (!model.state_box().bounded() || !model.u_box().bounded() || !model.d_box().bounded()))
    throw std::invalid_argument("audit: unbounded boxes require a sampling radius");
  const std::size_t n = model.n(), m = model.m(), q = model.q(), p = model.p();
  const std::size_t zdim = n + m + q;

  // ratio per sample; NaN marks a kappa1 zero on a nonzero difference,
  // -inf marks a skipped identical pair
  std::vector<double> rf(sample_count), rh(sample_count);
  constexpr double kSkip = -std::numeric_limits<double>::infinity();

  par::for_each_index(sample_count, exec, [&](std::size_t i) {
    Rng rng(stream_seed(seed, i));
    std::vector<double> xa(n), ua(m), da(q), xb(n), ub(m), db(q);
    std::vector<double> fa(n), fb(n), ha(p), hb(p);
    draw_in_box(rng, model.state_box(), radius, xa);
    draw_in_box(rng, model.u_box(), radius, ua);
    draw_in_box(rng, model.d_box(), radius, da);
    draw_in_box(rng, model.state_box(), radius, xb);
    draw_in_box(rng, model.u_box(), radius, ub);
    draw_in_box(rng, model.d_box(), radius, db);

    double dist = 0.0;
    for (std::size_t j = 0; j < n; ++j) dist += (xa[j] - xb[j]) * (xa[j] - xb[j]);
    for (std::size_t j = 0; j < m; ++j) dist += (ua[j] - ub[j]) * (ua[j] - ub[j]);
    for (std::size_t j = 0; j < q; ++j) dist += (da[j] - db[j]) * (da[j] - db[j]);
    dist = std::sqrt(dist);
    if (dist == 0.0) {
      rf[i] = kSkip;
    } else {
      const double k1v = model.kappa1()(dist);
      model.f(xa, ua, da, fa);
      model.f(xb, ub, db, fb);
      rf[i] = k1v > 0.0 ? dist2(fa, fb) / k1v : std::numeric_limits<double>::quiet_NaN();
    }

    // output audit shares d between the two points
    double dist_h = 0.0;
    for (std::size_t j = 0; j < n; ++j) dist_h += (xa[j] - xb[j]) * (xa[j] - xb[j]);
    for (std::size_t j = 0; j < m; ++j) dist_h += (ua[j] - ub[j]) * (ua[j] - ub[j]);
    dist_h = std::sqrt(dist_h);
    if (dist_h == 0.0) {
      rh[i] = kSkip;
    } else {
      model.h(xa, ua, da, ha);
      model.h(xb, ub, da, hb);
      rh[i] = dist2(ha, hb) / model.kappa2()(dist_h);
    }
    (void)zdim;
  });

  AuditReport rep;
  rep.samples = sample_count;
  std::size_t arg_f = sample_count, arg_h = sample_count;
  for (std::size_t i = 0; i < sample_count; ++i) {
    if (std::isnan(rf[i]))
      throw std::runtime_error("audit: kappa1 evaluates to zero on a nonzero difference");
    if (rf[i] == kSkip) {
      ++rep.skipped;
    } else if (rf[i] > rep.max_f_ratio) {
      rep.max_f_ratio = rf[i];
      arg_f = i;
    }
    if (rh[i] != kSkip && rh[i] > rep.max_h_ratio) {
      rep.max_h_ratio = rh[i];
      arg_h = i;
    }
  }
  rep.pass = rep.max_f_ratio <= 1.0 + 1e-9 && rep.max_h_ratio <= 1.0 + 1e-9;

  auto rebuild = [&](std::size_t i, std::vector<double>& a, std::vector<double>& b) {
    Rng rng(stream_seed(seed, i));
    std::vector<double> xa(n), ua(m), da(q), xb(n), ub(m), db(q);
    draw_in_box(rng, model.state_box(), radius, xa);
    draw_in_box(rng, model.u_box(), radius, ua);
    draw_in_box(rng, model.d_box(), radius, da);
    draw_in_box(rng, model.state_box(), radius, xb);
    draw_in_box(rng, model.u_box(), radius, ub);
    draw_in_box(rng, model.d_box(), radius, db);
    a.clear();
    b.clear();
    a.insert(a.end(), xa.begin(), xa.end());
    a.insert(a.end(), ua.begin(), ua.end());
    a.insert(a.end(), da.begin(), da.end());
    b.insert(b.end(), xb.begin(), xb.end());
    b.insert(b.end(), ub.begin(), ub.end());
    b.insert(b.end(), db.begin(), db.end());
  };
  if (arg_f < sample_count) rebuild(arg_f, rep.f_witness_a, rep.f_witness_b);
  if (arg_h < sample_count) rebuild(arg_h, rep.h_witness_a, rep.h_witness_b);
  return rep;
}

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key, double dflt) {
  auto it = params.find(key);
  return it == params.end() ? dflt : it->second;
}

std::string normalize_name(std::string name) {
  std::string out;
  for (char c : name)
    if (c != '\'' && c != '`') out.push_back(c);
  // strip a typographic apostrophe (UTF-8 E2 80 99)
  std::string cleaned;
  for (std::size_t i = 0; i < out.size();) {
    if (i + 2 < out.size() && static_cast<unsigned char>(out[i]) == 0xE2 &&
        static_cast<unsigned char>(out[i + 1]) == 0x80 &&
        static_cast<unsigned char>(out[i + 2]) == 0x99) {
      i += 3;
      continue;
    }
    cleaned.push_back(out[i]);
    ++i;
  }
  return cleaned;
}

}  // namespace

std::vector<std::string> registry_names() {
  return {"linear_scalar", "linear_2d_detectable", "unstable_unobservable", "lure_saturated"};
}

SystemModel registry_get(const std::string& raw_name, const std::map<std::string, double>& params) {
  const std::string name = normalize_name(raw_name);
  if (name == "linear_scalar") {
    const double a = get_param(params, "a", -1.0);
    const double c = get_param(params, "c", 1.0);
    VecFn f = [a](std::span<const double> x, std::span<const double> u, std::span<const double>,
                  std::span<double> out) { out[0] = a * x[0] + u[0]; };
    VecFn h = [c](std::span<const double> x, std::span<const double> u, std::span<const double>,
                  std::span<double> out) { out[0] = c * x[0] + u[1]; };
    LinearParts lin{{a}, {1.0}, {0.0}, {c}};
    return SystemModel({1, 2, 1, 1}, std::move(f), std::move(h),
                       ComparisonFunction::power_law(std::hypot(a, 1.0), 1.0),
                       ComparisonFunction::power_law(std::hypot(c, 1.0), 1.0),
                       Box::cube(1, -2.0, 2.0), Box::cube(2, -1.0, 1.0), Box::cube(1, -1.0, 1.0),
                       /*noise_dim=*/1, lin);
  }
  if (name == "linear_2d_detectable") {
    VecFn f = [](std::span<const double> x, std::span<const double> u, std::span<const double>,
                 std::span<double> out) {
      out[0] = -x[0] + x[1];
      out[1] = -x[1] + u[0];
    };
    VecFn h = [](std::span<const double> x, std::span<const double> u, std::span<const double>,
                 std::span<double> out) { out[0] = x[0] + u[1]; };
    LinearParts lin{{-1.0, 1.0, 0.0, -1.0}, {0.0, 1.0}, {0.0, 0.0}, {1.0, 0.0}};
    return SystemModel({2, 2, 1, 1}, std::move(f), std::move(h),
                       ComparisonFunction::power_law(std::sqrt(3.0), 1.0),
                       ComparisonFunction::power_law(std::sqrt(2.0), 1.0),
                       Box::cube(2, -2.0, 2.0), Box::cube(2, -1.0, 1.0), Box::cube(1, -1.0, 1.0),
                       /*noise_dim=*/1, lin);
  }
  if (name == "unstable_unobservable") {
    VecFn f = [](std::span<const double> x, std::span<const double> u, std::span<const double>,
                 std::span<double> out) { out[0] = x[0] + u[0]; };
    VecFn h = [](std::span<const double>, std::span<const double>, std::span<const double>,
                 std::span<double> out) { out[0] = 0.0; };
    LinearParts lin{{1.0}, {1.0}, {0.0}, {0.0}};
    return SystemModel({1, 1, 1, 1}, std::move(f), std::move(h),
                       ComparisonFunction::power_law(2.0, 1.0), ComparisonFunction::identity(),
                       Box::cube(1, -2.0, 2.0), Box::cube(1, -1.0, 1.0), Box::cube(1, -1.0, 1.0),
                       /*noise_dim=*/0, lin);
  }
  if (name == "lure_saturated") {
    VecFn f = [](std::span<const double> x, std::span<const double> u, std::span<const double>,
                 std::span<double> out) { out[0] = -x[0] + std::tanh(x[0]) + u[0]; };
    VecFn h = [](std::span<const double> x, std::span<const double>, std::span<const double>,
                 std::span<double> out) { out[0] = x[0]; };
    return SystemModel({1, 1, 1, 1}, std::move(f), std::move(h),
                       ComparisonFunction::power_law(std::sqrt(2.0), 1.0),
                       ComparisonFunction::identity(), Box::cube(1, -2.0, 2.0),
                       Box::cube(1, -1.0, 1.0), Box::cube(1, -1.0, 1.0),
                       /*noise_dim=*/0, std::nullopt);
  }
  std::ostringstream os;
  os << "unknown registry model '" << raw_name << "'; known:";
  for (const auto& s : registry_names()) os << " " << s;
  throw std::invalid_argument(os.str());
}

}  // namespace detcert
