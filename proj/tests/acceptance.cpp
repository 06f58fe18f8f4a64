// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Expected values come from closed forms or from the
// independent oracles in oracles.hpp; every tolerance is pinned here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "detcert/detectability.hpp"
#include "detcert/observer.hpp"
#include "detcert/parallel.hpp"
#include "detcert/rng.hpp"
#include "detcert/system.hpp"
#include "oracles.hpp"

using namespace detcert;

namespace {

int g_failures = 0;

struct Criterion {
  std::string notes;
  bool ok = true;

  void require(bool cond, const std::string& why) {
    if (!cond) {
      ok = false;
      if (!notes.empty()) notes += "; ";
      notes += why;
    }
  }
};

void run_criterion(int index, const char* title, double time_limit_s,
                   const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& ex) {
    c.require(false, std::string("exception: ") + ex.what());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0.0 && elapsed >= time_limit_s) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "runtime %.2fs exceeds %.0fs", elapsed, time_limit_s);
    c.require(false, buf);
  }
  std::printf("[%s] criterion %2d: %s (%.2fs)%s%s\n", c.ok ? "PASS" : "FAIL", index, title, elapsed,
              c.notes.empty() ? "" : " -- ", c.notes.c_str());
  std::fflush(stdout);
  if (!c.ok) ++g_failures;
}

IossCertificate scalar_cert() {
  return IossCertificate{ComparisonFunction::power_law(1, 2), ComparisonFunction::power_law(1, 2),
                         ComparisonFunction::power_law(2, 2), ComparisonFunction::power_law(1, 2),
                         std::exp(-1.0)};
}

RgasCertificate luenberger_cert() {
  return RgasCertificate{ComparisonFunction::identity(), ComparisonFunction::identity(),
                         ComparisonFunction::power_law(2.0 * std::sqrt(2.0), 1.0),
                         ComparisonFunction::identity(), std::exp(-2.0)};
}

}  // namespace

int main() {
  // 1. linear-modulus specialization of the trajectory-difference envelope
  run_criterion(1, "linear-modulus envelope equals c*e^(3t) (rel 1e-4)", 1.0, [](Criterion& c) {
    BihariSolver solver(ComparisonFunction::identity());
    const double v0 = solver.bound(0.5, 1.0);
    c.require(std::abs(v0 - 0.5 * std::exp(3.0)) <= 1e-4 * 0.5 * std::exp(3.0),
              "bound(0.5, 1) off");
    Rng rng(101);
    for (int k = 0; k < 20; ++k) {
      const double cc = rng.uniform(0.05, 3.0);
      const double tt = rng.uniform(0.0, 2.0);
      const double expect = cc * std::exp(3.0 * tt);
      if (std::abs(solver.bound(cc, tt) - expect) > 1e-4 * expect) {
        c.require(false, "sweep pair failed at c=" + std::to_string(cc) + " t=" + std::to_string(tt));
        break;
      }
    }
  });

  // 2. envelope equals the saturating comparison dynamics for s*ln(1+s)
  run_criterion(2, "envelope matches the comparison ODE for s*ln(1+s) (rel 1e-3)", 10.0,
                [](Criterion& c) {
                  BihariSolver solver(ComparisonFunction::log_affine(1));
                  const double pairs[10][2] = {{0.1, 2.0}, {0.3, 1.5},  {0.5, 1.25}, {1.0, 1.0},
                                               {2.0, 1.0}, {2.0, 0.25}, {2.0, 0.0},  {0.1, 0.5},
                                               {0.7, 0.8}, {1.5, 0.6}};
                  for (const auto& p : pairs) {
                    const double got = solver.bound(p[0], p[1]);
                    const double expect = oracles::logaffine_comparison_ode(p[0], p[1], 1e-10);
                    if (std::abs(got - expect) > 1e-3 * std::max(std::abs(expect), 1e-12)) {
                      c.require(false, "pair c=" + std::to_string(p[0]) + " t=" +
                                           std::to_string(p[1]) + " got " + std::to_string(got) +
                                           " want " + std::to_string(expect));
                      break;
                    }
                  }
                });

  // 3. trajectory differences stay inside the envelope on every registry model
  run_criterion(3, "difference envelope on 4x200 seeded scenario pairs", 60.0, [](Criterion& c) {
    const auto names = registry_names();
    for (std::size_t im = 0; im < names.size(); ++im) {
      const std::string& name = names[im];
      SystemModel m = registry_get(name);
      const BihariSolver& solver = m.bihari();
      const double T = 1.5, dt = T / 300.0, sig_dt = T / 4.0;
      std::vector<int> bad(200, 0);
      par::for_each_index(200, par::Exec::Parallel, [&](std::size_t i) {
        try {
          Rng rng(stream_seed(7000 + 1000 * static_cast<std::uint64_t>(im), i));
          auto draw_state = [&](std::vector<double>& chi) {
            chi.resize(m.n());
            for (std::size_t j = 0; j < m.n(); ++j)
              chi[j] = rng.uniform(m.state_box().lo[j], m.state_box().hi[j]);
          };
          auto draw_sig = [&](std::size_t dim, const Box& box) {
            std::vector<double> vals(dim * 4);
            for (std::size_t k = 0; k < vals.size(); ++k)
              vals[k] = rng.uniform(box.lo[k % dim], box.hi[k % dim]);
            return VectorSignal(dim, sig_dt, std::move(vals));
          };
          std::vector<double> chi1, chi2;
          draw_state(chi1);
          draw_state(chi2);
          VectorSignal u1 = draw_sig(m.m(), m.u_box());
          VectorSignal u2 = draw_sig(m.m(), m.u_box());
          VectorSignal d1 = draw_sig(m.q(), m.d_box());
          VectorSignal d2 = draw_sig(m.q(), m.d_box());
          Trajectory t1 = simulate(m, chi1, u1, d1, T, dt);
          Trajectory t2 = simulate(m, chi2, u2, d2, T, dt);
          const double cc = dist2(chi1, chi2) +
                            T * m.kappa1()(3.0 * sup_norm(signal_sub(u1, u2), 0.0, T)) +
                            T * m.kappa1()(3.0 * sup_norm(signal_sub(d1, d2), 0.0, T));
          auto curve = solver.bound_curve(cc, t1.times);
          for (std::size_t k = 0; k < t1.nodes(); ++k)
            if (dist2(t1.state(k), t2.state(k)) > (1.0 + 1e-6) * curve[k]) bad[i] = 1;
        } catch (...) {
          bad[i] = 2;
        }
      });
      for (int b : bad)
        if (b != 0) c.require(false, name + (b == 1 ? ": envelope violated" : ": exception"));
    }
  });

  // shared scenario family for criteria 4 and 5
  SystemModel scalar = registry_get("linear_scalar", {{"a", -1.0}, {"c", 1.0}});
  ScenarioSampler sampler100{2.0, 1e-3, 4, 20240, {}};
  std::vector<TrajectoryPairScenario> family;
  for (std::uint64_t i = 0; i < 100; ++i) family.push_back(sample_scenario(scalar, sampler100, i));

  // 4. quadratic energy function dissipation on the scalar model
  run_criterion(4, "dissipation golden case on 100 scenarios (tol 1e-3 scaled)", 60.0,
                [&](Criterion& c) {
                  LyapCertificate cert = LyapCertificate::quadratic(
                      {1.0}, 1, ComparisonFunction::power_law(1, 2),
                      ComparisonFunction::power_law(1, 2), std::exp(-1.0));
                  std::vector<int> bad(family.size(), 0);
                  par::for_each_index(family.size(), par::Exec::Parallel, [&](std::size_t i) {
                    try {
                      ResidualSeries rs = lyap_residual(scalar, cert, family[i]);
                      const double head = cert.U(family[i].chi1, family[i].chi2);
                      if (rs.max_residual > 1e-3 * (1.0 + head)) bad[i] = 1;
                      if (rs.max_sandwich_violation != 0.0) bad[i] = 3;
                    } catch (...) {
                      bad[i] = 2;
                    }
                  });
                  for (std::size_t i = 0; i < bad.size(); ++i) {
                    if (bad[i] == 1) c.require(false, "residual above tolerance at scenario " + std::to_string(i));
                    if (bad[i] == 2) c.require(false, "exception at scenario " + std::to_string(i));
                    if (bad[i] == 3) c.require(false, "sandwich violated at scenario " + std::to_string(i));
                  }
                });

  // 5. the sandwich transform of the dissipation certificate passes the
  //    two-trajectory inequality on the same family, zero exceptions
  run_criterion(5, "transformed certificate passes on the same 100 scenarios", 60.0,
                [&](Criterion& c) {
                  LyapCertificate lc = LyapCertificate::quadratic(
                      {1.0}, 1, ComparisonFunction::power_law(1, 2),
                      ComparisonFunction::power_law(1, 2), std::exp(-1.0));
                  IossCertificate ic = certificate_from_lyapunov(lc);
                  std::vector<int> bad(family.size(), 0);
                  par::for_each_index(family.size(), par::Exec::Parallel, [&](std::size_t i) {
                    try {
                      ResidualSeries rs = ioss_residual(scalar, ic, family[i]);
                      const double head = ic.alpha_x(dist2(family[i].chi1, family[i].chi2));
                      if (rs.max_residual > 1e-3 * (1.0 + head)) bad[i] = 1;
                    } catch (...) {
                      bad[i] = 2;
                    }
                  });
                  for (std::size_t i = 0; i < bad.size(); ++i)
                    if (bad[i] != 0)
                      c.require(false, "scenario " + std::to_string(i) +
                                           (bad[i] == 1 ? ": residual above tolerance" : ": exception"));
                });

  // 6. the designed counterexample is found and re-verified on a finer grid
  run_criterion(6, "falsifier defeats the undetectable model (residual >= 5)", 60.0,
                [](Criterion& c) {
                  SystemModel m = registry_get("unstable_unobservable");
                  IossCertificate cert{ComparisonFunction::identity(), ComparisonFunction::identity(),
                                       ComparisonFunction::identity(), ComparisonFunction::identity(),
                                       0.5};
                  FalsifySearch search;
                  search.restarts = 10;
                  search.segments = 4;
                  search.horizon = 2.0;
                  search.seed = 90210;
                  search.budget = 6000;
                  FalsifyResult res = falsify(m, cert, search);
                  c.require(res.violation, "no certified violation");
                  c.require(res.best.max_residual >= 5.0, "residual below 5");
                  c.require(res.refined_max > res.best.tol, "refined grid did not confirm");
                });

  // 7. candidate estimate bracketed by alpha and alpha_x; monotone in budget
  run_criterion(7, "candidate estimate bracket on 10 pairs + nested budgets", 120.0,
                [&](Criterion& c) {
                  IossCertificate cert = scalar_cert();
                  LyapEstimateSearch search;
                  search.restarts = 5;
                  search.segments = 4;
                  search.t_max = 3.0;
                  search.seed = 3111;
                  search.evals_per_restart = 220;
                  Rng rng(6);
                  for (int k = 0; k < 10; ++k) {
                    const double gap = 0.1 + (2.0 - 0.1) * k / 9.0;
                    const double center = rng.uniform(-0.5, 0.5);
                    std::vector<double> chi1{center + gap / 2.0}, chi2{center - gap / 2.0};
                    LyapEstimate est = estimate_lyap_candidate(scalar, cert, chi1, chi2, search);
                    const double lo = cert.alpha(gap), hi = cert.alpha_x(gap);
                    if (est.value < lo * (1.0 - 1e-6) || est.value > hi * (1.0 + 1e-3)) {
                      c.require(false, "bracket failed at gap " + std::to_string(gap) + ": " +
                                           std::to_string(est.value));
                      break;
                    }
                  }
                  std::vector<double> chi1{0.8}, chi2{-0.4};
                  double prev = -1.0;
                  for (std::size_t r : {2u, 5u, 9u}) {
                    LyapEstimateSearch nested = search;
                    nested.restarts = r;
                    const double v = estimate_lyap_candidate(scalar, cert, chi1, chi2, nested).value;
                    c.require(v >= prev, "estimate decreased under a larger budget");
                    prev = v;
                  }
                });

  // 8. scalar observer with the derived certificate, including transformed
  //    measurements with sup-norm <= 0.1
  run_criterion(8, "observer bound golden case on 50 scenarios", 60.0, [&](Criterion& c) {
    auto obs = make_luenberger(scalar, {1.0});
    RgasCertificate cert = luenberger_cert();
    const double T = 2.0, dt = 1e-3;
    std::vector<int> bad(50, 0);
    par::for_each_index(50, par::Exec::Parallel, [&](std::size_t i) {
      try {
        Rng rng(stream_seed(88, i));
        auto draw_sig = [&](std::size_t dim, const Box& box, double sig_dt, std::size_t knots) {
          std::vector<double> vals(dim * knots);
          for (std::size_t k = 0; k < vals.size(); ++k)
            vals[k] = rng.uniform(box.lo[k % dim], box.hi[k % dim]);
          return VectorSignal(dim, sig_dt, std::move(vals));
        };
        ObserverScenario sc;
        sc.chi = {rng.uniform(-2.0, 2.0)};
        sc.chi_bar = {rng.uniform(-2.0, 2.0)};
        sc.u = draw_sig(2, scalar.u_box(), T / 4.0, 4);
        sc.u_bar = draw_sig(2, scalar.u_box(), T / 4.0, 4);
        sc.d = draw_sig(1, scalar.d_box(), T / 4.0, 4);
        Trajectory truth = simulate(scalar, sc.chi, sc.u, sc.d, T, dt);
        VectorSignal delta = draw_sig(1, Box::cube(1, -0.1, 0.1), T / 5.0, 5);
        std::vector<double> vals = truth.outputs;
        for (std::size_t k = 0; k < truth.nodes(); ++k) vals[k] += delta.sample(truth.times[k])[0];
        sc.y_bar = VectorSignal(1, dt, std::move(vals));
        ResidualSeries rs = rgas_residual(scalar, *obs, cert, sc, T, dt);
        if (rs.max_residual > 1e-3 * (1.0 + cert.beta_x(dist2(sc.chi, sc.chi_bar)))) bad[i] = 1;
      } catch (...) {
        bad[i] = 2;
      }
    });
    for (std::size_t i = 0; i < bad.size(); ++i)
      if (bad[i] != 0)
        c.require(false, "scenario " + std::to_string(i) +
                             (bad[i] == 1 ? ": residual above tolerance" : ": exception"));
  });

  // 9. reconstruction-based chain: consistency then the induced certificate
  run_criterion(9, "observer-to-detectability chain on 50 pairs", 60.0, [&](Criterion& c) {
    auto obs = make_luenberger(scalar, {1.0});
    RgasCertificate cert = luenberger_cert();
    ScenarioSampler sampler{2.0, 1e-3, 4, 31337, {}};
    std::vector<int> bad(50, 0);
    std::vector<double> mismatches(50, 0.0);
    par::for_each_index(50, par::Exec::Parallel, [&](std::size_t i) {
      try {
        TrajectoryPairScenario sc = sample_scenario(scalar, sampler, i);
        NecessityResult res = derive_ioss_from_observer(scalar, *obs, cert, sc);
        mismatches[i] = res.consistency_mismatch;
        if (res.consistency_mismatch > 1e-6) bad[i] = 1;
        if (!res.induced.holds) bad[i] = 3;
      } catch (...) {
        bad[i] = 2;
      }
    });
    for (std::size_t i = 0; i < bad.size(); ++i) {
      if (bad[i] == 1) c.require(false, "consistency mismatch " + std::to_string(mismatches[i]));
      if (bad[i] == 2) c.require(false, "exception at pair " + std::to_string(i));
      if (bad[i] == 3) c.require(false, "induced residual failed at pair " + std::to_string(i));
    }
  });

  // 10. infrastructure invariants
  run_criterion(10, "semigroup, signal algebra, RK4 order, seeded reruns", 60.0, [&](Criterion& c) {
    // discounted-integral semigroup identity, 1e-12 relative
    Rng rng(424242);
    for (int rep = 0; rep < 50; ++rep) {
      const double dt = rng.uniform(0.01, 0.2);
      const double lambda = rng.uniform(0.05, 0.95);
      const std::size_t steps = 10 + rng.next_u64() % 60;
      std::vector<double> g(steps + 1);
      for (auto& v : g) v = rng.uniform(0.0, 5.0);
      const std::size_t cut = 1 + rng.next_u64() % (steps - 1);
      const double t1 = cut * dt, t2 = steps * dt;
      const double full = discounted_integral(g, dt, lambda, t2);
      DiscountedAccumulator acc(lambda);
      for (std::size_t k = cut; k < steps; ++k) acc.advance(dt, g[k], g[k + 1]);
      const double stitched =
          pow_lambda(lambda, t2 - t1) * discounted_integral(g, dt, lambda, t1) + acc.value();
      if (std::abs(stitched - full) > 1e-12 * std::max(1.0, std::abs(full))) {
        c.require(false, "semigroup identity violated");
        break;
      }
    }

    // splice/truncation algebra
    for (int rep = 0; rep < 30; ++rep) {
      std::vector<double> hv(4), tv(3);
      for (auto& v : hv) v = rng.uniform(-2, 2);
      for (auto& v : tv) v = rng.uniform(-2, 2);
      VectorSignal head(1, 0.25, hv), tail(1, 0.25, tv);
      const double t = 0.25 * static_cast<double>(rng.next_u64() % 7);
      VectorSignal lhs = truncate(concat(tail, head, t), t);
      VectorSignal rhs = truncate(head, t);
      if (lhs.knots() != rhs.knots() || lhs.values() != rhs.values()) {
        c.require(false, "prefix law violated");
        break;
      }
      const double a = 0.25 * static_cast<double>(rng.next_u64() % 7);
      const double b = 0.25 * static_cast<double>(rng.next_u64() % 7);
      VectorSignal l2 = truncate(truncate(head, a), b);
      VectorSignal r2 = truncate(head, std::min(a, b));
      if (l2.values() != r2.values()) {
        c.require(false, "truncation composition law violated");
        break;
      }
    }

    // measured RK4 order on the scalar model
    {
      std::vector<double> chi{1.0};
      auto err_at = [&](double dt) {
        Trajectory tr = simulate(scalar, chi, VectorSignal(2, dt), VectorSignal(1, dt), 1.0, dt);
        return std::abs(tr.state(tr.nodes() - 1)[0] - std::exp(-1.0));
      };
      const double p = std::log2(err_at(0.1) / err_at(0.05));
      c.require(p >= 3.5 && p <= 4.5, "measured RK4 order " + std::to_string(p));
    }

    // bit-identical reruns under a fixed seed
    {
      SystemModel m = registry_get("unstable_unobservable");
      IossCertificate cert{ComparisonFunction::identity(), ComparisonFunction::identity(),
                           ComparisonFunction::identity(), ComparisonFunction::identity(), 0.5};
      FalsifySearch search;
      search.restarts = 4;
      search.budget = 2400;
      search.seed = 5150;
      FalsifyResult a = falsify(m, cert, search);
      FalsifyResult b = falsify(m, cert, search);
      c.require(a.best.max_residual == b.best.max_residual && a.witness.chi1 == b.witness.chi1 &&
                    a.witness.u1.values() == b.witness.u1.values(),
                "falsifier rerun differs");
      AuditReport ra = audit_increment_bounds(m, 30000, 99);
      AuditReport rb = audit_increment_bounds(m, 30000, 99);
      c.require(ra.max_f_ratio == rb.max_f_ratio && ra.f_witness_a == rb.f_witness_a,
                "audit rerun differs");
      std::vector<double> chi0{0.5};
      Trajectory ta = simulate(scalar, chi0, VectorSignal(2, 1e-3), VectorSignal(1, 1e-3), 1.0, 1e-3);
      Trajectory tb = simulate(scalar, chi0, VectorSignal(2, 1e-3), VectorSignal(1, 1e-3), 1.0, 1e-3);
      c.require(ta.states == tb.states, "simulation rerun differs");
    }
  });

  std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              g_failures);
  return g_failures;
}
