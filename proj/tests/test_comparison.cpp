#include <cmath>
#include <thread>

#include "doctest.h"

#include "detcert/comparison.hpp"
#include "oracles.hpp"

using namespace detcert;

TEST_CASE("eval: parametric variants") {
  CHECK(ComparisonFunction::power_law(2, 2)(3.0) == doctest::Approx(18.0));
  CHECK(ComparisonFunction::power_law(2, 2)(0.0) == 0.0);
  CHECK(ComparisonFunction::log_affine(1)(0.0) == 0.0);
  CHECK(ComparisonFunction::log_affine(1)(std::exp(1.0) - 1.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(ComparisonFunction::identity()(-1.0), std::invalid_argument);
}

TEST_CASE("eval: sum and tabulated variants") {
  auto sum = ComparisonFunction::scaled_sum(
      {ComparisonFunction::identity(), ComparisonFunction::power_law(1, 2)}, {2.0, 1.0});
  CHECK(sum(3.0) == doctest::Approx(2.0 * 3.0 + 9.0));
  CHECK(sum(0.0) == 0.0);

  auto tab = ComparisonFunction::tabulated({0.0, 1.0, 2.0}, {0.0, 2.0, 3.0}, 1.0);
  CHECK(tab(0.5) == doctest::Approx(1.0));
  CHECK(tab(1.5) == doctest::Approx(2.5));
  CHECK(tab(4.0) == doctest::Approx(6.0));  // power tail from (2,3)
  CHECK(tab.is_kinf());
  CHECK_THROWS_AS(ComparisonFunction::tabulated({0.5, 1.0}, {0.0, 1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("inverse: closed form, zero, log-affine round trip") {
  CHECK(ComparisonFunction::power_law(1, 2).inverse(9.0) == doctest::Approx(3.0));
  CHECK(ComparisonFunction::identity().inverse(0.0) == 0.0);
  const double v = (std::exp(1.0) - 1.0) * 1.0;
  CHECK(ComparisonFunction::log_affine(1).inverse(v) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-8));
}

TEST_CASE("inverse: forward round trip on [1e-6, 1e6] for K-infinity variants") {
  std::vector<ComparisonFunction> fns{
      ComparisonFunction::identity(), ComparisonFunction::power_law(2.5, 1.7),
      ComparisonFunction::log_affine(0.8),
      ComparisonFunction::scaled_sum(
          {ComparisonFunction::power_law(1, 0.5), ComparisonFunction::log_affine(1)}, {1.0, 0.5}),
      ComparisonFunction::tabulated({0, 0.5, 1, 10}, {0, 0.2, 1, 40}, 1.3)};
  for (const auto& f : fns) {
    for (double e = -6; e <= 6; e += 1.0) {
      const double s = std::pow(10.0, e);
      const double v = f(s);
      const double s_back = f.inverse(v);
      CHECK(f(s_back) == doctest::Approx(v).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(ComparisonFunction::tabulated({0, 1}, {0, 1}, 0.0).inverse(2.0),
                  std::invalid_argument);
}

TEST_CASE("divergence check: analytic rules") {
  auto rep_id = osgood_check(ComparisonFunction::identity());
  CHECK(rep_id.divergent_at_zero);
  CHECK(rep_id.divergent_at_infinity);
  CHECK(rep_id.method == OsgoodReport::Method::Analytic);

  auto rep_log = osgood_check(ComparisonFunction::log_affine(1));
  CHECK(rep_log.divergent_at_zero);
  CHECK(rep_log.divergent_at_infinity);

  // quadratic growth: int_1^inf ds/(9 s^2) = 1/9 finite
  auto rep_sq = osgood_check(ComparisonFunction::power_law(1, 2));
  CHECK(rep_sq.divergent_at_zero);
  CHECK_FALSE(rep_sq.divergent_at_infinity);
  CHECK_FALSE(rep_sq.satisfied());

  // sublinear growth: the zero-side integral converges
  auto rep_sqrt = osgood_check(ComparisonFunction::power_law(1, 0.5));
  CHECK_FALSE(rep_sqrt.divergent_at_zero);
  CHECK(rep_sqrt.divergent_at_infinity);

  // sum diverges at an end iff every term does
  auto rep_sum = osgood_check(ComparisonFunction::scaled_sum(
      {ComparisonFunction::identity(), ComparisonFunction::power_law(1, 2)}, {1.0, 1.0}));
  CHECK(rep_sum.divergent_at_zero);
  CHECK_FALSE(rep_sum.divergent_at_infinity);
}

TEST_CASE("divergence check: numeric heuristic on tabulated variants") {
  // piecewise-linear identity with linear tail: divergent at both ends
  auto tab_id = ComparisonFunction::tabulated({0, 1, 2}, {0, 1, 2}, 1.0);
  auto rep = osgood_check(tab_id);
  CHECK(rep.method == OsgoodReport::Method::NumericHeuristic);
  CHECK(rep.divergent_at_zero);
  CHECK(rep.divergent_at_infinity);
  CHECK(rep.evidence_zero.size() == 7);
  CHECK(rep.evidence_infinity.size() == 7);

  // quadratic tail: convergent at infinity
  auto tab_sq = ComparisonFunction::tabulated({0, 1, 2}, {0, 1, 4}, 2.0);
  auto rep2 = osgood_check(tab_sq);
  CHECK(rep2.divergent_at_zero);
  CHECK_FALSE(rep2.divergent_at_infinity);

  // flat plateau above zero: kappa1 vanishes nowhere, but a zero plateau at
  // the origin (v1 = 0) is rejected outright
  CHECK_THROWS_AS(osgood_check(ComparisonFunction::tabulated({0, 1, 2}, {0, 0, 1}, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("G integral: identity closed form") {
  BihariSolver solver(ComparisonFunction::identity());
  CHECK(solver.G(std::exp(3.0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(solver.G(1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(solver.G(std::exp(-3.0)) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(osgood_G(ComparisonFunction::identity(), std::exp(3.0)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bihari bound: identity closed form and zero case") {
  BihariSolver solver(ComparisonFunction::identity());
  CHECK(solver.bound(0.5, 1.0) == doctest::Approx(0.5 * std::exp(3.0)).epsilon(1e-6));
  CHECK(solver.bound(0.0, 5.0) == 0.0);
  CHECK(solver.bound(0.7, 0.0) == doctest::Approx(0.7).epsilon(1e-9));
  CHECK_THROWS_AS(bihari_bound(ComparisonFunction::power_law(1, 2), 0.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("bihari bound: log-affine matches the comparison ODE") {
  BihariSolver solver(ComparisonFunction::log_affine(1));
  const double c = 0.3, t = 0.5;
  const double got = solver.bound(c, t);
  const double expect = oracles::logaffine_comparison_ode(c, t, 1e-12);
  CHECK(got == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("bihari bound: round trip, monotonicity, linear specialization") {
  BihariSolver solver(ComparisonFunction::log_affine(1));
  for (double c : {0.2, 1.0, 3.0}) {
    for (double t : {0.1, 0.7, 1.5}) {
      const double v = solver.bound(c, t);
      CHECK(std::abs(solver.G(v) - solver.G(c) - t) <= 1e-6);
    }
  }
  CHECK(solver.bound(0.5, 1.0) <= solver.bound(0.6, 1.0));
  CHECK(solver.bound(0.5, 1.0) <= solver.bound(0.5, 1.2));

  for (double a : {0.5, 1.0, 2.0}) {
    BihariSolver lin(ComparisonFunction::power_law(a, 1.0));
    for (double c : {0.1, 1.0, 4.0}) {
      for (double t : {0.3, 1.0, 2.0}) {
        const double expect = c * std::exp(3.0 * a * t);
        CHECK(lin.bound(c, t) == doctest::Approx(expect).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("bihari bound curve matches pointwise solves") {
  BihariSolver solver(ComparisonFunction::log_affine(1));
  std::vector<double> times{0.0, 0.2, 0.4, 0.9, 1.3};
  auto curve = solver.bound_curve(0.4, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(curve[k] == doctest::Approx(solver.bound(0.4, times[k])).epsilon(1e-8));
}

TEST_CASE("bihari bound: exp(G) strictly increasing (rho consistency)") {
  BihariSolver solver(ComparisonFunction::log_affine(2));
  double prev = -1e300;
  for (double e = -3; e <= 3; e += 0.5) {
    const double g = solver.G(std::pow(10.0, e));
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("reachable difference bounds") {
  auto [rx, ry] = reachable_diff_bounds(ComparisonFunction::identity(),
                                        ComparisonFunction::identity(), 1.0, 0.3, 0.2);
  CHECK(rx == doctest::Approx(0.5 * std::exp(3.0)).epsilon(1e-6));
  CHECK(ry == doctest::Approx(2.0 * rx + 0.4).epsilon(1e-6));

  auto [rx0, ry0] = reachable_diff_bounds(ComparisonFunction::identity(),
                                          ComparisonFunction::identity(), 1.0, 0.0, 0.0);
  CHECK(rx0 == 0.0);
  CHECK(ry0 == 0.0);

  // nondecreasing in T, r_chi, r_u
  double prev = 0.0;
  for (double T : {0.5, 1.0, 1.5}) {
    auto [a, b] = reachable_diff_bounds(ComparisonFunction::identity(),
                                        ComparisonFunction::identity(), T, 0.3, 0.2);
    CHECK(a >= prev);
    CHECK(b >= prev);
    prev = a;
  }
  auto [r1, s1] = reachable_diff_bounds(ComparisonFunction::identity(),
                                        ComparisonFunction::identity(), 1.0, 0.4, 0.2);
  auto [r2, s2] = reachable_diff_bounds(ComparisonFunction::identity(),
                                        ComparisonFunction::identity(), 1.0, 0.4, 0.4);
  CHECK(r2 >= r1);
  CHECK(s2 >= s1);
}

TEST_CASE("solver tolerates concurrent readers") {
  BihariSolver solver(ComparisonFunction::log_affine(1));
  std::vector<std::thread> threads;
  std::vector<double> out(8, 0.0);
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] { out[i] = solver.bound(0.1 + 0.1 * i, 1.0 + 0.1 * i); });
  for (auto& th : threads) th.join();
  for (int i = 0; i < 8; ++i) CHECK(out[i] == doctest::Approx(solver.bound(0.1 + 0.1 * i, 1.0 + 0.1 * i)));
}

TEST_CASE("bihari bound accepts a heuristically certified tabulated modulus") {
  // tabulated identity: the envelope must match the linear closed form
  BihariSolver solver(ComparisonFunction::tabulated({0, 1, 2}, {0, 1, 2}, 1.0));
  CHECK(solver.report().method == OsgoodReport::Method::NumericHeuristic);
  for (double c : {0.2, 1.0}) {
    for (double t : {0.5, 1.5}) {
      CHECK(solver.bound(c, t) == doctest::Approx(c * std::exp(3.0 * t)).epsilon(1e-6));
    }
  }
}

TEST_CASE("sum modulus envelope matches its closed form") {
  // kappa1(s) = a s  =>  kbar(r) = 3 a r, bound = c e^{3 a t}; a = 0.5 + 1.5
  BihariSolver solver(ComparisonFunction::scaled_sum(
      {ComparisonFunction::identity(), ComparisonFunction::identity()}, {0.5, 1.5}));
  CHECK(solver.bound(0.7, 0.9) == doctest::Approx(0.7 * std::exp(3.0 * 2.0 * 0.9)).epsilon(1e-6));
}
