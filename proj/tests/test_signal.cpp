#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"

#include "detcert/rng.hpp"
#include "detcert/signal.hpp"
#include "oracles.hpp"

using namespace detcert;

TEST_CASE("sample: knot lookup, zero extension, first knot") {
  VectorSignal sig(1, 1.0, {2.0, 5.0});
  CHECK(sig.sample(1.5)[0] == 5.0);
  CHECK(sig.sample(7.0)[0] == 0.0);

  VectorSignal sig2(2, 1.0, {1.0, -1.0});
  auto v = sig2.sample(0.0);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == -1.0);

  CHECK_THROWS_AS(sig.sample(-0.5), std::invalid_argument);
  CHECK_THROWS_AS(sig.sample(std::nan("")), std::invalid_argument);
}

TEST_CASE("concat: definition, t=0 boundary, prefix identity") {
  VectorSignal tail(1, 1.0, {9.0});
  VectorSignal head(1, 1.0, {1.0, 2.0});
  VectorSignal got = concat(tail, head, 2.0);
  REQUIRE(got.knots() == 3);
  CHECK(got.knot(0)[0] == 1.0);
  CHECK(got.knot(1)[0] == 2.0);
  CHECK(got.knot(2)[0] == 9.0);

  VectorSignal at0 = concat(tail, head, 0.0);
  REQUIRE(at0.knots() == 1);
  CHECK(at0.knot(0)[0] == 9.0);

  // prefix of concat(zero, u, t) equals u on [0,t)
  VectorSignal zero = VectorSignal::zero(1, 1.0, 2);
  VectorSignal spliced = concat(zero, head, 2.0);
  for (std::size_t k = 0; k < 2; ++k) CHECK(spliced.knot(k)[0] == head.knot(k)[0]);

  CHECK_THROWS_AS(concat(VectorSignal(2, 1.0), head, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(concat(VectorSignal(1, 0.5), head, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(concat(tail, head, 0.3), std::invalid_argument);
}

TEST_CASE("truncate: definition, zero case, composition law") {
  VectorSignal sig(1, 1.0, {3.0, 4.0});
  VectorSignal t1 = truncate(sig, 1.0);
  REQUIRE(t1.knots() == 1);
  CHECK(t1.knot(0)[0] == 3.0);
  CHECK(t1.sample(1.5)[0] == 0.0);

  CHECK(truncate(sig, 0.0).knots() == 0);

  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> vals;
    const std::size_t knots = 1 + rng.next_u64() % 6;
    for (std::size_t k = 0; k < knots; ++k) vals.push_back(rng.uniform(-3, 3));
    VectorSignal s(1, 0.5, vals);
    const double a = 0.5 * static_cast<double>(rng.next_u64() % 8);
    const double b = 0.5 * static_cast<double>(rng.next_u64() % 8);
    VectorSignal lhs = truncate(truncate(s, a), b);
    VectorSignal rhs = truncate(s, std::min(a, b));
    REQUIRE(lhs.knots() == rhs.knots());
    for (std::size_t k = 0; k < lhs.knots(); ++k) CHECK(lhs.knot(k)[0] == rhs.knot(k)[0]);
  }
}

TEST_CASE("concat/truncate prefix law") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> hv, tv;
    for (int k = 0; k < 4; ++k) hv.push_back(rng.uniform(-2, 2));
    for (int k = 0; k < 3; ++k) tv.push_back(rng.uniform(-2, 2));
    VectorSignal head(1, 0.25, hv), tail(1, 0.25, tv);
    const double t = 0.25 * static_cast<double>(rng.next_u64() % 7);
    VectorSignal lhs = truncate(concat(tail, head, t), t);
    VectorSignal rhs = truncate(head, t);
    REQUIRE(lhs.knots() == rhs.knots());
    for (std::size_t k = 0; k < lhs.knots(); ++k) CHECK(lhs.knot(k)[0] == rhs.knot(k)[0]);
  }
}

TEST_CASE("sup_norm: knot max, single knot, beyond support") {
  VectorSignal sig(1, 1.0, {1.0, -3.0});
  CHECK(sup_norm(sig, 0.0, 2.0) == 3.0);
  CHECK(sup_norm(sig, 0.0, 0.5) == 1.0);
  CHECK(sup_norm(sig, 5.0, 6.0) == 0.0);
  CHECK_THROWS_AS(sup_norm(sig, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("sup_norm: subadditive and absolutely homogeneous") {
  Rng rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> av, bv;
    for (int k = 0; k < 6; ++k) {
      av.push_back(rng.uniform(-2, 2));
      bv.push_back(rng.uniform(-2, 2));
    }
    VectorSignal a(2, 0.5, av), b(2, 0.5, bv);
    const double hi = rng.uniform(0.0, 4.0);
    CHECK(sup_norm(signal_add(a, b), 0.0, hi) <=
          sup_norm(a, 0.0, hi) + sup_norm(b, 0.0, hi) + 1e-12);
    const double c = rng.uniform(-3.0, 3.0);
    CHECK(sup_norm(signal_scale(a, c), 0.0, hi) ==
          doctest::Approx(std::abs(c) * sup_norm(a, 0.0, hi)).epsilon(1e-12));
  }
}

TEST_CASE("discounted integral: unit integrand closed form") {
  const double lambda = std::exp(-1.0);
  const double dt = 1e-3;
  std::vector<double> ones(1001, 1.0);
  const double got = discounted_integral(ones, dt, lambda, 1.0);
  const double expect = oracles::discounted_unit_integral(lambda, 1.0);  // 0.632121...
  CHECK(got == doctest::Approx(expect).epsilon(1e-6));
  CHECK(expect == doctest::Approx(0.632121).epsilon(1e-5));
}

TEST_CASE("discounted integral: zero integrand and input validation") {
  std::vector<double> zeros(11, 0.0);
  CHECK(discounted_integral(zeros, 0.1, 0.5, 1.0) == 0.0);
  std::vector<double> ones(11, 1.0);
  CHECK_THROWS_AS(discounted_integral(ones, 0.1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(discounted_integral(ones, 0.1, 1.0, 1.0), std::invalid_argument);
  std::vector<double> bad(11, 1.0);
  bad[4] = -0.5;
  CHECK_THROWS_AS(discounted_integral(bad, 0.1, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(discounted_integral(std::vector<double>(5, 1.0), 0.1, 0.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("discounted integral: incremental equals one-shot") {
  Rng rng(5);
  const double dt = 0.05;
  std::vector<double> g(41);
  for (auto& v : g) v = rng.uniform(0.0, 3.0);
  const double lambda = 0.37;

  DiscountedAccumulator acc(lambda);
  for (std::size_t k = 0; k + 1 < g.size(); ++k) acc.advance(dt, g[k], g[k + 1]);
  const double oneshot = discounted_integral(g, dt, lambda, 2.0);
  CHECK(std::abs(acc.value() - oneshot) <= 1e-12 * std::max(1.0, oneshot));
}

TEST_CASE("discounted integral: semigroup identity to 1e-12 relative") {
  Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    const double dt = rng.uniform(0.01, 0.2);
    const double lambda = rng.uniform(0.05, 0.95);
    const std::size_t steps = 10 + rng.next_u64() % 40;
    std::vector<double> g(steps + 1);
    for (auto& v : g) v = rng.uniform(0.0, 5.0);
    const std::size_t cut = 1 + rng.next_u64() % (steps - 1);

    const double t1 = static_cast<double>(cut) * dt;
    const double t2 = static_cast<double>(steps) * dt;
    const double full = discounted_integral(g, dt, lambda, t2);

    const double part1 = discounted_integral(g, dt, lambda, t1);
    DiscountedAccumulator acc(lambda);
    for (std::size_t k = cut; k < steps; ++k) acc.advance(dt, g[k], g[k + 1]);
    const double stitched = pow_lambda(lambda, t2 - t1) * part1 + acc.value();
    CHECK(std::abs(stitched - full) <= 1e-12 * std::max(1.0, std::abs(full)));
  }
}

TEST_CASE("discounted integral: monotone in the integrand") {
  Rng rng(29);
  const double dt = 0.1;
  std::vector<double> g1(21), g2(21);
  for (std::size_t k = 0; k < g1.size(); ++k) {
    g1[k] = rng.uniform(0.0, 2.0);
    g2[k] = g1[k] + rng.uniform(0.0, 1.0);
  }
  CHECK(discounted_integral(g1, dt, 0.4, 2.0) <= discounted_integral(g2, dt, 0.4, 2.0));
}

TEST_CASE("signal csv round trip and uniformity check") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "detcert_sig_test";
  fs::create_directories(dir);
  VectorSignal sig(2, 0.25, {1.0, -1.0, 0.5, 2.0, 0.0, 3.0});
  const std::string path = (dir / "sig.csv").string();
  write_signal_csv(path, sig);
  VectorSignal back = read_signal_csv(path);
  REQUIRE(back.dim() == sig.dim());
  REQUIRE(back.knots() == sig.knots());
  CHECK(back.dt() == doctest::Approx(sig.dt()).epsilon(1e-12));
  for (std::size_t k = 0; k < sig.knots(); ++k)
    for (std::size_t i = 0; i < sig.dim(); ++i) CHECK(back.knot(k)[i] == sig.knot(k)[i]);

  const std::string bad = (dir / "bad.csv").string();
  {
    FILE* fp = std::fopen(bad.c_str(), "w");
    std::fputs("t,v0\n0,1\n0.25,2\n0.8,3\n", fp);
    std::fclose(fp);
  }
  CHECK_THROWS(read_signal_csv(bad));
}
