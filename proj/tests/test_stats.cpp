#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgraf/rng.hpp"
#include "mgraf/stats.hpp"

using namespace mgraf;

TEST_CASE("moments and quantiles") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  CHECK(mean_of(x) == doctest::Approx(2.5));
  CHECK(sd_of(x) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(median_of(x) == doctest::Approx(2.5));
  CHECK(quantile_of(x, 0.0) == doctest::Approx(1.0));
  CHECK(quantile_of(x, 1.0) == doctest::Approx(4.0));
  CHECK(quantile_of(x, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("incomplete beta basics") {
  // I_x(1,1) = x
  for (double x : {0.1, 0.37, 0.9}) {
    CHECK(ibeta_reg(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
  }
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
  CHECK(ibeta_reg(2.5, 1.5, 0.3) ==
        doctest::Approx(1.0 - ibeta_reg(1.5, 2.5, 0.7)).epsilon(1e-12));
}

TEST_CASE("t distribution against closed forms") {
  // df = 1: Cauchy, F(t) = 1/2 + atan(t)/pi
  for (double t : {0.0, 0.5, 1.0, 3.0}) {
    const double expect = 0.5 + std::atan(t) / M_PI;
    CHECK(t_cdf(t, 1.0) == doctest::Approx(expect).epsilon(1e-10));
  }
  // df = 2: F(t) = 1/2 + t / (2 sqrt(2 + t^2))
  for (double t : {-1.5, 0.25, 2.0}) {
    const double expect = 0.5 + t / (2.0 * std::sqrt(2.0 + t * t));
    CHECK(t_cdf(t, 2.0) == doctest::Approx(expect).epsilon(1e-10));
  }
  // large df approaches the normal
  CHECK(t_cdf(1.959964, 1e6) == doctest::Approx(0.975).epsilon(1e-4));
  CHECK(t_quantile(0.975, 10.0) == doctest::Approx(2.228139).epsilon(1e-5));
}

TEST_CASE("welch t-test") {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  std::vector<double> b{1.0, 2.0, 3.0, 4.0};
  auto r = welch_t_test(a, b);
  CHECK(r.t == doctest::Approx(0.0));
  CHECK(r.p == doctest::Approx(1.0));

  std::vector<double> c{10.0, 11.0, 12.0, 13.0};
  r = welch_t_test(a, c);
  CHECK(r.t < -5.0);
  CHECK(r.p < 1e-3);

  // zero variance in both groups: p = 1 by convention
  std::vector<double> z1{2.0, 2.0, 2.0};
  std::vector<double> z2{5.0, 5.0};
  r = welch_t_test(z1, z2);
  CHECK(r.p == doctest::Approx(1.0));
}

TEST_CASE("benjamini-hochberg step-up") {
  // thresholds at q=0.15, m=3: 0.05, 0.10, 0.15
  std::vector<double> p{0.01, 0.02, 0.2};
  auto rej = bh_reject(p, 0.15);
  CHECK(rej[0] == 1);
  CHECK(rej[1] == 1);
  CHECK(rej[2] == 0);

  // step-up can rescue smaller p's through a larger rank
  std::vector<double> p2{0.04, 0.049, 0.15};
  auto rej2 = bh_reject(p2, 0.15);
  CHECK(rej2[0] == 1);
  CHECK(rej2[1] == 1);
  CHECK(rej2[2] == 1);

  // monotone in q
  Rng rng(7);
  std::vector<double> pr(40);
  for (auto& v : pr) v = rng.uniform01();
  std::size_t prev = 0;
  for (double q : {0.05, 0.10, 0.20, 0.40}) {
    auto r = bh_reject(pr, q);
    std::size_t count = 0;
    for (auto b : r) count += b;
    CHECK(count >= prev);
    prev = count;
  }
}

TEST_CASE("log-log slope") {
  std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v * v);
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
}
