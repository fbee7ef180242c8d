#include <doctest.h>

#include <cmath>

#include "optmtp/normal.hpp"
#include "optmtp/quad.hpp"

using namespace optmtp;

TEST_CASE("normal cdf matches reference values") {
  CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(norm_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(norm_cdf(-1.2815515655446004) == doctest::Approx(0.1).epsilon(1e-13));
  CHECK(norm_ccdf(5.0) == doctest::Approx(2.866515718791939e-7).epsilon(1e-12));
  // Deep tail keeps relative accuracy.
  CHECK(norm_ccdf(10.0) == doctest::Approx(7.61985302416053e-24).epsilon(1e-12));
}

TEST_CASE("quantile inverts the cdf across the range") {
  CHECK(norm_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-14));
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(norm_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-14));
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-6}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS(norm_quantile(0.0));
  CHECK_THROWS(norm_quantile(1.0));
}

TEST_CASE("interval probabilities are tail-stable and flushed") {
  CHECK(interval_prob(-1.0, 1.0, 0.0) ==
        doctest::Approx(std::erf(1.0 / std::sqrt(2.0))).epsilon(1e-15));
  // Deep-tail difference retains relative accuracy through the complement.
  const double p = interval_prob(8.0, 8.1, 0.0);
  const double expect = norm_ccdf(8.0) - norm_ccdf(8.1);
  CHECK(p == doctest::Approx(expect).epsilon(1e-12));
  CHECK(p > 0.0);
  // Values below the flush threshold collapse to exact zero.
  CHECK(interval_prob(40.0, 40.1, 0.0) == 0.0);
  // Infinite bounds.
  CHECK(interval_prob(-INFINITY, INFINITY, 3.0) == doctest::Approx(1.0));
  CHECK(interval_prob(0.0, INFINITY, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("gauss-hermite integrates gaussian moments") {
  const QuadRule& r = gauss_hermite(40);
  double w_sum = 0.0, second = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    w_sum += r.weights[i];
    second += r.weights[i] * r.nodes[i] * r.nodes[i];
  }
  CHECK(w_sum == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
  CHECK(second == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-13));
  // Expectation helper: E[X^2] under N(mu, sd^2).
  const double m = gauss_hermite_expect([](double x) { return x * x; }, 2.0,
                                        1.5, 40);
  CHECK(m == doctest::Approx(4.0 + 2.25).epsilon(1e-12));
}

TEST_CASE("gauss-legendre and adaptive panels") {
  const QuadRule& r = gauss_legendre(16);
  double x4 = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    x4 += r.weights[i] * std::pow(r.nodes[i], 4);
  }
  CHECK(x4 == doctest::Approx(0.4).epsilon(1e-13));
  const double v = integrate([](double x) { return std::exp(-x * x); }, -8.0,
                             8.0, 1e-12);
  CHECK(v == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
}
