#include <doctest.h>

#include <cmath>

#include "optmtp/normal.hpp"
#include "optmtp/trial.hpp"

using namespace optmtp;

namespace {

TrialDesign symmetric_design() {
  TrialDesign d;
  d.p1 = 0.5;
  d.n = 100.0;
  d.delta_min = 1.0;
  d.alpha = 0.05;
  d.beta = 0.1;
  return d;
}

}  // namespace

TEST_CASE("derived scale satisfies the correlation identity") {
  for (double p1 : {0.2, 0.5, 0.63, 0.9}) {
    TrialDesign d = symmetric_design();
    d.p1 = p1;
    d.sigma2[0][0] = 1.3;
    d.sigma2[0][1] = 0.7;
    d.sigma2[1][0] = 2.1;
    d.sigma2[1][1] = 0.4;
    const DerivedScale s = derive_scale(d);
    CHECK(s.rho1 * s.rho1 + s.rho2 * s.rho2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.v1 > 0);
    CHECK(s.v2 > 0);
    CHECK(s.delta1_min > 0);
    CHECK(s.delta2_min > 0);
  }
}

TEST_CASE("non-centrality mapping") {
  TrialDesign d = symmetric_design();
  auto [z1, z2] = non_centrality(d, 0.0, 0.0);
  CHECK(z1 == 0.0);
  CHECK(z2 == 0.0);

  // Equal variances, equal split: delta_k_min = delta_min * sqrt(n / (8 s^2)).
  d.n = 200.0;
  const DerivedScale s = derive_scale(d);
  CHECK(s.delta1_min ==
        doctest::Approx(d.delta_min * std::sqrt(d.n / 8.0)).epsilon(1e-12));

  // Unit-variance statistic: delta1 equals the raw effect.
  auto [u1, u2] = non_centrality(d, d.delta_min, 0.0);
  CHECK(u1 == doctest::Approx(s.delta1_min).epsilon(1e-12));
  CHECK(u2 == 0.0);
}

TEST_CASE("non-centrality scales as sqrt(n) and is linear in the effect") {
  TrialDesign d = symmetric_design();
  const DerivedScale s1 = derive_scale(d);
  TrialDesign d4 = d;
  d4.n = 4.0 * d.n;
  const DerivedScale s4 = derive_scale(d4);
  CHECK(s4.delta1_min / s1.delta1_min == doctest::Approx(2.0).epsilon(1e-10));
  auto [a1, a2] = non_centrality(d, 0.3, 0.5);
  auto [b1, b2] = non_centrality(d, 0.6, 1.0);
  CHECK(b1 == doctest::Approx(2 * a1).epsilon(1e-12));
  CHECK(b2 == doctest::Approx(2 * a2).epsilon(1e-12));
}

TEST_CASE("true nulls per the boundary conventions") {
  const DerivedScale s = derive_scale(symmetric_design());
  const NullSet all = true_nulls(s, 0.0, 0.0);
  CHECK(all.h01);
  CHECK(all.h02);
  CHECK(all.h0c);

  const NullSet only2 = true_nulls(s, s.delta1_min, 0.0);
  CHECK_FALSE(only2.h01);
  CHECK(only2.h02);
  CHECK_FALSE(only2.h0c);

  const double t = 0.7;
  const NullSet third = true_nulls(s, s.rho2 * t, -s.rho1 * t);
  CHECK_FALSE(third.h01);
  CHECK(third.h02);
  CHECK(third.h0c);

  // Nonpositive pair always keeps the combined null.
  CHECK(true_nulls(s, -0.3, -0.0).h0c);
}

TEST_CASE("ump test thresholds") {
  TrialDesign d = symmetric_design();
  const DerivedScale s = derive_scale(d);
  CHECK(ump_rejects(s, 0.05, 3.0, 3.0));  // 3*sqrt(2) is far beyond 1.645
  CHECK_FALSE(ump_rejects(s, 0.2, 0.0, 0.0));
  // Exact boundary is not a rejection (strict inequality).
  const double q = norm_quantile(0.95);
  const double z = q / (s.rho1 + s.rho2);
  CHECK_FALSE(ump_rejects(s, 0.05, z, z));
  // Monotone: adding to either coordinate keeps rejection.
  CHECK(ump_rejects(s, 0.05, 3.5, 3.0));
  CHECK(ump_rejects(s, 0.05, 3.0, 3.7));
}

TEST_CASE("minimum sample size solves the power equation") {
  TrialDesign d = symmetric_design();
  const double n = n_min(d);
  d.n = n;
  const DerivedScale s = derive_scale(d);
  const double power = norm_cdf(s.delta_c_min() - norm_quantile(0.95));
  CHECK(power == doctest::Approx(0.9).epsilon(1e-9));

  // Doubling all variances doubles the required n.
  TrialDesign dv = symmetric_design();
  for (int k = 0; k < 2; ++k) {
    for (int a = 0; a < 2; ++a) dv.sigma2[k][a] = 2.0;
  }
  CHECK(n_min(dv) == doctest::Approx(2.0 * n).epsilon(1e-8));

  CHECK(n_min(d, /*round_up=*/true) == doctest::Approx(std::ceil(n)));
}
