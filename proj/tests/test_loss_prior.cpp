#include <doctest.h>

#include <cmath>

#include "optmtp/loss.hpp"
#include "optmtp/prior.hpp"

using namespace optmtp;

namespace {

DerivedScale scale_for_tests() {
  DerivedScale s;
  s.rho1 = s.rho2 = std::sqrt(0.5);
  s.v1 = s.v2 = 1.0;
  s.delta1_min = 2.0694;
  s.delta2_min = 2.0694;
  return s;
}

}  // namespace

TEST_CASE("builtin prior weights") {
  const DerivedScale s = scale_for_tests();
  CHECK(builtin_prior("sym", s).weights ==
        std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK(builtin_prior("asym", s).weights ==
        std::vector<double>{0.2, 0.35, 0.1, 0.35});
  CHECK(builtin_prior("subpop-only", s).weights ==
        std::vector<double>{0.0, 0.5, 0.5, 0.0});
  const Prior normal = builtin_prior("sym-normal", s);
  CHECK(normal.components[1].kind == PriorComponent::Kind::normal);
  CHECK(normal.components[1].sd1 == doctest::Approx(s.delta1_min / 2));
  CHECK(normal.components[1].sd2 == doctest::Approx(s.delta2_min / 2));
  CHECK_THROWS(builtin_prior("nope", s));
}

TEST_CASE("prior validation") {
  Prior bad;
  bad.weights = {0.5, 0.6};
  bad.components.resize(2);
  CHECK_THROWS(bad.validate());
  bad.weights = {0.5, 0.5};
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("indicator loss values") {
  const DerivedScale s = scale_for_tests();
  const LossSpec loss = LossSpec::indicator_loss(s);
  const double dm = s.delta1_min;
  CHECK(loss_eval(loss, 0, dm, dm) == 2.0);
  CHECK(loss_eval(loss, 0, 0.0, 0.0) == 0.0);
  CHECK(loss_eval(loss, kH01, dm, dm) == 1.0);
  CHECK(loss_eval(loss, kH01 | kH02 | kH0C, dm, dm) == 0.0);
  // Non-strict threshold: exactly delta_min counts.
  CHECK(loss_eval(loss, 0, dm, 0.0) == 1.0);
  // Monotone in the rejected set.
  CHECK(loss_eval(loss, kH0C, dm, dm) >= loss_eval(loss, kH01 | kH0C, dm, dm));
  // The incoherent pair is outside the action space.
  CHECK_THROWS(loss_eval(loss, kH01 | kH02, dm, dm));
}

TEST_CASE("proportional loss values and boundedness check") {
  const DerivedScale s = scale_for_tests();
  const LossSpec loss = LossSpec::proportional_loss(s);
  const double dm = s.delta1_min;
  CHECK(loss_eval(loss, 0, dm, 2 * dm) == doctest::Approx(3 * dm));
  CHECK(loss_eval(loss, kH02 | kH0C, dm, 2 * dm) == doctest::Approx(dm));
  // Bounded on every prior with a declared compact effective support.
  CHECK_NOTHROW(check_loss_bounded(loss, builtin_prior("sym-normal", s)));
}

TEST_CASE("decision loss decomposes over subpopulations") {
  const DerivedScale s = scale_for_tests();
  const LossSpec d1 = LossSpec::decision_loss(s, 1.0, 2.0, 1.0, 2.0);
  CHECK(loss_eval(d1, 3, 0.0, 0.0) == 4.0);  // two false positives at 2
  CHECK(loss_eval(d1, 0, s.delta1_min, s.delta2_min) == 2.0);
  CHECK(loss_eval(d1, 1, s.delta1_min, 0.0) == 0.0);
  CHECK_THROWS(loss_eval(d1, kH0C, 0.0, 0.0));  // not a recommendation mask
  // Additive split: L = L_1 + L_2 evaluated through single-arm specs.
  const LossSpec only1 = LossSpec::decision_loss(s, 1.0, 2.0, 0.0, 0.0);
  const LossSpec only2 = LossSpec::decision_loss(s, 0.0, 0.0, 1.0, 2.0);
  for (std::uint8_t d = 0; d < 4; ++d) {
    for (double x : {0.0, s.delta1_min}) {
      for (double y : {0.0, s.delta2_min}) {
        CHECK(loss_eval(d1, d, x, y) ==
              doctest::Approx(loss_eval(only1, d, x, y) +
                              loss_eval(only2, d, x, y)));
      }
    }
  }
}

TEST_CASE("axis gains reproduce the loss differences") {
  const DerivedScale s = scale_for_tests();
  const LossSpec loss = LossSpec::indicator_loss(s);
  for (std::uint8_t action : {std::uint8_t(kH01), std::uint8_t(kH02 | kH0C),
                              std::uint8_t(kH01 | kH02 | kH0C)}) {
    for (double x : {0.0, 1.0, s.delta1_min, 3.0}) {
      for (double y : {0.0, s.delta2_min}) {
        const double gain = loss_axis_gain(loss, action, 0).eval(x, s.delta1_min) +
                            loss_axis_gain(loss, action, 1).eval(y, s.delta2_min);
        CHECK(gain == doctest::Approx(loss_eval(loss, 0, x, y) -
                                      loss_eval(loss, action, x, y)));
      }
    }
  }
}
