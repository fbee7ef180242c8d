#include "optmtp/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace optmtp {

LossSpec LossSpec::indicator_loss(const DerivedScale& scale) {
  LossSpec s;
  s.kind = LossKind::indicator;
  s.delta1_min = scale.delta1_min;
  s.delta2_min = scale.delta2_min;
  return s;
}

LossSpec LossSpec::proportional_loss(const DerivedScale& scale) {
  LossSpec s = indicator_loss(scale);
  s.kind = LossKind::proportional;
  return s;
}

LossSpec LossSpec::decision_loss(const DerivedScale& scale, double fn1, double fp1,
                                 double fn2, double fp2) {
  if (fn1 < 0 || fp1 < 0 || fn2 < 0 || fp2 < 0) {
    throw std::invalid_argument("decision_loss: penalties must be nonnegative");
  }
  LossSpec s = indicator_loss(scale);
  s.kind = LossKind::decision;
  s.l_fn[0] = fn1;
  s.l_fp[0] = fp1;
  s.l_fn[1] = fn2;
  s.l_fp[1] = fp2;
  return s;
}

namespace {

void check_action(const LossSpec& spec, std::uint8_t action) {
  if (spec.decision()) {
    if (action & ~std::uint8_t(3)) {
      throw std::invalid_argument("loss_eval: decision actions are subsets of {1,2}");
    }
  } else {
    if (action & ~std::uint8_t(7)) {
      throw std::invalid_argument("loss_eval: unknown hypothesis bit");
    }
    if ((action & (kH01 | kH02)) == (kH01 | kH02) && !(action & kH0C)) {
      throw std::invalid_argument(
          "loss_eval: {H01,H02} without H0C is outside the coherent action space");
    }
  }
}

}  // namespace

double loss_eval(const LossSpec& spec, std::uint8_t action, double delta1,
                 double delta2) {
  check_action(spec, action);
  const double d[2] = {delta1, delta2};
  double loss = 0.0;
  if (spec.decision()) {
    for (int k = 0; k < 2; ++k) {
      const bool in = action & (1 << k);
      const bool benefits = d[k] >= spec.threshold(k);
      if (in && !benefits) loss += spec.l_fp[k];
      if (!in && benefits) loss += spec.l_fn[k];
    }
    return loss;
  }
  const std::uint8_t bit[2] = {kH01, kH02};
  for (int k = 0; k < 2; ++k) {
    if (d[k] >= spec.threshold(k) && !(action & bit[k])) {
      loss += spec.kind == LossKind::proportional ? d[k] : 1.0;
    }
  }
  return loss;
}

void check_loss_bounded(const LossSpec& spec, const Prior& prior) {
  prior.validate();
  if (spec.kind != LossKind::proportional) return;
  double lo1, hi1, lo2, hi2;
  prior.support(lo1, hi1, lo2, hi2);
  if (!std::isfinite(lo1) || !std::isfinite(hi1) || !std::isfinite(lo2) ||
      !std::isfinite(hi2)) {
    throw std::invalid_argument(
        "proportional loss requires a prior with bounded effective support");
  }
}

AxisGain loss_axis_gain(const LossSpec& spec, std::uint8_t action, int k) {
  check_action(spec, action);
  AxisGain g;
  if (spec.decision()) {
    if (action & (1 << k)) {
      g.ind_above = spec.l_fn[k];
      g.ind_below = -spec.l_fp[k];
    }
    return g;
  }
  const std::uint8_t bit = (k == 0) ? kH01 : kH02;
  if (action & bit) {
    if (spec.kind == LossKind::proportional) {
      g.lin_above = 1.0;
    } else {
      g.ind_above = 1.0;
    }
  }
  return g;
}

double loss_no_action(const LossSpec& spec, double delta1, double delta2) {
  return loss_eval(spec, 0, delta1, delta2);
}

}  // namespace optmtp
