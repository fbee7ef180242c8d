#pragma once

#include <cstdint>
#include <vector>

#include "optmtp/prior.hpp"
#include "optmtp/trial.hpp"

// Loss functions over (action, non-centrality) pairs.
//
// Testing losses act on rejected hypothesis subsets:
//   indicator     1 per subpopulation with delta_k >= delta_k_min whose null
//                 was not rejected
//   proportional  same, but the penalty is delta_k instead of 1
// The decision loss acts on recommendation sets d (subsets of {1,2}):
//   decision      l_fp[k] if k recommended while delta_k < delta_k_min,
//                 l_fn[k] if k not recommended while delta_k >= delta_k_min
// Threshold comparisons are non-strict (>= delta_k_min counts as a benefit).

namespace optmtp {

enum class LossKind { indicator, proportional, decision };

struct LossSpec {
  LossKind kind = LossKind::indicator;
  double delta1_min = 0, delta2_min = 0;
  double l_fp[2] = {0, 0};
  double l_fn[2] = {0, 0};

  double threshold(int k) const { return k == 0 ? delta1_min : delta2_min; }
  bool decision() const { return kind == LossKind::decision; }

  static LossSpec indicator_loss(const DerivedScale& scale);
  static LossSpec proportional_loss(const DerivedScale& scale);
  static LossSpec decision_loss(const DerivedScale& scale, double fn1, double fp1,
                                double fn2, double fp2);
};

// Evaluate the loss at an action (hypothesis-subset mask for testing losses,
// recommendation mask for the decision loss) and a parameter point.
// Throws std::invalid_argument when the action does not belong to the loss's
// action space ({H01,H02} without H0C, or bits beyond {1,2} for decisions).
double loss_eval(const LossSpec& spec, std::uint8_t action, double delta1,
                 double delta2);

// Sanity check used at configuration time: the proportional loss is only
// accepted together with a prior whose declared effective support is bounded
// (point masses, or normal components via their mean +/- 8 sd box).
void check_loss_bounded(const LossSpec& spec, const Prior& prior);

// One-axis decomposition of the "gain" L(no-action) - L(action): for every
// loss here the gain of an action is a sum over the subpopulations it acts
// on of g_k(delta_k) with
//   g(delta) = ind_above * 1[delta >= t] + lin_above * delta * 1[delta >= t]
//            + ind_below * 1[delta < t],   t = delta_k_min.
// The LP objective builder integrates these axis factors against the prior.
struct AxisGain {
  double ind_above = 0;
  double lin_above = 0;
  double ind_below = 0;

  double eval(double delta, double threshold) const {
    return delta >= threshold ? ind_above + lin_above * delta : ind_below;
  }
  bool zero() const {
    return ind_above == 0 && lin_above == 0 && ind_below == 0;
  }
};

// Gain factor of the given action on axis k (0-based subpopulation index).
AxisGain loss_axis_gain(const LossSpec& spec, std::uint8_t action, int k);

// Loss of the empty action, used as the constant objective offset.
double loss_no_action(const LossSpec& spec, double delta1, double delta2);

}  // namespace optmtp
