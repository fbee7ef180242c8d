#include "optmtp/action_space.hpp"

namespace optmtp {

const ActionSpace& ActionSpace::testing() {
  static const ActionSpace space(
      false, {0, kH01, kH02, kH0C, kH01 | kH0C, kH02 | kH0C,
              kH01 | kH02 | kH0C});
  return space;
}

const ActionSpace& ActionSpace::decision() {
  static const ActionSpace space(true, {0, 1, 2, 3});
  return space;
}

std::string ActionSpace::label(int idx) const {
  const std::uint8_t m = masks_[idx];
  if (m == 0) return decision_ ? "none" : "none";
  std::string out;
  if (decision_) {
    if (m & 1) out += "1";
    if (m & 2) out += (out.empty() ? "2" : "+2");
    return "rec:" + out;
  }
  if (m & kH01) out += "H01";
  if (m & kH02) out += (out.empty() ? "" : "|") + std::string("H02");
  if (m & kH0C) out += (out.empty() ? "" : "|") + std::string("H0C");
  return out;
}

double ActionSpace::error_weight(int j, const GridPoint& point,
                                 const DerivedScale& scale) const {
  const std::uint8_t m = masks_[j];
  if (m == 0) return 0.0;
  if (!decision_) {
    return (m & point.truth.mask()) ? 1.0 : 0.0;
  }
  // Recommendation masks: {1} errs iff d1 <= 0, {2} iff d2 <= 0,
  // {1,2} iff the pooled effect is <= 0. The empty recommendation never errs.
  switch (m) {
    case 1:
      return point.d1 <= 0.0 ? 1.0 : 0.0;
    case 2:
      return point.d2 <= 0.0 ? 1.0 : 0.0;
    case 3:
      return scale.pooled(point.d1, point.d2) <= 0.0 ? 1.0 : 0.0;
    default:
      return 0.0;
  }
}

}  // namespace optmtp
