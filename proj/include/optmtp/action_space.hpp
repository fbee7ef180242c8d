#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optmtp/constraint_grid.hpp"
#include "optmtp/trial.hpp"

// Ordered action spaces of the discretized procedures.
//
// Testing: the coherent subsets of {H01, H02, H0C} in the fixed order
//   (none, {H01}, {H02}, {H0C}, {H01,H0C}, {H02,H0C}, {H01,H02,H0C});
// {H01,H02} alone is excluded because coherent procedures suffice. The LP
// carries one variable per rectangle for each action except "none", whose
// mass is the per-rectangle slack 1 - sum of the others.
//
// Decision: recommendation subsets (none, {1}, {2}, {1,2}) with three free
// variables per rectangle.

namespace optmtp {

class ActionSpace {
 public:
  static const ActionSpace& testing();
  static const ActionSpace& decision();

  bool is_decision() const { return decision_; }
  // Number of free (non-"none") actions per rectangle: 6 or 3.
  int n_free() const { return static_cast<int>(masks_.size()) - 1; }
  // Action mask by ordinal; index 0 is the empty action.
  std::uint8_t mask(int idx) const { return masks_[idx]; }
  int n_actions() const { return static_cast<int>(masks_.size()); }
  std::string label(int idx) const;

  // 1 if playing the free action (ordinal j >= 1) at a data realization is an
  // error when the state of nature is the given constraint point, else 0.
  // Testing: the rejected set intersects the true nulls. Decision: the
  // aggregate population implied by the recommendation has no benefit.
  double error_weight(int j, const GridPoint& point,
                      const DerivedScale& scale) const;

 private:
  ActionSpace(bool decision, std::vector<std::uint8_t> masks)
      : decision_(decision), masks_(std::move(masks)) {}
  bool decision_ = false;
  std::vector<std::uint8_t> masks_;
};

}  // namespace optmtp
