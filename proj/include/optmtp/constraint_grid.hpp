#pragma once

#include <vector>

#include "optmtp/trial.hpp"

// Discretization of the null-boundary set: the lines {d1 = 0}, {d2 = 0} and
// {rho1*d1 + rho2*d2 = 0}, sampled at parameter spacing tau_g and clipped to
// the box [-b, b]^2. Third-line points are (rho2*k*tau_g, -rho1*k*tau_g) for
// every integer k with both coordinates inside the box; since
// rho1^2 + rho2^2 = 1 the parameter spacing equals the Euclidean spacing
// along that line. The origin lies on all three lines and is kept once.
//
// With b = 5 and the default tau_g = 0.32 the symmetric design yields
// exactly 105 points. The count depends on (rho1, rho2) and is logged, not
// asserted.

namespace optmtp {

struct GridPoint {
  double d1 = 0, d2 = 0;
  NullSet truth;
  int line = 0;  // 1, 2, 3: which boundary line generated the point
};

struct ConstraintGrid {
  std::vector<GridPoint> points;
  double tau_g = 0;
  double b = 0;

  std::size_t size() const { return points.size(); }
};

ConstraintGrid make_constraint_grid(const DerivedScale& scale, double tau_g,
                                    double b);

// Degenerate grid holding only the global null, for the ablation study.
ConstraintGrid global_null_grid(const DerivedScale& scale);

}  // namespace optmtp
