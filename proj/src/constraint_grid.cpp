#include "optmtp/constraint_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace optmtp {

ConstraintGrid make_constraint_grid(const DerivedScale& scale, double tau_g,
                                    double b) {
  if (!(tau_g > 0.0 && b > 0.0)) {
    throw std::invalid_argument("make_constraint_grid: tau_g, b must be positive");
  }
  ConstraintGrid grid;
  grid.tau_g = tau_g;
  grid.b = b;
  const double eps = 1e-12;
  auto push = [&](double d1, double d2, int line) {
    grid.points.push_back({d1, d2, true_nulls(scale, d1, d2), line});
  };
  const int k_axis = static_cast<int>(std::floor(b / tau_g + eps));
  for (int k = -k_axis; k <= k_axis; ++k) {
    push(k * tau_g, 0.0, 1);
  }
  for (int k = -k_axis; k <= k_axis; ++k) {
    if (k == 0) continue;  // origin already present from line 1
    push(0.0, k * tau_g, 2);
  }
  const double rho_max = std::max(scale.rho1, scale.rho2);
  const int k_diag = static_cast<int>(std::floor(b / (rho_max * tau_g) + eps));
  for (int k = -k_diag; k <= k_diag; ++k) {
    if (k == 0) continue;
    push(scale.rho2 * k * tau_g, -scale.rho1 * k * tau_g, 3);
  }
  for (const auto& p : grid.points) {
    if (p.truth.empty()) {
      throw std::logic_error("constraint grid point with empty null set");
    }
  }
  return grid;
}

ConstraintGrid global_null_grid(const DerivedScale& scale) {
  ConstraintGrid grid;
  grid.tau_g = 0.0;
  grid.b = 0.0;
  grid.points.push_back({0.0, 0.0, true_nulls(scale, 0.0, 0.0), 1});
  return grid;
}

}  // namespace optmtp
