#pragma once

#include <functional>
#include <string>
#include <vector>

#include "optmtp/trial.hpp"

// Mixture priors over the non-centrality plane: point masses and/or
// axis-independent bivariate normal components.

namespace optmtp {

struct PriorComponent {
  enum class Kind { point, normal };
  Kind kind = Kind::point;
  double mean1 = 0, mean2 = 0;
  double sd1 = 0, sd2 = 0;  // zero for point masses
};

struct Prior {
  std::vector<double> weights;
  std::vector<PriorComponent> components;
  std::string name;

  void validate() const;  // weights nonnegative, sum to 1 within 1e-12

  // Effective support box: exact hull of point masses, mean +/- 8 sd for
  // normal components. Used for loss-boundedness checks.
  void support(double& lo1, double& hi1, double& lo2, double& hi2) const;

  static Prior point_mass(double d1, double d2);
};

// Integral of f over the prior: point components evaluate f directly;
// normal components use a product Gauss-Hermite rule starting at the given
// order and doubling until successive estimates agree to rel_tol (relative).
// Throws std::runtime_error if escalation is exhausted without agreement.
double integrate_prior(const std::function<double(double, double)>& f,
                       const Prior& prior, double rel_tol = 1e-9,
                       int base_order = 40);

// The named priors used throughout: four components at (0,0),
// (delta1_min,0), (0,delta2_min), (delta1_min,delta2_min).
//   sym         point masses, weights (.25,.25,.25,.25)
//   asym        point masses, weights (.2,.35,.1,.35)
//   sym-normal  normal components, sd_k = delta_k_min/2, symmetric weights
//   asym-normal normal components, asymmetric weights
//   subpop-only point masses, weights (0,.5,.5,0)
Prior builtin_prior(const std::string& name, const DerivedScale& scale);

}  // namespace optmtp
