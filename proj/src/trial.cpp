#include "optmtp/trial.hpp"

#include <cmath>
#include <stdexcept>

#include "optmtp/normal.hpp"

namespace optmtp {

double TrialDesign::arm_size(int k) const {
  const double pk = (k == 0) ? p1 : p2();
  return pk * n / 2.0;
}

void TrialDesign::validate() const {
  if (!(p1 > 0.0 && p1 < 1.0)) {
    throw std::invalid_argument("TrialDesign: p1 must lie in (0,1)");
  }
  for (int k = 0; k < 2; ++k) {
    for (int a = 0; a < 2; ++a) {
      if (!(sigma2[k][a] > 0.0)) {
        throw std::invalid_argument("TrialDesign: variances must be positive");
      }
    }
  }
  if (!(n > 0.0)) throw std::invalid_argument("TrialDesign: n must be positive");
  if (!(delta_min > 0.0)) {
    throw std::invalid_argument("TrialDesign: delta_min must be positive");
  }
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw std::invalid_argument("TrialDesign: alpha must lie in (0, 0.5)");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("TrialDesign: beta must lie in (0, 1)");
  }
}

DerivedScale derive_scale(const TrialDesign& design) {
  design.validate();
  DerivedScale s;
  const double n10 = design.arm_size(0);
  const double n20 = design.arm_size(1);
  s.v1 = design.sigma2[0][1] / n10 + design.sigma2[0][0] / n10;
  s.v2 = design.sigma2[1][1] / n20 + design.sigma2[1][0] / n20;
  const double p1 = design.p1, p2 = design.p2();
  const double denom = p1 * p1 * s.v1 + p2 * p2 * s.v2;
  s.rho1 = std::sqrt(p1 * p1 * s.v1 / denom);
  s.rho2 = std::sqrt(p2 * p2 * s.v2 / denom);
  s.delta1_min = design.delta_min / std::sqrt(s.v1);
  s.delta2_min = design.delta_min / std::sqrt(s.v2);
  return s;
}

std::pair<double, double> non_centrality(const TrialDesign& design, double Delta1,
                                         double Delta2) {
  const DerivedScale s = derive_scale(design);
  return {Delta1 / std::sqrt(s.v1), Delta2 / std::sqrt(s.v2)};
}

NullSet true_nulls(const DerivedScale& scale, double delta1, double delta2) {
  NullSet t;
  t.h01 = delta1 <= 0.0;
  t.h02 = delta2 <= 0.0;
  t.h0c = scale.pooled(delta1, delta2) <= 0.0;
  return t;
}

bool ump_rejects(const DerivedScale& scale, double alpha, double z1, double z2) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("ump_rejects: alpha must lie in (0,1)");
  }
  return scale.pooled(z1, z2) > norm_quantile(1.0 - alpha);
}

double n_min(const TrialDesign& design_template, bool round_up) {
  TrialDesign d = design_template;
  d.n = 1.0;  // placeholder so validate() passes
  d.validate();
  const double crit = norm_quantile(1.0 - d.alpha);
  const double target = 1.0 - d.beta;
  auto power = [&](double n) {
    d.n = n;
    const DerivedScale s = derive_scale(d);
    return norm_cdf(s.delta_c_min() - crit);
  };
  // Bracket: power is increasing in n and tends to 1.
  double lo = 1e-8, hi = 1.0;
  int expansions = 0;
  while (power(hi) < target) {
    hi *= 4.0;
    if (++expansions > 200) {
      throw std::runtime_error("n_min: bracket expansion failed");
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (power(mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= 1e-12 * hi) break;
  }
  return round_up ? std::ceil(hi) : hi;
}

}  // namespace optmtp
