#pragma once

#include <cstdint>
#include <utility>

// Trial-level statistical model: two subpopulations with normally distributed
// outcomes, the z-statistic scale derived from it, and the family of one-sided
// null hypotheses on the non-centrality plane.

namespace optmtp {

// Bitmask encoding of the hypothesis family. Subsets of the family are plain
// uint8 masks; the same encoding is reused for treatment-recommendation sets
// (bit k set <=> subpopulation k+1 recommended).
enum HypBit : std::uint8_t {
  kH01 = 1,
  kH02 = 2,
  kH0C = 4,
};

struct TrialDesign {
  double p1 = 0.5;          // population fraction of subpopulation 1
  double sigma2[2][2] = {{1.0, 1.0}, {1.0, 1.0}};  // [k][arm] outcome variances
  double n = 100.0;         // total sample size (positive real)
  double delta_min = 1.0;   // minimum clinically meaningful effect, > 0
  double alpha = 0.05;      // familywise error level
  double beta = 0.1;        // one minus required combined-population power

  double p2() const { return 1.0 - p1; }
  // Per-arm subpopulation sample size n_ka = p_k * n / 2.
  double arm_size(int k) const;
  void validate() const;  // throws std::invalid_argument on violation
};

// Quantities fixed by the design: z-statistic variance denominators v_k,
// the correlations rho_k of each subpopulation statistic with the pooled
// statistic, and the non-centrality values matching effect delta_min.
struct DerivedScale {
  double v1 = 0, v2 = 0;
  double rho1 = 0, rho2 = 0;
  double delta1_min = 0, delta2_min = 0;

  double delta_c_min() const { return rho1 * delta1_min + rho2 * delta2_min; }
  // Pooled mean rho1*d1 + rho2*d2 at an arbitrary alternative.
  double pooled(double d1, double d2) const { return rho1 * d1 + rho2 * d2; }
};

DerivedScale derive_scale(const TrialDesign& design);

// Which hypotheses are true at a given point of the non-centrality plane.
struct NullSet {
  bool h01 = false;
  bool h02 = false;
  bool h0c = false;

  std::uint8_t mask() const {
    return static_cast<std::uint8_t>((h01 ? kH01 : 0) | (h02 ? kH02 : 0) |
                                     (h0c ? kH0C : 0));
  }
  bool empty() const { return !h01 && !h02 && !h0c; }
};

// Non-centrality parameters (Delta_k / sqrt(v_k)) for given effect sizes.
std::pair<double, double> non_centrality(const TrialDesign& design, double Delta1,
                                         double Delta2);

// True nulls at (delta1, delta2); boundaries count as true (non-strict <=).
NullSet true_nulls(const DerivedScale& scale, double delta1, double delta2);

// The uniformly most powerful level-alpha test of the combined-population
// null: rejects iff rho1*z1 + rho2*z2 > Phi^{-1}(1 - alpha) (strict).
bool ump_rejects(const DerivedScale& scale, double alpha, double z1, double z2);

// Smallest real n such that the UMP combined-population test has power
// 1 - beta when both effects equal delta_min. Monotone bisection on n.
// With round_up set, the result is rounded up to the next integer.
double n_min(const TrialDesign& design_template, bool round_up = false);

}  // namespace optmtp
