#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "optmtp/action_space.hpp"
#include "optmtp/grid.hpp"
#include "optmtp/loss.hpp"
#include "optmtp/prior.hpp"
#include "optmtp/trial.hpp"

// Uniform representation and evaluation of testing / decision procedures:
// the LP optima (cell-constant, possibly randomized) and the closed-form
// literature baselines, with power, Bayes-risk and error-rate computation.

namespace optmtp {

struct DiscreteProcedure {
  RectGrid grid;
  const ActionSpace* space = &ActionSpace::testing();
  std::vector<double> action_mass;  // n_free entries per rectangle
  std::string label;

  int n_free() const { return space->n_free(); }
  double mass(std::size_t rect, int j) const {  // j in 1..n_free
    return action_mass[rect * n_free() + (j - 1)];
  }
  double none_mass(std::size_t rect) const;
  // Union of the actions a cell plays with probability > tol; used as the
  // conservative envelope when extending nearly-deterministic solutions.
  std::uint8_t envelope_mask(std::size_t rect, double tol = 1e-6) const;
  // Ordinal of the most likely action (0 = none).
  int argmax_action(std::size_t rect) const;
  bool randomized(double tol = 1e-6) const;

  void validate() const;
};

// Closed-form baselines. All take level-alpha thresholds on the z scale and
// use the pooled statistic z_c = rho1*z1 + rho2*z2.
struct AnalyticProcedure {
  enum class Kind { ump, rosenbaum, bergmann_hommel, song_chi };
  Kind kind = Kind::ump;
  DerivedScale scale;
  double alpha = 0.05;
  double alpha0 = 0.045, alpha1 = 0.1, alpha2 = 0.0;  // song_chi parameters
  std::string label;
};

// Rejected subset of one realization.
std::uint8_t analytic_rejects(const AnalyticProcedure& proc, double z1, double z2);

// The individual rules, exposed for direct testing.
std::uint8_t bergmann_hommel(double z1, double z2, double zc, double alpha);
std::uint8_t song_chi_augmented(double z1, double z2, double zc, double alpha0,
                                double alpha1, double alpha2);

AnalyticProcedure make_ump(const DerivedScale& scale, double alpha);
AnalyticProcedure rosenbaum(const DerivedScale& scale, double alpha);
AnalyticProcedure make_bergmann_hommel(const DerivedScale& scale, double alpha);
AnalyticProcedure make_song_chi(const DerivedScale& scale, double alpha0,
                                double alpha1, double alpha2);

// Largest alpha2 such that the closed-testing local test of the intersection
// null (gate at alpha0, window to alpha1, subpopulation-1 threshold alpha2)
// has size <= level over the null region. Bisection against a supremum
// computed on the null boundary.
double calibrate_song_chi_alpha2(const DerivedScale& scale, double alpha0,
                                 double alpha1, double level = 0.05);

// Probability that the rejected set of an analytic procedure satisfies a
// predicate, under z-means (d1, d2). Exact up to 1-D adaptive quadrature:
// for fixed z1 the rejected set is piecewise constant in z2 with analytic
// breakpoints, so the inner integral is a sum of CDF differences.
double analytic_event_prob(const AnalyticProcedure& proc, double d1, double d2,
                           const std::function<bool(std::uint8_t)>& predicate,
                           double tol = 1e-10);

// P[procedure rejects at least the given hypothesis] at an alternative.
double evaluate_power(const DiscreteProcedure& proc, double d1, double d2,
                      std::uint8_t hypothesis);
double evaluate_power(const AnalyticProcedure& proc, double d1, double d2,
                      std::uint8_t hypothesis);

// Expected loss at one alternative.
double expected_loss(const DiscreteProcedure& proc, const LossSpec& loss,
                     double d1, double d2);
double expected_loss(const AnalyticProcedure& proc, const LossSpec& loss,
                     double d1, double d2);

// Prior-averaged expected loss.
double evaluate_bayes_risk(const DiscreteProcedure& proc, const LossSpec& loss,
                           const Prior& prior);
double evaluate_bayes_risk(const AnalyticProcedure& proc, const LossSpec& loss,
                           const Prior& prior);

// P[rejecting at least one true null] at a parameter point.
double fwer_at(const DiscreteProcedure& proc, const DerivedScale& scale,
               double d1, double d2);
double fwer_at(const AnalyticProcedure& proc, const DerivedScale& scale,
               double d1, double d2);

// Cell-constant version of an analytic rule: each cell plays the rule's
// action at the cell center.
DiscreteProcedure discretize_analytic(const AnalyticProcedure& proc,
                                      const RectGrid& grid);

// Prior-weighted probability mass of cells whose corners and center disagree
// under the rule: a bound on the power/risk discretization error.
double straddle_mass(const AnalyticProcedure& proc, const RectGrid& grid,
                     const Prior& prior);

// Prior-weighted rectangle mass, sum_j w_j E_j P_delta[rect].
std::vector<double> prior_cell_mass(const RectGrid& grid, const Prior& prior);

// Persistence: procedure JSON (grid metadata + nonzero per-cell actions) and
// the plotting-oriented region CSV (one row per rectangle).
void write_procedure_json(const DiscreteProcedure& proc, std::ostream& os);
DiscreteProcedure read_procedure_json(std::istream& is);
void write_region_csv(const DiscreteProcedure& proc, std::ostream& os);

}  // namespace optmtp
