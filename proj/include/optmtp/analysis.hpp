#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optmtp/constraint_grid.hpp"
#include "optmtp/lp.hpp"
#include "optmtp/procedures.hpp"
#include "optmtp/solver.hpp"

// Post-solve certification: monotone extension of a solved procedure beyond
// the bounded region, rigorous familywise-error verification over the
// continuum, the dual-based lower bound on the undiscretized Bayes risk, and
// the auxiliary LP that extends rejection regions outward.

namespace optmtp {

// Monotone closure of a cell-constant procedure. Rejection of the first
// subpopulation null extends rightward along each grid row; the second
// extends upward along each grid column; the combined null extends into the
// upper-right closure (a staircase unbounded up and right). Randomized cells
// enter through their conservative envelope (any action with mass > 1e-6).
struct ExtendedProcedure {
  DiscreteProcedure base;
  bool randomized_base = false;

  // Per grid row (z2 cell): smallest z1 with H01 rejected, +inf if none.
  std::vector<double> h01_threshold;
  // Per grid column (z1 cell): smallest z2 with H02 rejected.
  std::vector<double> h02_threshold;
  // Per grid row: staircase threshold for H0C (nonincreasing in the row).
  std::vector<double> h0c_stair;

  std::uint8_t rejects(double z1, double z2) const;
};

ExtendedProcedure extend_procedure(const DiscreteProcedure& base);

// Plane decomposition into the grid cells plus the outer bands, with the
// extension's rejected set constant on each super-cell. Row-major with
// y-index fastest: masks[ix * (ny + 2) + iy].
struct ExtensionCells {
  std::vector<double> xcuts;  // -inf, grid edges, +inf
  std::vector<double> ycuts;
  std::vector<std::uint8_t> masks;

  std::size_t nx() const { return xcuts.size() - 1; }
  std::size_t ny() const { return ycuts.size() - 1; }
};

ExtensionCells extension_cells(const ExtendedProcedure& ext);

// Probability that the extension's rejected set satisfies a predicate mask
// intersection, i.e. P[rejects & mask != 0] under means (d1, d2).
double ext_event_prob(const ExtensionCells& cells, double d1, double d2,
                      std::uint8_t mask);

double evaluate_power(const ExtendedProcedure& ext, double d1, double d2,
                      std::uint8_t hypothesis);
double expected_loss(const ExtendedProcedure& ext, const LossSpec& loss,
                     double d1, double d2);
double evaluate_bayes_risk(const ExtendedProcedure& ext, const LossSpec& loss,
                           const Prior& prior);
double fwer_at(const ExtendedProcedure& ext, const DerivedScale& scale,
               double d1, double d2);

// Familywise-error verification of an extended procedure over the continuum.
// The three null-boundary lines are swept at spacing fine_tau inside
// [-b_prime, b_prime]^2; the continuum bound adds the derivative margin
// sqrt(2/pi) * fine_tau (the directional derivative of any rejection
// probability along a unit direction is at most E|N(0,1)|). Outside the
// sweep box the rate is bounded by 2*Phi(-2) + 2*Phi(-3) once the
// tail-containment geometry below holds.
struct FwerVerification {
  double max_grid_fwer = 0;
  double argmax_d1 = 0, argmax_d2 = 0;
  double margin = 0;
  double outside_bound = 0;
  bool tail_containment_ok = false;
  double certified_bound = 0;
  bool pass = false;
  std::size_t points = 0;
};

// Verifies that every rectangle [d1 - 2, d1 + 2] x [d2 - 3, d2 + 3] centered
// on a boundary point outside the sweep box avoids the rejection regions of
// the nulls true there (checked through conservative band geometry on the
// extension's thresholds).
bool check_tail_containment(const ExtendedProcedure& ext,
                            const DerivedScale& scale, double b_prime);

FwerVerification verify_fwer(const ExtendedProcedure& ext,
                             const DerivedScale& scale, double alpha,
                             double fine_tau = 1e-4, double b_prime = 8.0);

// Grid FWER sweep for a raw discrete procedure (no extension argument):
// returns the max over the same boundary sweep, without a continuum claim.
double max_grid_fwer(const DiscreteProcedure& proc, const DerivedScale& scale,
                     double fine_tau, double b_prime);

// Dual-based lower bound on the Bayes risk of the original (continuum)
// problem, from the solved LP's nonnegative duals. The pointwise minimizer
// over all 8 subsets of the bracketed integrand is integrated over z with
// escalating Gauss-Legendre panels.
struct DualCertificate {
  double nu_power = 0;
  std::vector<GridPoint> active_points;
  std::vector<double> active_duals;
  double lower_bound = 0;
  double primal_risk = 0;
  double bound_gap = 0;
  double quadrature_error = 0;  // escalation residual + tail estimate
};

DualCertificate dual_lower_bound(const LpSolution& solution, const SparseLp& lp,
                                 const LossSpec& loss, const Prior& prior,
                                 const DerivedScale& scale,
                                 double one_minus_beta);

// Auxiliary LP over the annulus between the solved box and a larger box:
// the base procedure is frozen inside, only the new cells are optimized.
struct RegionExtension {
  DiscreteProcedure combined;  // on the enlarged grid
  std::size_t annulus_cells = 0;
  double base_risk = 0;
  double extended_risk = 0;
  LpSolution solution;
};

RegionExtension extend_region_lp(const DiscreteProcedure& base,
                                 const TrialDesign& design,
                                 const LossSpec& loss, const Prior& prior,
                                 double b_prime, double tau_g,
                                 const BuildOptions& build_opts,
                                 const SolverConfig& solver_config);

}  // namespace optmtp
