#pragma once

#include <cstdint>
#include <vector>

#include "optmtp/grid.hpp"
#include "optmtp/loss.hpp"
#include "optmtp/normal.hpp"
#include "optmtp/prior.hpp"

// Bivariate-normal coefficient engine. The z-statistics are independent with
// unit variances, so every rectangle probability factors into two 1-D
// interval probabilities, and mixture-prior integrals of (axis weight) x
// (rectangle probability) factor into per-axis integrals. All heavy LP
// coefficients are assembled from the per-axis vectors computed here.

namespace optmtp {

// P[(Z1,Z2) in rect] under mean (delta1, delta2), identity covariance.
double rect_prob(double delta1, double delta2, const Rect& rect);

// Interval probabilities of every cell on one axis for a given mean:
// out[i] = P[edges[i] <= Z < edges[i+1]], Z ~ N(delta, 1).
std::vector<double> axis_cell_probs(const std::vector<double>& edges,
                                    double delta);

// Per-axis integral of cell probabilities against one prior component's
// marginal, optionally weighted by an AxisGain factor:
//   out[i] = E_lambda[ g(delta) * P[cell_i under delta] ].
// Point components evaluate directly. Normal components integrate with
// Gauss-Legendre panels split at the gain threshold (the only kink), with
// panel-count doubling until 1e-9 relative agreement.
std::vector<double> axis_prior_cell_integrals(const std::vector<double>& edges,
                                              const PriorComponent& comp,
                                              int axis, const AxisGain& gain,
                                              double threshold);

// E_lambda[g(delta_axis)] for one component marginal (no cell factor), used
// for the constant part of the objective.
double axis_prior_gain_mass(const PriorComponent& comp, int axis,
                            const AxisGain& gain, double threshold);

// The Bayes-objective coefficient of one (rectangle, action) pair:
// integral over the prior of L(action; d1, d2) * rect_prob(d1, d2, rect).
// Generic path via integrate_prior; the LP builder uses the factored axis
// integrals above and is cross-checked against this in tests.
double objective_coeff(const Rect& rect, std::uint8_t action,
                       const LossSpec& loss, const Prior& prior,
                       double rel_tol = 1e-9);

}  // namespace optmtp
