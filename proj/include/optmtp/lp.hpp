#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "optmtp/action_space.hpp"
#include "optmtp/constraint_grid.hpp"
#include "optmtp/grid.hpp"
#include "optmtp/kernel.hpp"
#include "optmtp/loss.hpp"
#include "optmtp/prior.hpp"
#include "optmtp/trial.hpp"

// Assembly of the discretized problem as a canonical block-sparse LP:
//
//   maximize c'x   subject to   (dense rows) row.x <= rhs,
//                               (per rectangle) sum_j x_{r,j} <= 1, x >= 0,
//
// with x holding the free action masses of every rectangle in row-major
// rectangle order, n_free entries per rectangle. The objective gain
// c_{r,j} = integral over the prior of
//   [L(none; d) - L(action_j; d)] * P_d[(Z1,Z2) in r],
// so that Bayes risk = risk_offset - c'x with
// risk_offset = integral of L(none) over the prior. Dense rows are stored
// factored as (per-rectangle probability layer) x (per-action weights),
// which is exactly the structure the solver streams over.

namespace optmtp {

struct DenseRow {
  enum class Tag { fwer, power, extra };
  Tag tag = Tag::fwer;
  double d1 = 0, d2 = 0;               // generating point (fwer / extra rows)
  std::vector<double> cell_prob;       // one entry per rectangle
  std::vector<double> action_weight;   // n_free entries
  double rhs = 0;

  // Canonical-form coefficient of variable (rect, action j).
  double coeff(std::size_t rect, int j) const {
    return cell_prob[rect] * action_weight[j];
  }
  double dot(const std::vector<double>& x) const;
};

struct BuildOptions {
  // Familywise rows use rhs = alpha - margin. Negative means grid-aware
  // auto: max(1e-4, 0.1 * tau1 * tau2), covering the between-point bulge and
  // the monotone-closure fill that the continuum verification must absorb.
  double alpha_margin = -1.0;
  bool truncation_adjust = true;   // subtract P[outside grid] from power rhs
  // Cell-constant procedures cannot quite reach the continuum power limit;
  // when a solve comes back infeasible by at most this much, the power rhs
  // is relaxed by the certified shortfall and re-solved. Targets further out
  // than the budget stay infeasible.
  double power_relax_budget = 5e-3;
};

struct SparseLp {
  RectGrid grid;
  const ActionSpace* space = &ActionSpace::testing();
  std::vector<double> c;       // length n_v
  double risk_offset = 0;      // integral of L(none) over the prior
  std::vector<DenseRow> rows;  // n_d dense rows
  double alpha = 0.05;
  double alpha_eff = 0.05 - 1e-4;

  std::size_t n_v() const { return c.size(); }
  std::size_t n_d() const { return rows.size(); }
  // Structural constraint count: one simplex row per rectangle plus one
  // nonnegativity row per variable.
  std::size_t n_s() const { return grid.size() + n_v(); }
  int n_free() const { return space->n_free(); }

  std::size_t var(std::size_t rect, int j) const { return rect * n_free() + j; }
};

// Probability layer P_{d1,d2}[rect] for every rectangle, as the outer product
// of per-axis cell masses.
std::vector<double> cell_prob_layer(const RectGrid& grid, double d1, double d2);

// Familywise-error row at one constraint point: coefficient is the rectangle
// probability whenever the action errs at that point; rhs as supplied.
DenseRow build_fwer_row(const GridPoint& point, const RectGrid& grid,
                        const ActionSpace& space, const DerivedScale& scale,
                        double rhs);

// Combined-population power row at (delta1_min, delta2_min), stored negated
// so it reads <= like every other dense row. When truncation_adjust is set
// the rhs is 1 - beta minus the probability mass outside the grid at the
// power alternative (unattainable by any procedure confined to the grid and
// recovered later by the monotone extension).
DenseRow build_power_row(const RectGrid& grid, const ActionSpace& space,
                         const DerivedScale& scale, double one_minus_beta,
                         bool truncation_adjust);

// Expected-loss cap at one alternative (minimax rows):
// E_d L(M) <= v, canonicalized by moving L(none; d) to the right-hand side.
DenseRow build_risk_cap_row(double d1, double d2, double cap,
                            const RectGrid& grid, const ActionSpace& space,
                            const LossSpec& loss);

// Objective gains for all (rectangle, action) pairs, assembled from per-axis
// prior integrals; cross-checked against objective_coeff in tests.
std::vector<double> build_objective(const RectGrid& grid,
                                    const ActionSpace& space,
                                    const LossSpec& loss, const Prior& prior);

double objective_offset(const LossSpec& loss, const Prior& prior);

SparseLp build_lp(const TrialDesign& design, const RectGrid& grid,
                  const ConstraintGrid& cgrid, const LossSpec& loss,
                  const Prior& prior,
                  const std::vector<DenseRow>& extra_rows = {},
                  const BuildOptions& opts = {});

// Decision-theory variant: recommendation action space, and for each
// constraint point the row covers every nonempty recommendation whose
// aggregate population has no average benefit there. No power row.
SparseLp build_decision_lp(const TrialDesign& design, const RectGrid& grid,
                           const ConstraintGrid& cgrid, const LossSpec& loss,
                           const Prior& prior, const BuildOptions& opts = {});

// Dense-row activity of a given point, for witness checks and reports.
std::vector<double> row_values(const SparseLp& lp, const std::vector<double>& x);

// Writes the fully materialized LP in CPLEX-LP text format (small instances
// only; intended for cross-checks against third-party solvers).
void export_lp_text(const SparseLp& lp, std::ostream& os);

}  // namespace optmtp
