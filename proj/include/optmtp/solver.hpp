#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "optmtp/lp.hpp"

// Two-phase solver for the block-sparse canonical LP.
//
// Phase one is a projected subgradient method: ascend along the objective
// while all dense rows hold, otherwise step against a uniformly random
// violated row, projecting each rectangle's action masses back onto
// {y >= 0, sum y <= 1} after every step.
//
// Phase two refines to a certified optimum: a working-set column generation
// over the per-rectangle blocks. Each round solves a small restricted master
// (dense rows plus one knapsack row per multi-action block) with a bounded
// revised simplex, then prices every (rectangle, action) pair against the
// dense-row duals. The Lagrangian bound
//   dual_obj = sum_i nu_i rhs_i + sum_r max(0, max_j (c_rj - nu' D_rj))
// is recomputed from scratch each round, so the reported duality gap is an
// independent certificate rather than a solver byproduct.

namespace optmtp {

struct SolverConfig {
  enum class StepRule { diminishing, polyak };
  StepRule step_rule = StepRule::diminishing;
  double step_scale = 0.0;       // gamma in eta_k = gamma / sqrt(k); 0 -> 1/|c|
  double polyak_target = 0.0;    // objective target for the polyak rule
  double improvement_tol = 1e-3; // windowed relative-improvement stop
  int improvement_window = 50;
  double gap_tol = 1e-8;
  int max_iters = 2000;          // subgradient iterations
  std::uint64_t rng_seed = 1;
  double feasibility_tol = 1e-4; // expected max violation at handoff
  double activity_tol = 1e-7;    // active-row report threshold
  int max_refine_rounds = 400;
  int simplex_max_iters = 2000000;
  std::string log_path;          // line-delimited iteration log (optional)
};

struct LpSolution {
  bool feasible = true;
  std::vector<double> x;        // full primal vector, n_v
  double objective = 0;         // c'x
  std::vector<double> duals;    // dense-row duals, nonnegative
  double dual_objective = 0;
  double gap = 0;               // |dual_objective - objective|
  std::vector<int> active_rows;
  double max_violation = 0;     // dense-row violation of x
  int subgradient_iters = 0;
  int refine_rounds = 0;
  int simplex_iters = 0;
  double wall_time = 0;
  // Infeasible case: positive phase-one residual and a Farkas-style price
  // vector nu >= 0 with sum_r min(0, min_j nu'D_rj) > nu'b.
  double infeasibility = 0;
  std::vector<double> farkas;
};

// Euclidean projection of one rectangle's free action masses onto
// {y >= 0, sum y <= 1}. In-place, any block size.
void project_block(double* block, int n);

// Applies project_block to every rectangle of a full primal vector.
void project_blocks(std::vector<double>& x, int n_free);

struct SubgradientResult {
  std::vector<double> x;
  int iterations = 0;
  double objective = 0;
  double max_violation = 0;
  bool stabilized = false;  // improvement criterion met before max_iters
};

SubgradientResult subgradient_phase(const SparseLp& lp,
                                    const SolverConfig& config);

// Exact refinement from a structurally feasible warm point. Throws
// std::invalid_argument if x_warm violates the block structure.
LpSolution refine_exact(const SparseLp& lp, const std::vector<double>& x_warm,
                        const SolverConfig& config);

// Convenience: subgradient phase followed by exact refinement.
LpSolution solve_lp(const SparseLp& lp, const SolverConfig& config);

// Feasibility probe for minimax bisection: ignores the objective and either
// produces a dense-feasible point or an infeasibility certificate.
LpSolution check_feasible(const SparseLp& lp, const SolverConfig& config,
                          const std::vector<double>* x_hint = nullptr);

// Solution checkpointing for warm restarts.
void write_checkpoint(const LpSolution& sol, std::ostream& os);
LpSolution read_checkpoint(std::istream& is);

}  // namespace optmtp
