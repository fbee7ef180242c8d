#pragma once

#include <utility>
#include <vector>

// Dense bounded-variable revised primal simplex for the restricted master
// problems of the block-decomposed solver:
//
//   maximize c'x   s.t.  A x <= b,  0 <= x <= u   (u may be +inf)
//
// Columns are given sparse. Two phases (artificials on rows whose slack
// start is infeasible), explicit basis inverse with periodic refactorization,
// Dantzig pricing with a Bland fallback after degenerate stretches.

namespace optmtp {

struct SimplexColumn {
  std::vector<std::pair<int, double>> entries;  // (row, coefficient)
};

struct SimplexProblem {
  int m = 0;                         // number of rows
  std::vector<double> rhs;           // length m, any sign
  std::vector<double> c;             // structural objective
  std::vector<double> upper;         // structural upper bounds
  std::vector<SimplexColumn> cols;   // structural columns
};

enum class SimplexStatus { optimal, infeasible, iteration_limit, numerical };

struct SimplexResult {
  SimplexStatus status = SimplexStatus::numerical;
  std::vector<double> x;       // structural values
  std::vector<double> duals;   // one per row; >= 0 at optimum of a <= system
  double objective = 0;
  int iterations = 0;
  double infeasibility = 0;    // phase-1 residual when infeasible
};

struct SimplexOptions {
  int max_iters = 500000;
  double tol = 1e-9;
  // Structural variables to start at their upper bound (warm crash).
  std::vector<int> at_upper;
};

SimplexResult solve_simplex(const SimplexProblem& problem,
                            const SimplexOptions& options = {});

}  // namespace optmtp
