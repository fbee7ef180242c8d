#pragma once

#include <vector>

// Test-only LP oracle: a textbook full-tableau two-phase simplex with
// Bland's rule, fully independent of the production solver. Solves
//   maximize c'x  s.t.  A x <= b,  x >= 0
// with bounds supplied as explicit rows by the caller.

namespace optmtp::testing {

struct OracleResult {
  enum class Status { optimal, infeasible, unbounded } status;
  double objective = 0;
  std::vector<double> x;
};

OracleResult oracle_solve(const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& rhs,
                          const std::vector<double>& c);

}  // namespace optmtp::testing
