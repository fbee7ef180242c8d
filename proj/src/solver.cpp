#include "optmtp/solver.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <stdexcept>

#include "optmtp/parallel.hpp"
#include "optmtp/simplex.hpp"

#include <json.hpp>

namespace optmtp {

void project_block(double* block, int n) {
  double sum_pos = 0.0;
  for (int i = 0; i < n; ++i) sum_pos += std::max(block[i], 0.0);
  if (sum_pos <= 1.0) {
    for (int i = 0; i < n; ++i) block[i] = std::max(block[i], 0.0);
    return;
  }
  // The cap is active: project onto the simplex {y >= 0, sum y = 1}.
  double sorted[16];
  for (int i = 0; i < n; ++i) sorted[i] = block[i];
  std::sort(sorted, sorted + n, std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (int k = 0; k < n; ++k) {
    cumsum += sorted[k];
    const double cand = (cumsum - 1.0) / (k + 1);
    if (sorted[k] - cand > 0.0) {
      theta = cand;
    } else {
      break;
    }
  }
  for (int i = 0; i < n; ++i) block[i] = std::max(block[i] - theta, 0.0);
}

void project_blocks(std::vector<double>& x, int n_free) {
  for (std::size_t off = 0; off < x.size(); off += n_free) {
    project_block(x.data() + off, n_free);
  }
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> dense_row_values(const SparseLp& lp,
                                     const std::vector<double>& x) {
  std::vector<double> vals(lp.rows.size());
  parallel_for(lp.rows.size(),
               [&](std::size_t i) { vals[i] = lp.rows[i].dot(x); });
  return vals;
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(dot(v, v));
}

double row_norm2_sq(const DenseRow& row) {
  double sp = 0.0;
  for (double p : row.cell_prob) sp += p * p;
  double sw = 0.0;
  for (double w : row.action_weight) sw += w * w;
  return sp * sw;
}

}  // namespace

SubgradientResult subgradient_phase(const SparseLp& lp,
                                    const SolverConfig& config) {
  const int nf = lp.n_free();
  std::vector<double> x(lp.n_v(), 0.0);
  std::mt19937_64 rng(config.rng_seed);
  const double cnorm = norm2(lp.c);
  const double gamma = config.step_scale > 0.0
                           ? config.step_scale
                           : (cnorm > 0.0 ? 1.0 / cnorm : 1.0);
  std::vector<double> row_norms(lp.rows.size(), -1.0);
  std::vector<double> history;
  history.reserve(config.max_iters + 1);

  std::ofstream log;
  if (!config.log_path.empty()) log.open(config.log_path);

  SubgradientResult res;
  for (int k = 1; k <= config.max_iters; ++k) {
    const std::vector<double> vals = dense_row_values(lp, x);
    std::vector<int> violated;
    double max_violation = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double v = vals[i] - lp.rows[i].rhs;
      if (v > max_violation) max_violation = v;
      if (v > 1e-12) violated.push_back(static_cast<int>(i));
    }
    const double obj = dot(lp.c, x);
    history.push_back(obj);
    res.iterations = k;
    res.objective = obj;
    res.max_violation = max_violation;

    double step = 0.0;
    if (violated.empty()) {
      if (cnorm == 0.0) {
        res.stabilized = true;
        if (log) log << k << ' ' << obj << ' ' << max_violation << " 0\n";
        break;  // zero objective and feasible: nothing to improve
      }
      if (config.step_rule == SolverConfig::StepRule::polyak &&
          config.polyak_target > obj) {
        step = (config.polyak_target - obj) / (cnorm * cnorm);
      } else {
        step = gamma / std::sqrt(static_cast<double>(k));
      }
      for (std::size_t j = 0; j < x.size(); ++j) x[j] += step * lp.c[j];
    } else {
      const int pick =
          violated[static_cast<std::size_t>(rng() % violated.size())];
      const DenseRow& row = lp.rows[pick];
      if (config.step_rule == SolverConfig::StepRule::polyak) {
        if (row_norms[pick] < 0.0) row_norms[pick] = row_norm2_sq(row);
        const double nrm = std::max(row_norms[pick], 1e-30);
        step = (vals[pick] - row.rhs) / nrm;
      } else {
        step = gamma / std::sqrt(static_cast<double>(k));
      }
      // x <- x + eta * g with g = -a_row.
      for (std::size_t r = 0; r < row.cell_prob.size(); ++r) {
        const double p = row.cell_prob[r];
        if (p == 0.0) continue;
        double* xr = x.data() + r * nf;
        for (int j = 0; j < nf; ++j) {
          const double w = row.action_weight[j];
          if (w != 0.0) xr[j] -= step * p * w;
        }
      }
    }
    project_blocks(x, nf);

    if (log) log << k << ' ' << obj << ' ' << max_violation << ' ' << step << '\n';

    const int w = config.improvement_window;
    if (k > w && max_violation <= config.feasibility_tol) {
      const double prev = history[k - 1 - w];
      const double rel =
          std::fabs(obj - prev) / std::max(std::fabs(obj), 1e-12);
      if (rel < config.improvement_tol) {
        res.stabilized = true;
        break;
      }
    }
  }
  res.x = std::move(x);
  return res;
}

namespace {

// Working-set column generation shared by refine_exact and check_feasible.
//
// Two nested working sets keep the restricted masters tiny:
//  - rows: only dense rows violated or near-active so far participate (a
//    handful are active at any optimum of these problems);
//  - columns: one action per rectangle in the common case. Dormant blocks
//    swap their candidate action in place; live blocks grow a knapsack row,
//    with the number allowed to grow per round capped and clearly
//    unattractive zero columns pruned, so the master stays small.
class BlockCg {
 public:
  BlockCg(const SparseLp& lp, const SolverConfig& config, bool feasibility_mode)
      : lp_(lp),
        cfg_(config),
        feas_mode_(feasibility_mode),
        nf_(lp.n_free()),
        n_rect_(lp.grid.size()),
        included_(lp.grid.size(), 0) {}

  LpSolution run(const std::vector<double>* warm) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool debug = std::getenv("OPTMTP_DEBUG") != nullptr;
    if (warm && !warm->empty()) seed_from(*warm);
    seed_rows(warm);
    LpSolution sol;
    std::vector<double> prev_x;
    if (warm && !warm->empty()) prev_x = *warm;
    for (int round = 1; round <= cfg_.max_refine_rounds; ++round) {
      sol.refine_rounds = round;
      Restricted master = build_restricted(prev_x);
      SimplexOptions sopt;
      sopt.max_iters = cfg_.simplex_max_iters;
      sopt.at_upper = master.at_upper;
      const auto tr = std::chrono::steady_clock::now();
      const SimplexResult sres = solve_simplex(master.problem, sopt);
      sol.simplex_iters += sres.iterations;
      if (debug) {
        std::fprintf(
            stderr,
            "[cg] round=%d rows=%zu cols=%zu m=%d hints=%zu iters=%d "
            "status=%d t=%.2fs\n",
            round, active_rows_.size(), master.problem.cols.size(),
            master.problem.m, master.at_upper.size(), sres.iterations,
            static_cast<int>(sres.status),
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tr)
                .count());
      }

      if (sres.status == SimplexStatus::infeasible) {
        std::vector<double> nu = expand_duals(sres.duals);
        const int added = price_phase1(nu);
        if (added == 0) {
          sol.feasible = false;
          sol.infeasibility = sres.infeasibility;
          sol.farkas = std::move(nu);
          // Keep the least-violation point: callers use it to warm-start a
          // relaxed re-solve.
          sol.x.assign(lp_.n_v(), 0.0);
          map_back(master, sres.x, sol.x);
          break;
        }
        continue;
      }
      if (sres.status != SimplexStatus::optimal) {
        throw std::runtime_error("refine_exact: restricted simplex failed");
      }

      std::vector<double> x(lp_.n_v(), 0.0);
      map_back(master, sres.x, x);
      prev_x = x;
      std::vector<double> nu = expand_duals(sres.duals);

      // Activate any violated dormant rows before trusting the iterate.
      const std::vector<double> vals = dense_row_values(lp_, x);
      int rows_added = 0;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        if (!row_active_[i] && vals[i] > lp_.rows[i].rhs + 1e-10) {
          row_active_[i] = true;
          active_rows_.push_back(static_cast<int>(i));
          ++rows_added;
        }
      }

      const double objective = feas_mode_ ? 0.0 : dot(lp_.c, x);
      const Pricing pricing = price(nu, x);

      sol.feasible = true;
      sol.x = std::move(x);
      sol.objective = objective;
      sol.duals = nu;
      sol.dual_objective = pricing.dual_objective;
      sol.gap = std::fabs(pricing.dual_objective - objective);

      if (rows_added == 0) {
        const bool converged = feas_mode_ ? true : sol.gap <= cfg_.gap_tol;
        if (converged || pricing.changed == 0) break;
      }
    }
    finish(sol, t0);
    return sol;
  }

 private:
  struct Restricted {
    SimplexProblem problem;
    std::vector<std::size_t> col_var;  // restricted column -> lp variable
    std::vector<int> at_upper;
  };

  struct Pricing {
    double dual_objective = 0;
    int changed = 0;
  };

  void seed_from(const std::vector<double>& x) {
    if (x.size() != lp_.n_v()) {
      throw std::invalid_argument("refine_exact: warm point has wrong size");
    }
    // Keep the working set lean: the dominant action per block, plus a
    // runner-up when the block is materially split. Anything else gets
    // priced back in by the generation loop if it matters.
    for (std::size_t r = 0; r < n_rect_; ++r) {
      double sum = 0.0;
      int best = -1, second = -1;
      for (int j = 0; j < nf_; ++j) {
        const double v = x[r * nf_ + j];
        if (v < -1e-9) {
          throw std::invalid_argument("refine_exact: warm point not in blocks");
        }
        sum += v;
        if (best < 0 || v > x[r * nf_ + best]) {
          second = best;
          best = j;
        } else if (second < 0 || v > x[r * nf_ + second]) {
          second = j;
        }
      }
      if (sum > 1.0 + 1e-7) {
        throw std::invalid_argument("refine_exact: warm point not in blocks");
      }
      if (best >= 0 && x[r * nf_ + best] > 1e-7) {
        included_[r] |= std::uint8_t(1) << best;
      }
      if (second >= 0 && x[r * nf_ + second] > 0.3) {
        included_[r] |= std::uint8_t(1) << second;
      }
    }
  }

  void seed_rows(const std::vector<double>* warm) {
    row_active_.assign(lp_.rows.size(), false);
    std::vector<double> vals;
    if (warm && !warm->empty()) {
      vals = dense_row_values(lp_, *warm);
    }
    for (std::size_t i = 0; i < lp_.rows.size(); ++i) {
      bool active = lp_.rows[i].tag != DenseRow::Tag::fwer;  // power and caps
      if (lp_.rows[i].d1 == 0.0 && lp_.rows[i].d2 == 0.0) active = true;
      if (!vals.empty() && vals[i] > lp_.rows[i].rhs - 1e-3) active = true;
      if (active) {
        row_active_[i] = true;
        active_rows_.push_back(static_cast<int>(i));
      }
    }
  }

  Restricted build_restricted(const std::vector<double>& prev_x) const {
    Restricted out;
    const std::size_t n_rows = active_rows_.size();

    // Within a block, actions indistinguishable across the active rows are
    // interchangeable up to their objective gain; keep only the best one so
    // the master never carries duplicate columns. A separating row brings
    // the loser back through pricing when it matters.
    std::vector<std::uint8_t> effective = included_;
    for (std::size_t r = 0; r < n_rect_; ++r) {
      if (std::popcount(static_cast<unsigned>(effective[r])) < 2) continue;
      for (int j1 = 0; j1 < nf_; ++j1) {
        if (!(effective[r] & (std::uint8_t(1) << j1))) continue;
        for (int j2 = j1 + 1; j2 < nf_; ++j2) {
          if (!(effective[r] & (std::uint8_t(1) << j2))) continue;
          bool same = true;
          for (std::size_t i = 0; i < n_rows && same; ++i) {
            const DenseRow& row = lp_.rows[active_rows_[i]];
            double a1 = row.coeff(r, j1);
            double a2 = row.coeff(r, j2);
            if (std::fabs(a1) <= 1e-17) a1 = 0.0;
            if (std::fabs(a2) <= 1e-17) a2 = 0.0;
            same = a1 == a2;
          }
          if (!same) continue;
          const double c1 = feas_mode_ ? 0.0 : lp_.c[r * nf_ + j1];
          const double c2 = feas_mode_ ? 0.0 : lp_.c[r * nf_ + j2];
          effective[r] &= ~(std::uint8_t(1) << (c1 >= c2 ? j2 : j1));
        }
      }
    }

    // Knapsack rows for blocks carrying more than one working action.
    std::vector<int> knap_row(n_rect_, -1);
    int extra = 0;
    for (std::size_t r = 0; r < n_rect_; ++r) {
      if (std::popcount(static_cast<unsigned>(effective[r])) >= 2) {
        knap_row[r] = static_cast<int>(n_rows) + extra++;
      }
    }
    SimplexProblem& sp = out.problem;
    sp.m = static_cast<int>(n_rows) + extra;
    sp.rhs.resize(sp.m);
    for (std::size_t i = 0; i < n_rows; ++i) {
      sp.rhs[i] = lp_.rows[active_rows_[i]].rhs;
    }
    for (int i = 0; i < extra; ++i) sp.rhs[n_rows + i] = 1.0;

    for (std::size_t r = 0; r < n_rect_; ++r) {
      if (!effective[r]) continue;
      for (int j = 0; j < nf_; ++j) {
        if (!(effective[r] & (std::uint8_t(1) << j))) continue;
        SimplexColumn col;
        for (std::size_t i = 0; i < n_rows; ++i) {
          const double a = lp_.rows[active_rows_[i]].coeff(r, j);
          if (std::fabs(a) > 1e-17) {
            col.entries.emplace_back(static_cast<int>(i), a);
          }
        }
        if (knap_row[r] >= 0) col.entries.emplace_back(knap_row[r], 1.0);
        const std::size_t var = r * nf_ + j;
        const int ci = static_cast<int>(sp.cols.size());
        sp.cols.push_back(std::move(col));
        sp.c.push_back(feas_mode_ ? 0.0 : lp_.c[var]);
        sp.upper.push_back(1.0);
        out.col_var.push_back(var);
        if (!prev_x.empty() && prev_x[var] > 0.9) {
          double siblings = 0.0;
          for (int j2 = 0; j2 < nf_; ++j2) {
            if (j2 != j) siblings += prev_x[r * nf_ + j2];
          }
          if (siblings < 0.05) out.at_upper.push_back(ci);
        }
      }
    }
    return out;
  }

  void map_back(const Restricted& master, const std::vector<double>& xr,
                std::vector<double>& x) const {
    for (std::size_t ci = 0; ci < master.col_var.size(); ++ci) {
      x[master.col_var[ci]] = xr[ci];
    }
  }

  std::vector<double> expand_duals(const std::vector<double>& y) const {
    std::vector<double> nu(lp_.rows.size(), 0.0);
    for (std::size_t i = 0; i < active_rows_.size() && i < y.size(); ++i) {
      nu[active_rows_[i]] = std::max(y[i], 0.0);
    }
    return nu;
  }

  // Reduced-gain layers: L_j[r] = sum_i nu_i * w_ij * p_i[r].
  std::vector<std::vector<double>> layers(const std::vector<double>& nu) const {
    std::vector<std::vector<double>> L(nf_, std::vector<double>(n_rect_, 0.0));
    for (std::size_t i = 0; i < lp_.rows.size(); ++i) {
      if (nu[i] == 0.0) continue;
      const DenseRow& row = lp_.rows[i];
      for (int j = 0; j < nf_; ++j) {
        const double f = nu[i] * row.action_weight[j];
        if (f == 0.0) continue;
        double* out = L[j].data();
        const double* p = row.cell_prob.data();
        for (std::size_t r = 0; r < n_rect_; ++r) out[r] += f * p[r];
      }
    }
    return L;
  }

  Pricing price(const std::vector<double>& nu, const std::vector<double>& x) {
    const std::vector<std::vector<double>> L = layers(nu);
    Pricing out;
    double bound = 0.0;
    for (std::size_t i = 0; i < lp_.rows.size(); ++i) {
      bound += nu[i] * lp_.rows[i].rhs;
    }
    // Blocks allowed to turn fractional this round; keeps the restricted
    // master's row count bounded.
    int multi_budget = 400;
    for (std::size_t r = 0; r < n_rect_; ++r) {
      double best = 0.0;
      int best_j = -1;
      double incl_best = 0.0;
      for (int j = 0; j < nf_; ++j) {
        const double rc = (feas_mode_ ? 0.0 : lp_.c[r * nf_ + j]) - L[j][r];
        if (rc > best) {
          best = rc;
          best_j = j;
        }
        if ((included_[r] & (std::uint8_t(1) << j)) && rc > incl_best) {
          incl_best = rc;
        }
      }
      bound += best;

      // Shrink multi-action blocks back to their carrying columns: at any
      // vertex only about as many blocks as active rows stay fractional, so
      // zero-value columns are baggage (pricing re-adds them if ever needed).
      if (std::popcount(static_cast<unsigned>(included_[r])) >= 2) {
        std::uint8_t keep = 0;
        for (int j = 0; j < nf_; ++j) {
          const std::uint8_t bit = std::uint8_t(1) << j;
          if ((included_[r] & bit) && x[r * nf_ + j] > 1e-9) keep |= bit;
        }
        if (keep) included_[r] = keep;
      }

      if (best_j < 0 || best <= incl_best + 1e-12) continue;
      const std::uint8_t bit = std::uint8_t(1) << best_j;
      if (included_[r] & bit) continue;
      double block_sum = 0.0;
      for (int j = 0; j < nf_; ++j) {
        if (included_[r] & (std::uint8_t(1) << j)) block_sum += x[r * nf_ + j];
      }
      if (block_sum < 1e-9) {
        included_[r] = bit;  // dormant block: plain swap, no knapsack row
        ++out.changed;
      } else if (multi_budget > 0) {
        included_[r] |= bit;  // live block: grow, the master trades mass
        --multi_budget;
        ++out.changed;
      }
      // Else defer to a later round.
    }
    out.dual_objective = bound;
    return out;
  }

  // Phase-one pricing: bring in actions that can reduce the infeasibility,
  // i.e. with negative priced coefficient under the phase-one duals.
  int price_phase1(const std::vector<double>& nu) {
    const std::vector<std::vector<double>> L = layers(nu);
    int added = 0;
    for (std::size_t r = 0; r < n_rect_; ++r) {
      double best = 0.0;
      int best_j = -1;
      for (int j = 0; j < nf_; ++j) {
        const double rc = -L[j][r];
        if (rc > best) {
          best = rc;
          best_j = j;
        }
      }
      if (best_j < 0 || best <= 1e-12) continue;
      const std::uint8_t bit = std::uint8_t(1) << best_j;
      if (included_[r] & bit) continue;
      if (!included_[r]) {
        included_[r] = bit;
        ++added;
      } else if (added < 800) {
        included_[r] |= bit;
        ++added;
      }
    }
    return added;
  }

  void finish(LpSolution& sol, std::chrono::steady_clock::time_point t0) const {
    if (sol.x.empty()) sol.x.assign(lp_.n_v(), 0.0);
    const std::vector<double> vals = dense_row_values(lp_, sol.x);
    sol.max_violation = 0.0;
    sol.active_rows.clear();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double resid = vals[i] - lp_.rows[i].rhs;
      sol.max_violation = std::max(sol.max_violation, resid);
      const double scale = std::max(1.0, std::fabs(lp_.rows[i].rhs));
      if (sol.feasible && std::fabs(resid) <= cfg_.activity_tol * scale) {
        sol.active_rows.push_back(static_cast<int>(i));
      }
    }
    sol.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }

  const SparseLp& lp_;
  const SolverConfig& cfg_;
  bool feas_mode_;
  int nf_;
  std::size_t n_rect_;
  std::vector<std::uint8_t> included_;  // per-rect action bitmask
  std::vector<int> active_rows_;
  std::vector<bool> row_active_;
};

}  // namespace

LpSolution refine_exact(const SparseLp& lp, const std::vector<double>& x_warm,
                        const SolverConfig& config) {
  BlockCg cg(lp, config, /*feasibility_mode=*/false);
  return cg.run(&x_warm);
}

LpSolution solve_lp(const SparseLp& lp, const SolverConfig& config) {
  const SubgradientResult warm = subgradient_phase(lp, config);
  LpSolution sol = refine_exact(lp, warm.x, config);
  sol.subgradient_iters = warm.iterations;
  return sol;
}

LpSolution check_feasible(const SparseLp& lp, const SolverConfig& config,
                          const std::vector<double>* x_hint) {
  BlockCg cg(lp, config, /*feasibility_mode=*/true);
  return cg.run(x_hint);
}

void write_checkpoint(const LpSolution& sol, std::ostream& os) {
  nlohmann::json j;
  j["feasible"] = sol.feasible;
  j["objective"] = sol.objective;
  j["dual_objective"] = sol.dual_objective;
  j["gap"] = sol.gap;
  j["x"] = sol.x;
  j["duals"] = sol.duals;
  os << j.dump();
}

LpSolution read_checkpoint(std::istream& is) {
  nlohmann::json j;
  is >> j;
  LpSolution sol;
  sol.feasible = j.at("feasible").get<bool>();
  sol.objective = j.at("objective").get<double>();
  sol.dual_objective = j.at("dual_objective").get<double>();
  sol.gap = j.at("gap").get<double>();
  sol.x = j.at("x").get<std::vector<double>>();
  sol.duals = j.at("duals").get<std::vector<double>>();
  return sol;
}

}  // namespace optmtp
