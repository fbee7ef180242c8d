#include "optmtp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace optmtp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarStatus { basic, lower, upper };

class Simplex {
 public:
  Simplex(const SimplexProblem& p, const SimplexOptions& opt)
      : p_(p), opt_(opt), m_(p.m) {
    n_struct_ = static_cast<int>(p.cols.size());
    n_total_ = n_struct_ + m_;  // + slacks; artificials appended on demand
    status_.assign(n_total_, VarStatus::lower);
    value_.assign(n_total_, 0.0);
    upper_.resize(n_total_);
    for (int j = 0; j < n_struct_; ++j) upper_[j] = p.upper[j];
    for (int i = 0; i < m_; ++i) upper_[n_struct_ + i] = kInf;
  }

  SimplexResult run() {
    for (int attempt = 0; attempt < 3; ++attempt) {
      try {
        return run_once();
      } catch (const std::runtime_error&) {
        // Singular basis from a degenerate pivot sequence: fall back to a
        // cold start without the crash hints.
        reset_state();
      }
    }
    return run_once();
  }

 private:
  void reset_state() {
    // Demote basic variables to their lower bound but keep every nonbasic
    // status, so the restart resumes near the current point; artificials are
    // rebuilt by crash() where the residuals demand them.
    const int plain = n_struct_ + m_;
    for (int j = 0; j < plain; ++j) {
      if (status_[j] == VarStatus::basic) {
        status_[j] = VarStatus::lower;
        value_[j] = 0.0;
      }
    }
    n_total_ = plain;
    need_phase1_ = false;
    art_row_.clear();
    status_.resize(n_total_);
    value_.resize(n_total_);
    upper_.resize(n_total_);
    hints_disabled_ = true;
  }

  SimplexResult run_once() {
    crash();
    SimplexResult res;
    if (need_phase1_) {
      const bool ok = iterate(/*phase1=*/true);
      if (!ok) {
        res.status = SimplexStatus::numerical;
        return res;
      }
      const double resid = phase1_objective();
      if (resid > 1e-7) {
        res.status = SimplexStatus::infeasible;
        res.infeasibility = resid;
        res.duals = duals(/*phase1=*/true);
        res.iterations = iterations_;
        finalize_x(res);
        return res;
      }
      freeze_artificials();
    }
    if (iterations_ >= opt_.max_iters) {
      res.status = SimplexStatus::iteration_limit;
      finalize_x(res);
      return res;
    }
    const bool ok = iterate(/*phase1=*/false);
    res.status = ok ? (iterations_ >= opt_.max_iters
                           ? SimplexStatus::iteration_limit
                           : SimplexStatus::optimal)
                    : SimplexStatus::numerical;
    res.duals = duals(/*phase1=*/false);
    res.iterations = iterations_;
    finalize_x(res);
    return res;
  }

  double obj_coeff(int var, bool phase1) const {
    if (phase1) return var >= art_base_ ? -1.0 : 0.0;
    if (var < n_struct_) return p_.c[var];
    return 0.0;
  }

  // Column of any variable in constraint space.
  void scatter_column(int var, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (var < n_struct_) {
      for (const auto& [row, a] : p_.cols[var].entries) out[row] = a;
    } else if (var < n_struct_ + m_) {
      out[var - n_struct_] = 1.0;
    } else {
      out[art_row_[var - art_base_]] = -1.0;
    }
  }

  void crash() {
    // Start structural variables at requested bounds, slacks basic.
    if (!hints_disabled_) for (int j : opt_.at_upper) {
      if (!std::isfinite(upper_[j])) continue;
      status_[j] = VarStatus::upper;
      value_[j] = upper_[j];
    }
    std::vector<double> resid = p_.rhs;
    for (int j = 0; j < n_struct_; ++j) {
      if (value_[j] == 0.0) continue;
      for (const auto& [row, a] : p_.cols[j].entries) resid[row] -= a * value_[j];
    }
    basis_.resize(m_);
    art_base_ = n_total_;
    for (int i = 0; i < m_; ++i) {
      if (resid[i] >= 0.0) {
        basis_[i] = n_struct_ + i;  // slack
        value_[n_struct_ + i] = resid[i];
        status_[n_struct_ + i] = VarStatus::basic;
      } else {
        // Artificial with coefficient -1 keeps the basis value positive.
        const int var = n_total_++;
        art_row_.push_back(i);
        upper_.push_back(kInf);
        status_.push_back(VarStatus::basic);
        value_.push_back(-resid[i]);
        basis_[i] = var;
        need_phase1_ = true;
      }
    }
    refactorize();
  }

  void refactorize() {
    // Dense Gauss-Jordan inverse of the basis matrix.
    std::vector<double> B(static_cast<size_t>(m_) * m_, 0.0);
    std::vector<double> col(m_);
    for (int i = 0; i < m_; ++i) {
      scatter_column(basis_[i], col);
      for (int r = 0; r < m_; ++r) B[static_cast<size_t>(r) * m_ + i] = col[r];
    }
    binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
    for (int colk = 0; colk < m_; ++colk) {
      int piv = colk;
      double best = std::fabs(B[static_cast<size_t>(colk) * m_ + colk]);
      for (int r = colk + 1; r < m_; ++r) {
        const double v = std::fabs(B[static_cast<size_t>(r) * m_ + colk]);
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (best < 1e-13) throw std::runtime_error("simplex: singular basis");
      if (piv != colk) {
        for (int j2 = 0; j2 < m_; ++j2) {
          std::swap(B[static_cast<size_t>(piv) * m_ + j2],
                    B[static_cast<size_t>(colk) * m_ + j2]);
          std::swap(binv_[static_cast<size_t>(piv) * m_ + j2],
                    binv_[static_cast<size_t>(colk) * m_ + j2]);
        }
      }
      const double d = B[static_cast<size_t>(colk) * m_ + colk];
      for (int j2 = 0; j2 < m_; ++j2) {
        B[static_cast<size_t>(colk) * m_ + j2] /= d;
        binv_[static_cast<size_t>(colk) * m_ + j2] /= d;
      }
      for (int r = 0; r < m_; ++r) {
        if (r == colk) continue;
        const double f = B[static_cast<size_t>(r) * m_ + colk];
        if (f == 0.0) continue;
        for (int j2 = 0; j2 < m_; ++j2) {
          B[static_cast<size_t>(r) * m_ + j2] -=
              f * B[static_cast<size_t>(colk) * m_ + j2];
          binv_[static_cast<size_t>(r) * m_ + j2] -=
              f * binv_[static_cast<size_t>(colk) * m_ + j2];
        }
      }
    }
    recompute_basic_values();
  }

  void recompute_basic_values() {
    std::vector<double> resid = p_.rhs;
    for (int j = 0; j < n_total_; ++j) {
      if (status_[j] == VarStatus::basic || value_[j] == 0.0) continue;
      if (j < n_struct_) {
        for (const auto& [row, a] : p_.cols[j].entries) resid[row] -= a * value_[j];
      } else if (j < n_struct_ + m_) {
        resid[j - n_struct_] -= value_[j];
      } else {
        resid[art_row_[j - art_base_]] += value_[j];
      }
    }
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      const double* row = binv_.data() + static_cast<size_t>(i) * m_;
      for (int r = 0; r < m_; ++r) v += row[r] * resid[r];
      value_[basis_[i]] = v;
    }
  }

  std::vector<double> duals(bool phase1) const {
    std::vector<double> y(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double cb = obj_coeff(basis_[i], phase1);
      if (cb == 0.0) continue;
      const double* row = binv_.data() + static_cast<size_t>(i) * m_;
      for (int r = 0; r < m_; ++r) y[r] += cb * row[r];
    }
    return y;
  }

  double reduced_cost(int j, const std::vector<double>& y, bool phase1) const {
    double d = obj_coeff(j, phase1);
    if (j < n_struct_) {
      for (const auto& [row, a] : p_.cols[j].entries) d -= y[row] * a;
    } else if (j < n_struct_ + m_) {
      d -= y[j - n_struct_];
    } else {
      d += y[art_row_[j - art_base_]];
    }
    return d;
  }

  double phase1_objective() const {
    double s = 0.0;
    for (int j = art_base_; j < n_total_; ++j) s += value_[j];
    return s;
  }

  void freeze_artificials() {
    // Artificials can never re-enter: clamp their range to {0}.
    for (int j = art_base_; j < n_total_; ++j) {
      upper_[j] = 0.0;
      if (status_[j] != VarStatus::basic) {
        status_[j] = VarStatus::lower;
        value_[j] = 0.0;
      }
    }
  }

  // Returns false on numerical breakdown; true when optimal or iteration cap.
  bool iterate(bool phase1) {
    int degenerate_run = 0;
    bool bland = false;
    std::vector<double> w(m_);
    int since_refactor = 0;
    while (iterations_ < opt_.max_iters) {
      if (phase1 && phase1_objective() <= 1e-10) return true;
      const std::vector<double> y = duals(phase1);
      int enter = -1;
      double best = opt_.tol;
      int dir = +1;
      for (int j = 0; j < n_total_; ++j) {
        if (status_[j] == VarStatus::basic) continue;
        if (upper_[j] == 0.0 && j >= art_base_) continue;
        const double d = reduced_cost(j, y, phase1);
        if (status_[j] == VarStatus::lower && d > opt_.tol) {
          if (bland) {
            enter = j;
            dir = +1;
            break;
          }
          if (d > best) {
            best = d;
            enter = j;
            dir = +1;
          }
        } else if (status_[j] == VarStatus::upper && d < -opt_.tol) {
          if (bland) {
            enter = j;
            dir = -1;
            break;
          }
          if (-d > best) {
            best = -d;
            enter = j;
            dir = -1;
          }
        }
      }
      if (enter < 0) return true;  // optimal for this phase

      scatter_column(enter, w);
      // FTRAN: w <- B^{-1} a_enter.
      std::vector<double> ftran(m_, 0.0);
      for (int i = 0; i < m_; ++i) {
        double v = 0.0;
        const double* row = binv_.data() + static_cast<size_t>(i) * m_;
        for (int r = 0; r < m_; ++r) v += row[r] * w[r];
        ftran[i] = v;
      }

      // Ratio test. Entering moves by t in direction dir; basic values move
      // by -dir * t * ftran.
      double t_max = upper_[enter] == kInf ? kInf : upper_[enter];
      int leave = -1;        // basis position
      int leave_to = 0;      // -1 -> lower, +1 -> upper
      double leave_piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double step = -dir * ftran[i];
        if (std::fabs(step) <= 1e-9) continue;
        const int bv = basis_[i];
        double limit;
        int to;
        if (step < 0.0) {  // decreasing toward lower bound 0
          limit = value_[bv] / (-step);
          to = -1;
        } else {  // increasing toward upper bound
          if (upper_[bv] == kInf) continue;
          limit = (upper_[bv] - value_[bv]) / step;
          to = +1;
        }
        if (limit < 0.0) limit = 0.0;
        if (limit > t_max + 1e-12) continue;
        bool take;
        if (limit < t_max - 1e-12) {
          take = true;  // strictly tighter
        } else if (leave < 0) {
          take = true;  // ties the entering bound limit
        } else if (bland) {
          take = basis_[i] < basis_[leave];  // anti-cycling order
        } else {
          take = std::fabs(ftran[i]) > std::fabs(leave_piv);  // stability
        }
        if (take) {
          t_max = std::min(t_max, limit);
          leave = i;
          leave_to = to;
          leave_piv = ftran[i];
        }
      }
      if (t_max == kInf) return false;  // unbounded: numerical trouble here

      ++iterations_;
      if (t_max <= 1e-12) {
        ++degenerate_run;
        if (degenerate_run > 400) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      // Apply the step.
      for (int i = 0; i < m_; ++i) {
        value_[basis_[i]] -= dir * t_max * ftran[i];
      }
      value_[enter] += dir * t_max;

      if (leave < 0) {
        // Bound flip, basis unchanged.
        status_[enter] =
            (status_[enter] == VarStatus::lower) ? VarStatus::upper
                                                 : VarStatus::lower;
        value_[enter] = status_[enter] == VarStatus::upper ? upper_[enter] : 0.0;
        continue;
      }

      const int out_var = basis_[leave];
      status_[out_var] = leave_to < 0 ? VarStatus::lower : VarStatus::upper;
      value_[out_var] = leave_to < 0 ? 0.0 : upper_[out_var];
      basis_[leave] = enter;
      status_[enter] = VarStatus::basic;

      // Pivot update of B^{-1}.
      const double piv = ftran[leave];
      if (std::fabs(piv) < 1e-9) {
        refactorize();
        continue;
      }
      double* prow = binv_.data() + static_cast<size_t>(leave) * m_;
      for (int r = 0; r < m_; ++r) prow[r] /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        const double f = ftran[i];
        if (f == 0.0) continue;
        double* row = binv_.data() + static_cast<size_t>(i) * m_;
        for (int r = 0; r < m_; ++r) row[r] -= f * prow[r];
      }
      if (++since_refactor >= 50) {
        refactorize();
        since_refactor = 0;
      }
    }
    return true;
  }

  void finalize_x(SimplexResult& res) const {
    res.x.assign(n_struct_, 0.0);
    for (int j = 0; j < n_struct_; ++j) res.x[j] = value_[j];
    double obj = 0.0;
    for (int j = 0; j < n_struct_; ++j) obj += p_.c[j] * value_[j];
    res.objective = obj;
  }

  const SimplexProblem& p_;
  const SimplexOptions& opt_;
  int m_ = 0;
  int n_struct_ = 0;
  int n_total_ = 0;
  int art_base_ = 0;
  bool need_phase1_ = false;
  std::vector<int> art_row_;
  std::vector<VarStatus> status_;
  std::vector<double> value_;
  std::vector<double> upper_;
  std::vector<int> basis_;
  std::vector<double> binv_;  // m x m row-major
  int iterations_ = 0;
  bool hints_disabled_ = false;
};

}  // namespace

SimplexResult solve_simplex(const SimplexProblem& problem,
                            const SimplexOptions& options) {
  if (problem.m != static_cast<int>(problem.rhs.size()) ||
      problem.cols.size() != problem.c.size() ||
      problem.cols.size() != problem.upper.size()) {
    throw std::invalid_argument("solve_simplex: inconsistent problem sizes");
  }
  Simplex s(problem, options);
  return s.run();
}

}  // namespace optmtp
