#include "oracle_lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace optmtp::testing {

namespace {

// Full dense tableau with slack columns s and (phase one) artificials z:
//   [A | I | Z | b]
// Bland's rule throughout, so termination is guaranteed.
class Tableau {
 public:
  Tableau(const std::vector<std::vector<double>>& rows,
          const std::vector<double>& rhs, const std::vector<double>& c)
      : m_(rows.size()), n_(c.size()) {
    for (std::size_t i = 0; i < m_; ++i) {
      if (rows[i].size() != n_) throw std::invalid_argument("oracle: row size");
    }
    n_slack_ = m_;
    // Artificials only for rows with negative rhs (after slack sign flip).
    for (std::size_t i = 0; i < m_; ++i) {
      if (rhs[i] < 0.0) art_rows_.push_back(i);
    }
    width_ = n_ + n_slack_ + art_rows_.size() + 1;
    t_.assign(m_ + 1, std::vector<double>(width_, 0.0));
    basis_.assign(m_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) t_[i][j] = sign * rows[i][j];
      t_[i][n_ + i] = sign;  // slack
      t_[i].back() = sign * rhs[i];
      basis_[i] = n_ + i;
    }
    for (std::size_t k = 0; k < art_rows_.size(); ++k) {
      t_[art_rows_[k]][n_ + n_slack_ + k] = 1.0;
      basis_[art_rows_[k]] = n_ + n_slack_ + k;
    }
    c_ = c;
  }

  OracleResult solve() {
    OracleResult out;
    if (!art_rows_.empty()) {
      // Phase 1: minimize sum of artificials.
      set_phase1_objective();
      if (!iterate()) {
        out.status = OracleResult::Status::unbounded;
        return out;
      }
      if (t_[m_].back() < -1e-8) {
        out.status = OracleResult::Status::infeasible;
        return out;
      }
      drive_out_artificials();
      art_frozen_ = true;
    }
    set_phase2_objective();
    if (!iterate()) {
      out.status = OracleResult::Status::unbounded;
      return out;
    }
    out.status = OracleResult::Status::optimal;
    out.x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) out.x[basis_[i]] = t_[i].back();
    }
    out.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) out.objective += c_[j] * out.x[j];
    return out;
  }

 private:
  void set_phase1_objective() {
    // maximize -sum z  <=>  row = sum of artificial rows.
    for (std::size_t j = 0; j < width_; ++j) t_[m_][j] = 0.0;
    for (std::size_t k = 0; k < art_rows_.size(); ++k) {
      t_[m_][n_ + n_slack_ + k] = -1.0;
    }
    // Make the objective row consistent with the basis.
    for (std::size_t k = 0; k < art_rows_.size(); ++k) {
      const std::size_t i = art_rows_[k];
      for (std::size_t j = 0; j < width_; ++j) t_[m_][j] += t_[i][j];
    }
  }

  void set_phase2_objective() {
    for (std::size_t j = 0; j < width_; ++j) t_[m_][j] = 0.0;
    for (std::size_t j = 0; j < n_; ++j) t_[m_][j] = c_[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = basis_[i] < n_ ? c_[basis_[i]] : 0.0;
      if (cb != 0.0) {
        for (std::size_t j = 0; j < width_; ++j) t_[m_][j] -= cb * t_[i][j];
      }
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_ + n_slack_) continue;
      // Pivot any non-artificial column into this (degenerate) row.
      for (std::size_t j = 0; j < n_ + n_slack_; ++j) {
        if (std::fabs(t_[i][j]) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  bool iterate() {
    for (int guard = 0; guard < 200000; ++guard) {
      std::size_t enter = width_;
      const std::size_t cols =
          art_frozen_ ? n_ + n_slack_ : width_ - 1;
      for (std::size_t j = 0; j < cols; ++j) {
        if (t_[m_][j] > 1e-9) {  // Bland: first improving column
          enter = j;
          break;
        }
      }
      if (enter == width_) return true;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][enter] > 1e-11) {
          const double ratio = t_[i].back() / t_[i][enter];
          if (ratio < best - 1e-12 ||
              (ratio < best + 1e-12 &&
               (leave == m_ || basis_[i] < basis_[leave]))) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave == m_) return false;  // unbounded
      pivot(leave, enter);
    }
    throw std::runtime_error("oracle: iteration guard tripped");
  }

  void pivot(std::size_t row, std::size_t col) {
    const double p = t_[row][col];
    for (std::size_t j = 0; j < width_; ++j) t_[row][j] /= p;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_[i][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) t_[i][j] -= f * t_[row][j];
    }
    basis_[row] = col;
  }

  std::size_t m_, n_, n_slack_ = 0, width_ = 0;
  std::vector<std::size_t> art_rows_;
  std::vector<std::vector<double>> t_;
  std::vector<std::size_t> basis_;
  std::vector<double> c_;
  bool art_frozen_ = false;
};

}  // namespace

OracleResult oracle_solve(const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& rhs,
                          const std::vector<double>& c) {
  Tableau t(rows, rhs, c);
  return t.solve();
}

}  // namespace optmtp::testing
