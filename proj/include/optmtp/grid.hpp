#pragma once

#include <cstddef>
#include <vector>

// Rectangle partition of the bounded z-region. Cells are half-open
// [k*tau1, (k+1)*tau1) x [k'*tau2, (k'+1)*tau2) with integer (k, k').
//
// Per axis the grid holds 2b/tau + 1 cells (k = -b/tau .. +b/tau), i.e. one
// extra layer beyond b so the covered span is [-b, b + tau). This off-by-one
// reproduces the documented cell counts (501 cells per axis at b = 5,
// tau = 0.02) and is deliberate.

namespace optmtp {

struct Rect {
  double lo1, hi1, lo2, hi2;
  int k1, k2;  // integer cell index: lo = k * tau

  double center1() const { return 0.5 * (lo1 + hi1); }
  double center2() const { return 0.5 * (lo2 + hi2); }
};

class RectGrid {
 public:
  RectGrid() = default;
  // tau must divide b to ~1e-9 on both axes.
  RectGrid(double tau1, double tau2, double b);

  double tau1() const { return tau1_; }
  double tau2() const { return tau2_; }
  double b() const { return b_; }
  int cells1() const { return cells1_; }
  int cells2() const { return cells2_; }
  std::size_t size() const {
    return static_cast<std::size_t>(cells1_) * cells2_;
  }

  // Row-major ordering: cell (i1, i2) -> i1 * cells2 + i2, where i1, i2 are
  // zero-based offsets from the lowest cell on each axis.
  std::size_t index(int i1, int i2) const {
    return static_cast<std::size_t>(i1) * cells2_ + i2;
  }
  Rect rect(std::size_t idx) const;

  // Cell edges, size cells + 1, exact multiples of tau.
  const std::vector<double>& edges1() const { return edges1_; }
  const std::vector<double>& edges2() const { return edges2_; }

  double lo1() const { return edges1_.front(); }
  double hi1() const { return edges1_.back(); }
  double lo2() const { return edges2_.front(); }
  double hi2() const { return edges2_.back(); }

  // Zero-based axis offset of the cell containing z, or -1 if outside.
  int locate1(double z) const { return locate(edges1_, tau1_, z); }
  int locate2(double z) const { return locate(edges2_, tau2_, z); }

 private:
  static int locate(const std::vector<double>& edges, double tau, double z);

  double tau1_ = 0, tau2_ = 0, b_ = 0;
  int cells1_ = 0, cells2_ = 0;
  int k1_min_ = 0, k2_min_ = 0;
  std::vector<double> edges1_, edges2_;
};

}  // namespace optmtp
