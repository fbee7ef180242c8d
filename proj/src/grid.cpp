#include "optmtp/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace optmtp {

namespace {

int half_cells(double tau, double b) {
  const double ratio = b / tau;
  const double rounded = std::round(ratio);
  if (std::fabs(ratio - rounded) > 1e-9 * std::max(1.0, std::fabs(ratio))) {
    throw std::invalid_argument("RectGrid: tau must divide b evenly");
  }
  return static_cast<int>(rounded);
}

std::vector<double> make_edges(double tau, int k_min, int cells) {
  std::vector<double> edges(cells + 1);
  for (int j = 0; j <= cells; ++j) edges[j] = tau * (k_min + j);
  return edges;
}

}  // namespace

RectGrid::RectGrid(double tau1, double tau2, double b) {
  if (!(tau1 > 0.0 && tau2 > 0.0 && b > 0.0)) {
    throw std::invalid_argument("RectGrid: tau and b must be positive");
  }
  tau1_ = tau1;
  tau2_ = tau2;
  b_ = b;
  const int h1 = half_cells(tau1, b);
  const int h2 = half_cells(tau2, b);
  cells1_ = 2 * h1 + 1;
  cells2_ = 2 * h2 + 1;
  k1_min_ = -h1;
  k2_min_ = -h2;
  edges1_ = make_edges(tau1, k1_min_, cells1_);
  edges2_ = make_edges(tau2, k2_min_, cells2_);
}

Rect RectGrid::rect(std::size_t idx) const {
  const int i1 = static_cast<int>(idx / cells2_);
  const int i2 = static_cast<int>(idx % cells2_);
  Rect r;
  r.k1 = k1_min_ + i1;
  r.k2 = k2_min_ + i2;
  r.lo1 = edges1_[i1];
  r.hi1 = edges1_[i1 + 1];
  r.lo2 = edges2_[i2];
  r.hi2 = edges2_[i2 + 1];
  return r;
}

int RectGrid::locate(const std::vector<double>& edges, double tau, double z) {
  if (z < edges.front() || z >= edges.back()) return -1;
  int i = static_cast<int>(std::floor((z - edges.front()) / tau));
  const int cells = static_cast<int>(edges.size()) - 1;
  if (i < 0) i = 0;
  if (i >= cells) i = cells - 1;
  // Guard against floating point at the cell boundary.
  if (z < edges[i]) --i;
  if (z >= edges[i + 1]) ++i;
  return (i >= 0 && i < cells) ? i : -1;
}

}  // namespace optmtp
