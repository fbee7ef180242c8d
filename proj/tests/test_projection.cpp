#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "optmtp/solver.hpp"

using namespace optmtp;

namespace {

// Brute-force oracle: enumerate candidate active sets of the constraints
// {y_i >= 0} and {sum y <= 1} and pick the KKT-feasible minimizer.
std::vector<double> oracle_project(const std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> best;
  double best_dist = 1e300;
  for (int zero_mask = 0; zero_mask < (1 << n); ++zero_mask) {
    for (int cap_active = 0; cap_active <= 1; ++cap_active) {
      // Free coordinates equal v (possibly shifted by the cap multiplier).
      std::vector<double> y(n, 0.0);
      int free_count = 0;
      double free_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!(zero_mask & (1 << i))) {
          ++free_count;
          free_sum += v[i];
        }
      }
      double shift = 0.0;
      if (cap_active) {
        if (free_count == 0) continue;
        shift = (free_sum - 1.0) / free_count;
      }
      bool ok = true;
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!(zero_mask & (1 << i))) {
          y[i] = v[i] - shift;
          if (y[i] < -1e-12) ok = false;
          sum += y[i];
        }
      }
      if (!ok || sum > 1.0 + 1e-9) continue;
      double dist = 0.0;
      for (int i = 0; i < n; ++i) dist += (y[i] - v[i]) * (y[i] - v[i]);
      if (dist < best_dist) {
        best_dist = dist;
        best = y;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("block projection matches hand examples") {
  std::array<double, 6> a{0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  project_block(a.data(), 6);
  for (double x : a) CHECK(x == doctest::Approx(0.1));

  std::array<double, 6> b{2, 0, 0, 0, 0, 0};
  project_block(b.data(), 6);
  CHECK(b[0] == doctest::Approx(1.0));
  for (int i = 1; i < 6; ++i) CHECK(b[i] == doctest::Approx(0.0));

  std::array<double, 6> c{-1, -1, -1, -1, -1, -1};
  project_block(c.data(), 6);
  for (double x : c) CHECK(x == 0.0);
}

TEST_CASE("block projection against the active-set oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    std::vector<double> got = v;
    project_block(got.data(), n);
    const std::vector<double> want = oracle_project(v);
    for (int i = 0; i < n; ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("projection is idempotent and non-expansive") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::array<double, 6> x{}, y{};
    for (int i = 0; i < 6; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
    }
    std::array<double, 6> px = x, py = y;
    project_block(px.data(), 6);
    project_block(py.data(), 6);
    std::array<double, 6> ppx = px;
    project_block(ppx.data(), 6);
    double d_pp = 0, d_p = 0, d = 0;
    for (int i = 0; i < 6; ++i) {
      d_pp += std::pow(ppx[i] - px[i], 2);
      d_p += std::pow(px[i] - py[i], 2);
      d += std::pow(x[i] - y[i], 2);
    }
    CHECK(std::sqrt(d_pp) <= 1e-12);
    CHECK(std::sqrt(d_p) <= std::sqrt(d) + 1e-12);
  }
}
