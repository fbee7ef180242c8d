#include "optmtp/normal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace optmtp {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_ccdf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("norm_quantile: p must lie in (0,1)");
  }
  if (p == 0.5) return 0.0;
  // Work on the lower-tail probability q = min(p, 1-p) and solve
  // norm_ccdf(x) = q for x >= 0.
  const bool upper = p > 0.5;
  const double q = upper ? 1.0 - p : p;
  // Asymptotic seed: x0 ~ sqrt(-2 log q) with a first-order correction.
  double t = std::sqrt(-2.0 * std::log(q));
  double x = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                     (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
  if (x < 0.0) x = 0.0;
  // Newton on f(x) = norm_ccdf(x) - q; f'(x) = -pdf(x).
  for (int it = 0; it < 8; ++it) {
    const double f = norm_ccdf(x) - q;
    const double d = norm_pdf(x);
    if (d <= 0.0) break;
    const double step = f / d;
    x += step;
    if (std::fabs(step) <= 1e-16 * (1.0 + std::fabs(x))) break;
  }
  return upper ? x : -x;
}

double interval_prob(double lo, double hi, double delta) {
  if (!(hi > lo)) return 0.0;
  const double a = lo - delta;
  const double b = hi - delta;
  double p;
  if (a >= 0.0) {
    p = 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  } else if (b <= 0.0) {
    p = 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  } else {
    // Straddles the mean: erf of both halves, no cancellation.
    p = 0.5 * (std::erf(b * kInvSqrt2) - std::erf(a * kInvSqrt2));
  }
  if (!(p > 1e-300)) return 0.0;
  return p < 1.0 ? p : 1.0;
}

}  // namespace optmtp
