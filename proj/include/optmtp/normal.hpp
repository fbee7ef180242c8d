#pragma once

// Standard normal CDF / quantile / density helpers shared by every module.
// CDF accuracy target is ~1e-15 relative, including far tails, which is why
// everything is routed through erfc rather than naive 1 - Phi(x) differences.

namespace optmtp {

// P[Z <= x] for Z ~ N(0,1).
double norm_cdf(double x);

// P[Z > x], computed without cancellation in the upper tail.
double norm_ccdf(double x);

// Standard normal density.
double norm_pdf(double x);

// Inverse CDF. Valid for p in (0,1); relative accuracy ~1e-14 across the
// double range, via asymptotic seed plus Newton on the complementary CDF.
double norm_quantile(double p);

// P[lo <= Z < hi] for Z ~ N(delta, 1). Bounds may be +/-infinity.
// Evaluated through the complementary CDF whenever both endpoints are on
// the same side of the mean so tail differences keep relative accuracy.
// Results below 1e-300 are flushed to exact zero.
double interval_prob(double lo, double hi, double delta);

}  // namespace optmtp
