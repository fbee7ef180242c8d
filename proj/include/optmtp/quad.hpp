#pragma once

#include <functional>
#include <vector>

// Quadrature rules: Gauss-Hermite / Gauss-Legendre node tables (computed by
// Newton iteration on the orthogonal-polynomial recurrences) and a simple
// adaptive panel integrator built on Gauss-Legendre.

namespace optmtp {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Physicists' Gauss-Hermite rule: sum_i w_i f(x_i) ~ int f(x) exp(-x^2) dx.
const QuadRule& gauss_hermite(int n);

// Gauss-Legendre rule on [-1, 1].
const QuadRule& gauss_legendre(int n);

// Expectation of f under N(mean, sd^2) via the n-point Hermite rule.
double gauss_hermite_expect(const std::function<double(double)>& f, double mean,
                            double sd, int n);

// Adaptive integration of f over [a, b]: 16-point Gauss-Legendre per panel,
// bisect until the two-half refinement agrees with the parent to tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol);

}  // namespace optmtp
