#include "optmtp/quad.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace optmtp {

namespace {

QuadRule make_hermite(int n) {
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double eps = 1e-15;
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // Seeds for the roots in descending order (largest first).
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 0.7511255444649425;  // pi^{-1/4}
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= eps) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

QuadRule make_legendre(int n) {
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double eps = 1e-15;
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= eps) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

const QuadRule& cached(std::map<int, QuadRule>& cache, std::mutex& mu, int n,
                       QuadRule (*make)(int)) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make(n)).first;
  return it->second;
}

}  // namespace

const QuadRule& gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1 required");
  static std::map<int, QuadRule> cache;
  static std::mutex mu;
  return cached(cache, mu, n, make_hermite);
}

const QuadRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  static std::map<int, QuadRule> cache;
  static std::mutex mu;
  return cached(cache, mu, n, make_legendre);
}

double gauss_hermite_expect(const std::function<double(double)>& f, double mean,
                            double sd, int n) {
  const QuadRule& rule = gauss_hermite(n);
  const double scale = std::sqrt(2.0) * sd;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += rule.weights[i] * f(mean + scale * rule.nodes[i]);
  }
  return sum / std::sqrt(M_PI);
}

namespace {

double panel(const std::function<double(double)>& f, double a, double b) {
  const QuadRule& rule = gauss_legendre(16);
  const double h = 0.5 * (b - a);
  const double c = 0.5 * (a + b);
  double sum = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(c + h * rule.nodes[i]);
  }
  return h * sum;
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = panel(f, a, mid);
  const double right = panel(f, mid, b);
  const double refined = left + right;
  if (depth > 40 || std::fabs(refined - whole) <= tol) return refined;
  return adapt(f, a, mid, left, 0.5 * tol, depth + 1) +
         adapt(f, mid, b, right, 0.5 * tol, depth + 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (!(b > a)) return 0.0;
  return adapt(f, a, b, panel(f, a, b), tol, 0);
}

}  // namespace optmtp
