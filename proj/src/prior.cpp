#include "optmtp/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "optmtp/quad.hpp"

namespace optmtp {

void Prior::validate() const {
  if (weights.size() != components.size() || weights.empty()) {
    throw std::invalid_argument("Prior: weights/components size mismatch");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("Prior: negative weight");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("Prior: weights must sum to 1");
  }
  for (const auto& c : components) {
    if (c.kind == PriorComponent::Kind::normal && !(c.sd1 > 0.0 && c.sd2 > 0.0)) {
      throw std::invalid_argument("Prior: normal component needs positive sd");
    }
  }
}

void Prior::support(double& lo1, double& hi1, double& lo2, double& hi2) const {
  lo1 = lo2 = 1e300;
  hi1 = hi2 = -1e300;
  for (const auto& c : components) {
    const double r1 = c.kind == PriorComponent::Kind::normal ? 8.0 * c.sd1 : 0.0;
    const double r2 = c.kind == PriorComponent::Kind::normal ? 8.0 * c.sd2 : 0.0;
    lo1 = std::min(lo1, c.mean1 - r1);
    hi1 = std::max(hi1, c.mean1 + r1);
    lo2 = std::min(lo2, c.mean2 - r2);
    hi2 = std::max(hi2, c.mean2 + r2);
  }
}

Prior Prior::point_mass(double d1, double d2) {
  Prior p;
  p.weights = {1.0};
  p.components = {{PriorComponent::Kind::point, d1, d2, 0.0, 0.0}};
  p.name = "point";
  return p;
}

namespace {

double normal_component_integral(const std::function<double(double, double)>& f,
                                 const PriorComponent& c, double rel_tol,
                                 int base_order) {
  double prev = 0.0;
  bool have_prev = false;
  for (int order = base_order; order <= 8 * base_order; order *= 2) {
    const QuadRule& rule = gauss_hermite(order);
    const double s1 = std::sqrt(2.0) * c.sd1;
    const double s2 = std::sqrt(2.0) * c.sd2;
    double sum = 0.0;
    for (int i = 0; i < order; ++i) {
      const double d1 = c.mean1 + s1 * rule.nodes[i];
      double inner = 0.0;
      for (int j = 0; j < order; ++j) {
        inner += rule.weights[j] * f(d1, c.mean2 + s2 * rule.nodes[j]);
      }
      sum += rule.weights[i] * inner;
    }
    sum /= M_PI;
    if (have_prev &&
        std::fabs(sum - prev) <= rel_tol * std::max(1.0, std::fabs(sum))) {
      return sum;
    }
    prev = sum;
    have_prev = true;
  }
  throw std::runtime_error(
      "integrate_prior: quadrature order escalation exhausted");
}

}  // namespace

double integrate_prior(const std::function<double(double, double)>& f,
                       const Prior& prior, double rel_tol, int base_order) {
  prior.validate();
  double total = 0.0;
  for (size_t j = 0; j < prior.components.size(); ++j) {
    const double w = prior.weights[j];
    if (w == 0.0) continue;
    const auto& c = prior.components[j];
    if (c.kind == PriorComponent::Kind::point) {
      total += w * f(c.mean1, c.mean2);
    } else {
      total += w * normal_component_integral(f, c, rel_tol, base_order);
    }
  }
  return total;
}

Prior builtin_prior(const std::string& name, const DerivedScale& scale) {
  const double d1 = scale.delta1_min;
  const double d2 = scale.delta2_min;
  Prior p;
  p.name = name;
  const bool normal = name == "sym-normal" || name == "asym-normal";
  PriorComponent::Kind kind =
      normal ? PriorComponent::Kind::normal : PriorComponent::Kind::point;
  const double s1 = normal ? d1 / 2.0 : 0.0;
  const double s2 = normal ? d2 / 2.0 : 0.0;
  p.components = {{kind, 0.0, 0.0, s1, s2},
                  {kind, d1, 0.0, s1, s2},
                  {kind, 0.0, d2, s1, s2},
                  {kind, d1, d2, s1, s2}};
  if (name == "sym" || name == "sym-normal") {
    p.weights = {0.25, 0.25, 0.25, 0.25};
  } else if (name == "asym" || name == "asym-normal") {
    p.weights = {0.2, 0.35, 0.1, 0.35};
  } else if (name == "subpop-only") {
    p.weights = {0.0, 0.5, 0.5, 0.0};
  } else {
    throw std::invalid_argument("builtin_prior: unknown prior '" + name + "'");
  }
  p.validate();
  return p;
}

}  // namespace optmtp
