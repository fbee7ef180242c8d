#include "optmtp/kernel.hpp"

#include <cmath>
#include <stdexcept>

#include "optmtp/quad.hpp"

namespace optmtp {

double rect_prob(double delta1, double delta2, const Rect& rect) {
  return interval_prob(rect.lo1, rect.hi1, delta1) *
         interval_prob(rect.lo2, rect.hi2, delta2);
}

std::vector<double> axis_cell_probs(const std::vector<double>& edges,
                                    double delta) {
  const size_t cells = edges.size() - 1;
  std::vector<double> out(cells);
  // One CDF evaluation per edge; adjacent differences with the same
  // tail-stable branch logic as interval_prob.
  for (size_t i = 0; i < cells; ++i) {
    out[i] = interval_prob(edges[i], edges[i + 1], delta);
  }
  return out;
}

namespace {

// Integrates vec-valued integrand f(delta)[cell] * marginal density over
// [a, b] with fixed-order Gauss-Legendre panels, accumulating into acc.
void panel_accumulate(const std::vector<double>& edges, double mean, double sd,
                      const AxisGain& gain, double threshold, double a, double b,
                      int panels, std::vector<double>& acc) {
  const QuadRule& rule = gauss_legendre(8);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double c = lo + 0.5 * width;
    for (size_t q = 0; q < rule.nodes.size(); ++q) {
      const double delta = c + 0.5 * width * rule.nodes[q];
      const double dens = norm_pdf((delta - mean) / sd) / sd;
      const double w = rule.weights[q] * 0.5 * width * dens *
                       gain.eval(delta, threshold);
      if (w == 0.0) continue;
      for (size_t i = 0; i + 1 < edges.size(); ++i) {
        acc[i] += w * interval_prob(edges[i], edges[i + 1], delta);
      }
    }
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a[i] - b[i]));
  }
  return m;
}

}  // namespace

std::vector<double> axis_prior_cell_integrals(const std::vector<double>& edges,
                                              const PriorComponent& comp,
                                              int axis, const AxisGain& gain,
                                              double threshold) {
  const size_t cells = edges.size() - 1;
  const double mean = axis == 0 ? comp.mean1 : comp.mean2;
  if (comp.kind == PriorComponent::Kind::point) {
    std::vector<double> out(cells, 0.0);
    const double g = gain.eval(mean, threshold);
    if (g != 0.0) {
      for (size_t i = 0; i < cells; ++i) {
        out[i] = g * interval_prob(edges[i], edges[i + 1], mean);
      }
    }
    return out;
  }
  const double sd = axis == 0 ? comp.sd1 : comp.sd2;
  const double lo = mean - 8.5 * sd;
  const double hi = mean + 8.5 * sd;
  // Split at the gain threshold so each panel sees a smooth integrand.
  std::vector<std::pair<double, double>> segments;
  if (threshold > lo && threshold < hi) {
    segments = {{lo, threshold}, {threshold, hi}};
  } else {
    segments = {{lo, hi}};
  }
  std::vector<double> prev;
  for (int panels = 16; panels <= 256; panels *= 2) {
    std::vector<double> acc(cells, 0.0);
    for (const auto& seg : segments) {
      panel_accumulate(edges, mean, sd, gain, threshold, seg.first, seg.second,
                       panels, acc);
    }
    if (!prev.empty() && max_abs_diff(prev, acc) <= 1e-9) return acc;
    prev = std::move(acc);
  }
  return prev;
}

double axis_prior_gain_mass(const PriorComponent& comp, int axis,
                            const AxisGain& gain, double threshold) {
  const double mean = axis == 0 ? comp.mean1 : comp.mean2;
  if (comp.kind == PriorComponent::Kind::point) {
    return gain.eval(mean, threshold);
  }
  const double sd = axis == 0 ? comp.sd1 : comp.sd2;
  // Closed form: E[(a + b*delta) 1[delta >= t]] + E[c 1[delta < t]].
  const double z = (threshold - mean) / sd;
  const double upper = norm_ccdf(z);
  const double lower = 1.0 - upper;
  const double mean_above = mean * upper + sd * norm_pdf(z);
  return gain.ind_above * upper + gain.lin_above * mean_above +
         gain.ind_below * lower;
}

double objective_coeff(const Rect& rect, std::uint8_t action,
                       const LossSpec& loss, const Prior& prior,
                       double rel_tol) {
  check_loss_bounded(loss, prior);
  auto f = [&](double d1, double d2) {
    return loss_eval(loss, action, d1, d2) * rect_prob(d1, d2, rect);
  };
  return integrate_prior(f, prior, rel_tol);
}

}  // namespace optmtp
