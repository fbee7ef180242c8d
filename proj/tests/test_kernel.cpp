#include <doctest.h>

#include <cmath>
#include <random>

#include "optmtp/kernel.hpp"
#include "optmtp/normal.hpp"
#include "optmtp/quad.hpp"

using namespace optmtp;

namespace {

// Independent oracle: 2-D adaptive quadrature of the bivariate normal
// density over the rectangle (never touches interval_prob).
double quadrature_rect_prob(double d1, double d2, const Rect& r) {
  auto inner = [&](double x) {
    return norm_pdf(x - d1) *
           integrate([&](double y) { return norm_pdf(y - d2); }, r.lo2, r.hi2,
                     1e-14);
  };
  return integrate(inner, r.lo1, r.hi1, 1e-13);
}

}  // namespace

TEST_CASE("rect_prob basics") {
  Rect quadrant{0.0, INFINITY, 0.0, INFINITY, 0, 0};
  CHECK(rect_prob(0.0, 0.0, quadrant) == doctest::Approx(0.25).epsilon(1e-15));

  Rect tiny{0.0, 0.02, 0.0, 0.02, 0, 0};
  const double expect = std::pow(norm_cdf(0.02) - 0.5, 2);
  CHECK(rect_prob(0.0, 0.0, tiny) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(rect_prob(0.0, 0.0, tiny) ==
        doctest::Approx(quadrature_rect_prob(0.0, 0.0, tiny)).epsilon(1e-10));
}

TEST_CASE("rect_prob against the quadrature oracle on random rectangles") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> span(-4.0, 4.0);
  std::uniform_real_distribution<double> width(0.01, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    Rect r;
    r.lo1 = span(rng);
    r.hi1 = r.lo1 + width(rng);
    r.lo2 = span(rng);
    r.hi2 = r.lo2 + width(rng);
    const double d1 = span(rng) * 0.5;
    const double d2 = span(rng) * 0.5;
    const double got = rect_prob(d1, d2, r);
    const double want = quadrature_rect_prob(d1, d2, r);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("partition additivity over the grid") {
  const RectGrid grid(0.5, 0.5, 5.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sum += rect_prob(0.0, 0.0, grid.rect(i));
  }
  const double span1 = norm_cdf(grid.hi1()) - norm_cdf(grid.lo1());
  const double span2 = norm_cdf(grid.hi2()) - norm_cdf(grid.lo2());
  CHECK(sum == doctest::Approx(span1 * span2).epsilon(1e-12));
  // The grid covers one cell beyond b, so this matches the box probability
  // to well inside 1e-6.
  const double box = std::pow(norm_cdf(5.0) - norm_cdf(-5.0), 2);
  CHECK(std::fabs(sum - box) < 1e-6);
}

TEST_CASE("translation invariance of rectangle probabilities") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> span(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    Rect r{span(rng), 0, span(rng), 0, 0, 0};
    r.hi1 = r.lo1 + 0.4;
    r.hi2 = r.lo2 + 0.7;
    const double d1 = span(rng), d2 = span(rng);
    Rect shifted{r.lo1 - d1, r.hi1 - d1, r.lo2 - d2, r.hi2 - d2, 0, 0};
    CHECK(rect_prob(d1, d2, r) ==
          doctest::Approx(rect_prob(0.0, 0.0, shifted)).epsilon(1e-12));
  }
}

TEST_CASE("grid dimensions and ordering") {
  const RectGrid grid(0.1, 0.1, 5.0);
  CHECK(grid.cells1() == 101);
  CHECK(grid.size() == 101u * 101u);
  // 501 cells per axis at the fine spacing.
  const RectGrid fine(0.02, 0.02, 5.0);
  CHECK(fine.cells1() == 501);
  CHECK(fine.size() == 251001u);
  // Edges are exact multiples of tau and the bounds are half-open.
  const Rect r0 = grid.rect(grid.index(0, 0));
  CHECK(r0.lo1 == doctest::Approx(-5.0));
  CHECK(grid.locate1(-5.0) == 0);
  CHECK(grid.locate1(5.0999) == 100);
  CHECK(grid.locate1(5.11) == -1);
  CHECK(grid.locate1(-5.0001) == -1);
  CHECK_THROWS(RectGrid(0.3, 0.3, 5.0));  // does not divide evenly
}

TEST_CASE("integrate_prior handles mixtures") {
  DerivedScale s;
  s.rho1 = s.rho2 = std::sqrt(0.5);
  s.delta1_min = s.delta2_min = 2.0;
  const Prior sym = builtin_prior("sym", s);
  CHECK(integrate_prior([](double, double) { return 1.0; }, sym) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // Indicator of the origin component picks out its weight.
  const double w0 = integrate_prior(
      [](double a, double b) { return a == 0.0 && b == 0.0 ? 1.0 : 0.0; }, sym);
  CHECK(w0 == doctest::Approx(0.25));
  // A single normal component integrates its own mean exactly.
  Prior normal;
  normal.weights = {1.0};
  normal.components = {
      {PriorComponent::Kind::normal, s.delta1_min, 0.0, 1.0, 0.7}};
  CHECK(integrate_prior([](double a, double) { return a; }, normal) ==
        doctest::Approx(s.delta1_min).epsilon(1e-10));
}

TEST_CASE("objective coefficients per the loss structure") {
  DerivedScale s;
  s.rho1 = s.rho2 = std::sqrt(0.5);
  s.delta1_min = s.delta2_min = 2.069;
  const LossSpec loss = LossSpec::indicator_loss(s);
  const Prior sym = builtin_prior("sym", s);
  Rect r{0.4, 0.9, -0.3, 0.1, 0, 0};

  // Rejecting everything has zero loss everywhere.
  CHECK(objective_coeff(r, kH01 | kH02 | kH0C, loss, sym) == 0.0);

  // Empty action under a point mass at the double alternative: both
  // penalties fire.
  const Prior point = Prior::point_mass(s.delta1_min, s.delta2_min);
  CHECK(objective_coeff(r, 0, loss, point) ==
        doctest::Approx(2.0 * rect_prob(s.delta1_min, s.delta2_min, r))
            .epsilon(1e-12));

  // {H01, H0C} under the symmetric prior leaves the H02 penalty at the two
  // components with a subpopulation-2 benefit.
  const double want = 0.25 * rect_prob(0.0, s.delta2_min, r) +
                      0.25 * rect_prob(s.delta1_min, s.delta2_min, r);
  CHECK(objective_coeff(r, kH01 | kH0C, loss, sym) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("axis-factored integrals agree with direct quadrature") {
  PriorComponent comp{PriorComponent::Kind::normal, 1.1, 0.0, 0.8, 0.5};
  std::vector<double> edges;
  for (int i = 0; i <= 12; ++i) edges.push_back(-1.5 + 0.35 * i);
  AxisGain gain{0.4, 0.7, -0.2};
  const double threshold = 1.3;
  const auto got = axis_prior_cell_integrals(edges, comp, 0, gain, threshold);
  for (std::size_t i = 0; i + 1 < edges.size(); i += 3) {
    const double want = integrate(
        [&](double d) {
          return gain.eval(d, threshold) * interval_prob(edges[i], edges[i + 1], d) *
                 norm_pdf((d - comp.mean1) / comp.sd1) / comp.sd1;
        },
        comp.mean1 - 9 * comp.sd1, comp.mean1 + 9 * comp.sd1, 1e-12);
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-8));
  }
  // Mass helper agrees with the closed form for a plain indicator.
  AxisGain ind{1.0, 0.0, 0.0};
  const double mass = axis_prior_gain_mass(comp, 0, ind, threshold);
  CHECK(mass ==
        doctest::Approx(norm_ccdf((threshold - comp.mean1) / comp.sd1))
            .epsilon(1e-12));
}
