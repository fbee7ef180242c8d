#include <doctest.h>

#include <cmath>
#include <sstream>

#include "optmtp/kernel.hpp"
#include "optmtp/lp.hpp"
#include "optmtp/normal.hpp"
#include "optmtp/procedures.hpp"
#include "optmtp/quad.hpp"

using namespace optmtp;

namespace {

TrialDesign desk_design(double p1 = 0.5, double one_minus_beta = 0.9) {
  TrialDesign d;
  d.p1 = p1;
  d.delta_min = 1.0;
  d.alpha = 0.05;
  d.beta = 1.0 - one_minus_beta;
  TrialDesign ref = d;
  ref.beta = 0.1;
  ref.n = 1.0;
  d.n = n_min(ref);
  return d;
}

}  // namespace

TEST_CASE("constraint grid geometry and counts") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const ConstraintGrid g = make_constraint_grid(s, 0.32, 5.0);
  // Symmetric case at the default spacing: exactly 105 points.
  CHECK(g.size() == 105u);
  for (const GridPoint& pt : g.points) {
    CHECK_FALSE(pt.truth.empty());
    const bool on_line = std::fabs(pt.d1) < 1e-12 || std::fabs(pt.d2) < 1e-12 ||
                         std::fabs(s.pooled(pt.d1, pt.d2)) < 1e-9;
    CHECK(on_line);
    CHECK(std::fabs(pt.d1) <= 5.0 + 1e-9);
    CHECK(std::fabs(pt.d2) <= 5.0 + 1e-9);
  }
  // Origin deduplicated.
  int origins = 0;
  for (const GridPoint& pt : g.points) {
    if (pt.d1 == 0.0 && pt.d2 == 0.0) ++origins;
  }
  CHECK(origins == 1);
}

TEST_CASE("fwer row coefficient patterns") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(0.5, 0.5, 5.0);
  const ActionSpace& space = ActionSpace::testing();

  // Global null: every action is an error.
  GridPoint origin{0.0, 0.0, true_nulls(s, 0.0, 0.0), 1};
  const DenseRow row0 = build_fwer_row(origin, grid, space, s, 0.0499);
  for (int j = 0; j < 6; ++j) CHECK(row0.action_weight[j] == 1.0);

  // (d1, 0) with d1 > 0: only H02 is true; {H01} is not an error.
  GridPoint single{s.delta1_min, 0.0, true_nulls(s, s.delta1_min, 0.0), 1};
  const DenseRow row1 = build_fwer_row(single, grid, space, s, 0.0499);
  CHECK(row1.action_weight[0] == 0.0);  // {H01}
  CHECK(row1.action_weight[1] == 1.0);  // {H02}
  CHECK(row1.action_weight[2] == 0.0);  // {H0C}
  CHECK(row1.action_weight[3] == 0.0);  // {H01,H0C}
  CHECK(row1.action_weight[4] == 1.0);  // {H02,H0C}
  CHECK(row1.action_weight[5] == 1.0);  // full set

  // Third boundary line: H_TRUE = {H02, H0C}.
  const double t = 0.9;
  GridPoint third{s.rho2 * t, -s.rho1 * t,
                  true_nulls(s, s.rho2 * t, -s.rho1 * t), 3};
  const DenseRow row2 = build_fwer_row(third, grid, space, s, 0.0499);
  CHECK(row2.action_weight[0] == 0.0);  // {H01}
  CHECK(row2.action_weight[2] == 1.0);  // {H0C}
  CHECK(row2.action_weight[3] == 1.0);  // {H01,H0C}

  // Coefficients are the rectangle probabilities.
  const std::size_t idx = grid.index(10, 10);
  CHECK(row0.coeff(idx, 0) ==
        doctest::Approx(rect_prob(0.0, 0.0, grid.rect(idx))).epsilon(1e-14));
}

TEST_CASE("power row structure") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(0.1, 0.1, 5.0);
  const DenseRow row =
      build_power_row(grid, ActionSpace::testing(), s, 0.9, false);
  CHECK(row.action_weight[0] == 0.0);   // {H01}
  CHECK(row.action_weight[1] == 0.0);   // {H02}
  CHECK(row.action_weight[2] == -1.0);  // {H0C}
  CHECK(row.action_weight[3] == -1.0);
  CHECK(row.action_weight[4] == -1.0);
  CHECK(row.action_weight[5] == -1.0);
  CHECK(row.rhs == doctest::Approx(-0.9));

  // Row value of the discretized reference test is close to its exact power.
  const AnalyticProcedure ump = make_ump(s, d.alpha);
  const DiscreteProcedure dump = discretize_analytic(ump, grid);
  double value = 0.0;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (int j = 0; j < 6; ++j) {
      value -= row.coeff(r, j) * dump.action_mass[r * 6 + j];
    }
  }
  CHECK(value == doctest::Approx(0.9).epsilon(0.01));
  // And never exceeds one in absolute value.
  CHECK(std::fabs(value) <= 1.0);
}

TEST_CASE("lp dimensions at desk and coarse scales") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(0.1, 0.1, 5.0);
  const ConstraintGrid cgrid = make_constraint_grid(s, 0.32, 5.0);
  const LossSpec loss = LossSpec::indicator_loss(s);
  const Prior prior = builtin_prior("sym", s);
  const SparseLp lp = build_lp(d, grid, cgrid, loss, prior);
  CHECK(lp.n_v() == 6u * 101u * 101u);
  CHECK(lp.n_v() == 61206u);
  CHECK(lp.n_d() == 106u);
  CHECK(lp.n_s() == lp.n_v() + grid.size());
  CHECK(lp.risk_offset == doctest::Approx(1.0).epsilon(1e-10));

  // Objective gains are nonnegative and vanish for pure-H0C actions.
  for (std::size_t r = 0; r < grid.size(); ++r) {
    CHECK(lp.c[r * 6 + 2] == 0.0);  // {H0C} alone gains nothing
  }
  double cmax = 0.0;
  for (double v : lp.c) {
    CHECK(v >= 0.0);
    cmax = std::max(cmax, v);
  }
  CHECK(cmax > 0.0);
}

TEST_CASE("objective matches the generic coefficient path (point masses)") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(0.5, 0.5, 2.0);
  const ActionSpace& space = ActionSpace::testing();
  const LossSpec loss = LossSpec::indicator_loss(s);
  const Prior prior = builtin_prior("sym", s);
  const auto c = build_objective(grid, space, loss, prior);
  const double offset = objective_offset(loss, prior);
  for (std::size_t r : {std::size_t(0), grid.size() / 2, grid.size() - 1}) {
    const Rect rect = grid.rect(r);
    for (int j = 1; j <= 6; ++j) {
      const double none = objective_coeff(rect, 0, loss, prior);
      const double act = objective_coeff(rect, space.mask(j), loss, prior);
      CHECK(c[r * 6 + (j - 1)] ==
            doctest::Approx(none - act).epsilon(1e-10).scale(1.0));
    }
  }
  CHECK(offset == doctest::Approx(integrate_prior(
                      [&](double a, double b) {
                        return loss_eval(loss, 0, a, b);
                      },
                      prior))
                      .epsilon(1e-10));
}

TEST_CASE("objective matches a 1-D quadrature oracle (normal prior)") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(0.5, 0.5, 2.0);
  const ActionSpace& space = ActionSpace::testing();
  const LossSpec loss = LossSpec::indicator_loss(s);
  const Prior prior = builtin_prior("sym-normal", s);
  const auto c = build_objective(grid, space, loss, prior);

  // Gains factor over the axes: for each component and each subpopulation
  // the action touches, (indicator-weighted axis integral) x (plain axis
  // mass of the other coordinate). The oracle evaluates both 1-D integrals
  // with the adaptive panel integrator, split at the loss threshold.
  auto axis_integral = [&](const PriorComponent& comp, int axis, double lo,
                           double hi, bool weighted) {
    const double mean = axis == 0 ? comp.mean1 : comp.mean2;
    const double sd = axis == 0 ? comp.sd1 : comp.sd2;
    const double t = axis == 0 ? loss.delta1_min : loss.delta2_min;
    auto f = [&](double del) {
      const double w = weighted ? (del >= t ? 1.0 : 0.0) : 1.0;
      return w * interval_prob(lo, hi, del) * norm_pdf((del - mean) / sd) / sd;
    };
    const double a = mean - 9 * sd, b = mean + 9 * sd;
    if (t > a && t < b) {
      return integrate(f, a, t, 1e-12) + integrate(f, t, b, 1e-12);
    }
    return integrate(f, a, b, 1e-12);
  };
  for (std::size_t r : {grid.size() / 2, grid.size() - 7}) {
    const Rect rect = grid.rect(r);
    for (int j = 1; j <= 6; ++j) {
      double want = 0.0;
      for (std::size_t ci = 0; ci < prior.components.size(); ++ci) {
        const auto& comp = prior.components[ci];
        const double w = prior.weights[ci];
        if (space.mask(j) & kH01) {
          want += w * axis_integral(comp, 0, rect.lo1, rect.hi1, true) *
                  axis_integral(comp, 1, rect.lo2, rect.hi2, false);
        }
        if (space.mask(j) & kH02) {
          want += w * axis_integral(comp, 0, rect.lo1, rect.hi1, false) *
                  axis_integral(comp, 1, rect.lo2, rect.hi2, true);
        }
      }
      CHECK(c[r * 6 + (j - 1)] ==
            doctest::Approx(want).epsilon(1e-7).scale(1.0));
    }
  }
}

TEST_CASE("decision lp rows include exactly the erroneous recommendations") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(0.5, 0.5, 5.0);
  const ConstraintGrid cgrid = make_constraint_grid(s, 0.32, 5.0);
  const LossSpec loss = LossSpec::decision_loss(s, 1.0, 2.0, 1.0, 2.0);
  const Prior prior = builtin_prior("sym", s);
  const SparseLp lp = build_decision_lp(d, grid, cgrid, loss, prior);
  CHECK(lp.n_free() == 3);
  CHECK(lp.n_v() == grid.size() * 3);
  // No power row in the decision problem.
  for (const DenseRow& row : lp.rows) CHECK(row.tag == DenseRow::Tag::fwer);

  const ActionSpace& space = ActionSpace::decision();
  // At the global null all three nonempty recommendations are errors.
  GridPoint origin{0.0, 0.0, true_nulls(s, 0, 0), 1};
  for (int j = 1; j <= 3; ++j) CHECK(space.error_weight(j, origin, s) == 1.0);
  // At (d1min, -t) small t: {2} errs; {1} does not; {1,2} errs iff pooled <= 0.
  const double t = 0.05;
  GridPoint p{s.delta1_min, -t, true_nulls(s, s.delta1_min, -t), 3};
  CHECK(space.error_weight(1, p, s) == 0.0);
  CHECK(space.error_weight(2, p, s) == 1.0);
  const double agg = s.pooled(s.delta1_min, -t);
  CHECK(space.error_weight(3, p, s) == (agg <= 0 ? 1.0 : 0.0));
}

TEST_CASE("risk cap rows canonicalize the expected loss") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(0.5, 0.5, 5.0);
  const LossSpec loss = LossSpec::indicator_loss(s);
  const DenseRow cap = build_risk_cap_row(s.delta1_min, 0.0, 0.6, grid,
                                          ActionSpace::testing(), loss);
  CHECK(cap.rhs == doctest::Approx(0.6 - 1.0));
  CHECK(cap.action_weight[0] == -1.0);  // {H01} removes the only penalty
  CHECK(cap.action_weight[1] == 0.0);   // {H02} is irrelevant there
  CHECK(cap.action_weight[3] == -1.0);  // {H01,H0C}
}

TEST_CASE("lp text export emits a parseable canonical form") {
  const TrialDesign d = desk_design();
  const DerivedScale s = derive_scale(d);
  const RectGrid grid(1.0, 1.0, 2.0);
  const ConstraintGrid cgrid = make_constraint_grid(s, 2.0, 2.0);
  const SparseLp lp = build_lp(d, grid, cgrid, LossSpec::indicator_loss(s),
                               builtin_prior("sym", s));
  std::ostringstream os;
  export_lp_text(lp, os);
  const std::string text = os.str();
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
