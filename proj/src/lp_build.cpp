#include "optmtp/lp.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace optmtp {

double DenseRow::dot(const std::vector<double>& x) const {
  const int nf = static_cast<int>(action_weight.size());
  double total = 0.0;
  for (std::size_t r = 0; r < cell_prob.size(); ++r) {
    const double p = cell_prob[r];
    if (p == 0.0) continue;
    double inner = 0.0;
    const double* xr = x.data() + r * nf;
    for (int j = 0; j < nf; ++j) inner += action_weight[j] * xr[j];
    total += p * inner;
  }
  return total;
}

std::vector<double> cell_prob_layer(const RectGrid& grid, double d1, double d2) {
  const std::vector<double> px = axis_cell_probs(grid.edges1(), d1);
  const std::vector<double> py = axis_cell_probs(grid.edges2(), d2);
  std::vector<double> layer(grid.size());
  for (int i1 = 0; i1 < grid.cells1(); ++i1) {
    const double a = px[i1];
    double* out = layer.data() + grid.index(i1, 0);
    for (int i2 = 0; i2 < grid.cells2(); ++i2) out[i2] = a * py[i2];
  }
  return layer;
}

DenseRow build_fwer_row(const GridPoint& point, const RectGrid& grid,
                        const ActionSpace& space, const DerivedScale& scale,
                        double rhs) {
  if (point.truth.empty() && !space.is_decision()) {
    throw std::invalid_argument("build_fwer_row: point has no true nulls");
  }
  DenseRow row;
  row.tag = DenseRow::Tag::fwer;
  row.d1 = point.d1;
  row.d2 = point.d2;
  row.cell_prob = cell_prob_layer(grid, point.d1, point.d2);
  row.action_weight.resize(space.n_free());
  for (int j = 1; j <= space.n_free(); ++j) {
    row.action_weight[j - 1] = space.error_weight(j, point, scale);
  }
  row.rhs = rhs;
  return row;
}

namespace {

double outside_grid_mass(const RectGrid& grid, double d1, double d2) {
  const double in1 = interval_prob(grid.lo1(), grid.hi1(), d1);
  const double in2 = interval_prob(grid.lo2(), grid.hi2(), d2);
  return 1.0 - in1 * in2;
}

}  // namespace

DenseRow build_power_row(const RectGrid& grid, const ActionSpace& space,
                         const DerivedScale& scale, double one_minus_beta,
                         bool truncation_adjust) {
  if (space.is_decision()) {
    throw std::invalid_argument("build_power_row: testing action space required");
  }
  DenseRow row;
  row.tag = DenseRow::Tag::power;
  row.d1 = scale.delta1_min;
  row.d2 = scale.delta2_min;
  row.cell_prob = cell_prob_layer(grid, row.d1, row.d2);
  row.action_weight.resize(space.n_free());
  for (int j = 1; j <= space.n_free(); ++j) {
    row.action_weight[j - 1] = (space.mask(j) & kH0C) ? -1.0 : 0.0;
  }
  double target = one_minus_beta;
  if (truncation_adjust) {
    target -= outside_grid_mass(grid, row.d1, row.d2);
  }
  row.rhs = -target;
  return row;
}

DenseRow build_risk_cap_row(double d1, double d2, double cap,
                            const RectGrid& grid, const ActionSpace& space,
                            const LossSpec& loss) {
  DenseRow row;
  row.tag = DenseRow::Tag::extra;
  row.d1 = d1;
  row.d2 = d2;
  row.cell_prob = cell_prob_layer(grid, d1, d2);
  const double base = loss_no_action(loss, d1, d2);
  row.action_weight.resize(space.n_free());
  for (int j = 1; j <= space.n_free(); ++j) {
    row.action_weight[j - 1] = loss_eval(loss, space.mask(j), d1, d2) - base;
  }
  row.rhs = cap - base;
  return row;
}

std::vector<double> build_objective(const RectGrid& grid,
                                    const ActionSpace& space,
                                    const LossSpec& loss, const Prior& prior) {
  check_loss_bounded(loss, prior);
  if (space.is_decision() != loss.decision()) {
    throw std::invalid_argument("build_objective: loss/action space mismatch");
  }
  const int nf = space.n_free();
  std::vector<double> c(grid.size() * nf, 0.0);

  for (std::size_t ci = 0; ci < prior.components.size(); ++ci) {
    const double w = prior.weights[ci];
    if (w == 0.0) continue;
    const PriorComponent& comp = prior.components[ci];

    const AxisGain unit{1.0, 0.0, 1.0};
    const std::vector<double> mass1 =
        axis_prior_cell_integrals(grid.edges1(), comp, 0, unit, 0.0);
    const std::vector<double> mass2 =
        axis_prior_cell_integrals(grid.edges2(), comp, 1, unit, 0.0);

    // Weighted axis vectors are shared between actions with the same gain.
    std::map<std::tuple<int, double, double, double>, std::vector<double>> cache;
    auto weighted = [&](int axis, const AxisGain& g) -> const std::vector<double>& {
      const auto key = std::make_tuple(axis, g.ind_above, g.lin_above, g.ind_below);
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache
                 .emplace(key, axis_prior_cell_integrals(
                                   axis == 0 ? grid.edges1() : grid.edges2(),
                                   comp, axis, g, loss.threshold(axis)))
                 .first;
      }
      return it->second;
    };

    for (int j = 1; j <= nf; ++j) {
      const AxisGain g1 = loss_axis_gain(loss, space.mask(j), 0);
      const AxisGain g2 = loss_axis_gain(loss, space.mask(j), 1);
      const std::vector<double>* w1 = g1.zero() ? nullptr : &weighted(0, g1);
      const std::vector<double>* w2 = g2.zero() ? nullptr : &weighted(1, g2);
      if (!w1 && !w2) continue;
      for (int i1 = 0; i1 < grid.cells1(); ++i1) {
        for (int i2 = 0; i2 < grid.cells2(); ++i2) {
          double gain = 0.0;
          if (w1) gain += (*w1)[i1] * mass2[i2];
          if (w2) gain += mass1[i1] * (*w2)[i2];
          if (gain != 0.0) {
            c[grid.index(i1, i2) * nf + (j - 1)] += w * gain;
          }
        }
      }
    }
  }
  for (double& v : c) {
    if (std::fabs(v) < 1e-300) v = 0.0;
  }
  return c;
}

double objective_offset(const LossSpec& loss, const Prior& prior) {
  double total = 0.0;
  for (std::size_t ci = 0; ci < prior.components.size(); ++ci) {
    const double w = prior.weights[ci];
    if (w == 0.0) continue;
    const PriorComponent& comp = prior.components[ci];
    for (int k = 0; k < 2; ++k) {
      AxisGain pen;  // penalty of taking no action on axis k
      switch (loss.kind) {
        case LossKind::indicator:
          pen.ind_above = 1.0;
          break;
        case LossKind::proportional:
          pen.lin_above = 1.0;
          break;
        case LossKind::decision:
          pen.ind_above = loss.l_fn[k];
          break;
      }
      total += w * axis_prior_gain_mass(comp, k, pen, loss.threshold(k));
    }
  }
  return total;
}

namespace {

SparseLp assemble(const TrialDesign& design, const RectGrid& grid,
                  const ConstraintGrid& cgrid, const LossSpec& loss,
                  const Prior& prior, const ActionSpace& space,
                  const std::vector<DenseRow>& extra_rows,
                  const BuildOptions& opts, bool with_power_row) {
  design.validate();
  const DerivedScale scale = derive_scale(design);
  if (std::fabs(scale.delta1_min - loss.delta1_min) > 1e-9 ||
      std::fabs(scale.delta2_min - loss.delta2_min) > 1e-9) {
    throw std::invalid_argument("build_lp: loss thresholds disagree with design");
  }
  SparseLp lp;
  lp.grid = grid;
  lp.space = &space;
  lp.alpha = design.alpha;
  const double margin =
      opts.alpha_margin >= 0.0
          ? opts.alpha_margin
          : std::max(1e-4, 0.1 * grid.tau1() * grid.tau2());
  lp.alpha_eff = design.alpha - margin;
  if (!(lp.alpha_eff > 0.0)) {
    throw std::invalid_argument("build_lp: alpha margin leaves no budget");
  }
  lp.c = build_objective(grid, space, loss, prior);
  lp.risk_offset = objective_offset(loss, prior);
  lp.rows.reserve(cgrid.size() + 1 + extra_rows.size());
  for (const GridPoint& pt : cgrid.points) {
    lp.rows.push_back(build_fwer_row(pt, grid, space, scale, lp.alpha_eff));
  }
  if (with_power_row) {
    lp.rows.push_back(build_power_row(grid, space, scale, 1.0 - design.beta,
                                      opts.truncation_adjust));
  }
  for (const DenseRow& row : extra_rows) lp.rows.push_back(row);
  return lp;
}

}  // namespace

SparseLp build_lp(const TrialDesign& design, const RectGrid& grid,
                  const ConstraintGrid& cgrid, const LossSpec& loss,
                  const Prior& prior, const std::vector<DenseRow>& extra_rows,
                  const BuildOptions& opts) {
  if (loss.decision()) {
    throw std::invalid_argument("build_lp: testing loss required");
  }
  return assemble(design, grid, cgrid, loss, prior, ActionSpace::testing(),
                  extra_rows, opts, /*with_power_row=*/true);
}

SparseLp build_decision_lp(const TrialDesign& design, const RectGrid& grid,
                           const ConstraintGrid& cgrid, const LossSpec& loss,
                           const Prior& prior, const BuildOptions& opts) {
  if (!loss.decision()) {
    throw std::invalid_argument("build_decision_lp: decision loss required");
  }
  return assemble(design, grid, cgrid, loss, prior, ActionSpace::decision(), {},
                  opts, /*with_power_row=*/false);
}

std::vector<double> row_values(const SparseLp& lp, const std::vector<double>& x) {
  if (x.size() != lp.n_v()) {
    throw std::invalid_argument("row_values: dimension mismatch");
  }
  std::vector<double> vals;
  vals.reserve(lp.rows.size());
  for (const DenseRow& row : lp.rows) vals.push_back(row.dot(x));
  return vals;
}

}  // namespace optmtp
