#include "optmtp/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "optmtp/kernel.hpp"
#include "optmtp/normal.hpp"
#include "optmtp/quad.hpp"

namespace optmtp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double DiscreteProcedure::none_mass(std::size_t rect) const {
  double sum = 0.0;
  for (int j = 1; j <= n_free(); ++j) sum += mass(rect, j);
  return 1.0 - sum;
}

std::uint8_t DiscreteProcedure::envelope_mask(std::size_t rect, double tol) const {
  std::uint8_t m = 0;
  for (int j = 1; j <= n_free(); ++j) {
    if (mass(rect, j) > tol) m |= space->mask(j);
  }
  return m;
}

int DiscreteProcedure::argmax_action(std::size_t rect) const {
  int best = 0;
  double best_mass = none_mass(rect);
  for (int j = 1; j <= n_free(); ++j) {
    if (mass(rect, j) > best_mass) {
      best_mass = mass(rect, j);
      best = j;
    }
  }
  return best;
}

bool DiscreteProcedure::randomized(double tol) const {
  for (std::size_t r = 0; r < grid.size(); ++r) {
    double top = none_mass(r);
    for (int j = 1; j <= n_free(); ++j) top = std::max(top, mass(r, j));
    if (top < 1.0 - tol) return true;
  }
  return false;
}

void DiscreteProcedure::validate() const {
  if (action_mass.size() != grid.size() * static_cast<std::size_t>(n_free())) {
    throw std::invalid_argument("DiscreteProcedure: size mismatch");
  }
  for (std::size_t r = 0; r < grid.size(); ++r) {
    double sum = 0.0;
    for (int j = 1; j <= n_free(); ++j) {
      const double v = mass(r, j);
      if (v < -1e-9) throw std::invalid_argument("DiscreteProcedure: negative mass");
      sum += v;
    }
    if (sum > 1.0 + 1e-7) {
      throw std::invalid_argument("DiscreteProcedure: cell mass exceeds 1");
    }
  }
}

// ---------------------------------------------------------------------------
// Analytic rules.

std::uint8_t bergmann_hommel(double z1, double z2, double zc, double alpha) {
  // Exhaustive index sets over {1, 2, C}: all except {1,2} and {C}.
  struct Subset {
    std::uint8_t mask;
    int size;
  };
  static constexpr Subset kExhaustive[] = {
      {kH01, 1}, {kH02, 1}, {kH01 | kH0C, 2}, {kH02 | kH0C, 2},
      {kH01 | kH02 | kH0C, 3}};
  const double z[3] = {z1, z2, zc};
  std::uint8_t accepted = 0;
  for (const Subset& s : kExhaustive) {
    double zmax = -kInf;
    if (s.mask & kH01) zmax = std::max(zmax, z[0]);
    if (s.mask & kH02) zmax = std::max(zmax, z[1]);
    if (s.mask & kH0C) zmax = std::max(zmax, z[2]);
    if (zmax < norm_quantile(1.0 - alpha / s.size)) accepted |= s.mask;
  }
  return static_cast<std::uint8_t>((kH01 | kH02 | kH0C) & ~accepted);
}

std::uint8_t song_chi_augmented(double z1, double z2, double zc, double alpha0,
                                double alpha1, double alpha2) {
  const double q0 = norm_quantile(1.0 - alpha0);
  const double q1 = norm_quantile(1.0 - alpha1);
  const double q2 = alpha2 <= 0.0 ? kInf
                    : alpha2 >= 1.0 ? -kInf
                                    : norm_quantile(1.0 - alpha2);
  const double q05 = norm_quantile(1.0 - 0.05);
  std::uint8_t rej = 0;
  if (zc > q0) {
    rej |= kH0C;
    if (z1 > q05) rej |= kH01;
    if (z2 > q05) rej |= kH02;
  } else if (zc > q1 && z1 > q2) {
    rej |= kH01;
    if (zc > q05) rej |= kH0C;
  }
  return rej;
}

std::uint8_t analytic_rejects(const AnalyticProcedure& proc, double z1, double z2) {
  const double zc = proc.scale.pooled(z1, z2);
  switch (proc.kind) {
    case AnalyticProcedure::Kind::ump:
      return zc > norm_quantile(1.0 - proc.alpha) ? kH0C : 0;
    case AnalyticProcedure::Kind::rosenbaum: {
      if (zc <= norm_quantile(1.0 - proc.alpha)) return 0;
      std::uint8_t rej = kH0C;
      const double q = norm_quantile(1.0 - proc.alpha);
      if (z1 > q) rej |= kH01;
      if (z2 > q) rej |= kH02;
      return rej;
    }
    case AnalyticProcedure::Kind::bergmann_hommel:
      return bergmann_hommel(z1, z2, zc, proc.alpha);
    case AnalyticProcedure::Kind::song_chi:
      return song_chi_augmented(z1, z2, zc, proc.alpha0, proc.alpha1,
                                proc.alpha2);
  }
  return 0;
}

AnalyticProcedure make_ump(const DerivedScale& scale, double alpha) {
  return {AnalyticProcedure::Kind::ump, scale, alpha, 0, 0, 0, "ump"};
}

AnalyticProcedure rosenbaum(const DerivedScale& scale, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("rosenbaum: alpha in (0,1) required");
  }
  return {AnalyticProcedure::Kind::rosenbaum, scale, alpha, 0, 0, 0, "rosenbaum"};
}

AnalyticProcedure make_bergmann_hommel(const DerivedScale& scale, double alpha) {
  return {AnalyticProcedure::Kind::bergmann_hommel, scale, alpha, 0, 0, 0,
          "bergmann-hommel"};
}

AnalyticProcedure make_song_chi(const DerivedScale& scale, double alpha0,
                                double alpha1, double alpha2) {
  if (!(alpha0 >= 0.0 && alpha0 < 0.05 && alpha1 > 0.05 && alpha1 <= 1.0 &&
        alpha2 >= 0.0 && alpha2 <= 1.0)) {
    throw std::invalid_argument("song_chi: parameter ranges violated");
  }
  AnalyticProcedure p{AnalyticProcedure::Kind::song_chi, scale, 0.05,
                      alpha0,  alpha1, alpha2, "song-chi"};
  return p;
}

double calibrate_song_chi_alpha2(const DerivedScale& scale, double alpha0,
                                 double alpha1, double level) {
  const double q0 = norm_quantile(1.0 - alpha0);
  const double q1 = norm_quantile(1.0 - alpha1);
  const double rho1 = scale.rho1;
  const double resid_sd = std::sqrt(1.0 - rho1 * rho1);

  // Local-test size at (delta1, delta_c) = (0, dc): gate term plus the
  // window term P[q1 < Z_c <= q0, Z1 > q2], with Z1 | Z_c = t normal with
  // mean rho1 (t - dc) and variance 1 - rho1^2.
  auto window_term = [&](double dc, double q2) {
    if (std::isinf(q2) && q2 > 0) return 0.0;
    auto f = [&](double t) {
      const double tail =
          std::isinf(q2) ? 1.0 : norm_ccdf((q2 - rho1 * (t - dc)) / resid_sd);
      return norm_pdf(t - dc) * tail;
    };
    return integrate(f, q1, q0, 1e-12);
  };
  auto size_fn = [&](double q2) {
    auto g = [&](double dc) { return norm_cdf(dc - q0) + window_term(dc, q2); };
    double best = -1.0, best_dc = 0.0;
    for (double dc = 0.0; dc >= -12.0; dc -= 0.05) {
      const double v = g(dc);
      if (v > best) {
        best = v;
        best_dc = dc;
      }
    }
    // Golden-section refinement around the scan winner.
    double lo = best_dc - 0.06;
    double hi = std::min(0.0, best_dc + 0.06);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-11; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = g(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = g(x1);
      }
    }
    return std::max({best, f1, f2});
  };

  auto q2_of = [&](double a2) {
    return a2 <= 0.0 ? kInf : a2 >= 1.0 ? -kInf : norm_quantile(1.0 - a2);
  };
  if (size_fn(q2_of(0.0)) > level) {
    throw std::runtime_error(
        "calibrate_song_chi_alpha2: gate alone exceeds the level");
  }
  if (size_fn(q2_of(1.0)) <= level) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (size_fn(q2_of(mid)) <= level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Section evaluation: for fixed z1 the rejected set is piecewise constant in
// z2 with breakpoints at the direct z2 thresholds and at the pooled-statistic
// crossings z2 = (q - rho1 z1) / rho2.

namespace {

void z2_breakpoints(const AnalyticProcedure& proc, double z1,
                    std::vector<double>& out) {
  out.clear();
  const double rho1 = proc.scale.rho1, rho2 = proc.scale.rho2;
  auto zc_cross = [&](double q) { out.push_back((q - rho1 * z1) / rho2); };
  switch (proc.kind) {
    case AnalyticProcedure::Kind::ump:
      zc_cross(norm_quantile(1.0 - proc.alpha));
      break;
    case AnalyticProcedure::Kind::rosenbaum:
      zc_cross(norm_quantile(1.0 - proc.alpha));
      out.push_back(norm_quantile(1.0 - proc.alpha));
      break;
    case AnalyticProcedure::Kind::bergmann_hommel:
      for (int s = 1; s <= 3; ++s) {
        const double q = norm_quantile(1.0 - proc.alpha / s);
        out.push_back(q);
        zc_cross(q);
      }
      break;
    case AnalyticProcedure::Kind::song_chi:
      zc_cross(norm_quantile(1.0 - proc.alpha0));
      zc_cross(norm_quantile(1.0 - proc.alpha1));
      zc_cross(norm_quantile(1.0 - 0.05));
      out.push_back(norm_quantile(1.0 - 0.05));
      break;
  }
  std::sort(out.begin(), out.end());
}

// z1 values where the rule's z1-side conditions switch; the outer integral
// is split there so the integrand stays continuous on each piece.
std::vector<double> z1_splits(const AnalyticProcedure& proc) {
  switch (proc.kind) {
    case AnalyticProcedure::Kind::ump:
      return {};
    case AnalyticProcedure::Kind::rosenbaum:
      return {norm_quantile(1.0 - proc.alpha)};
    case AnalyticProcedure::Kind::bergmann_hommel:
      return {norm_quantile(1.0 - proc.alpha),
              norm_quantile(1.0 - proc.alpha / 2),
              norm_quantile(1.0 - proc.alpha / 3)};
    case AnalyticProcedure::Kind::song_chi: {
      std::vector<double> s = {norm_quantile(1.0 - 0.05)};
      if (proc.alpha2 > 0.0 && proc.alpha2 < 1.0) {
        s.push_back(norm_quantile(1.0 - proc.alpha2));
      }
      return s;
    }
  }
  return {};
}

// Integral over z2 of weight(mask(z1, z2)) * pdf(z2 - d2).
double section_value(const AnalyticProcedure& proc, double z1, double d2,
                     const std::function<double(std::uint8_t)>& weight,
                     std::vector<double>& scratch) {
  z2_breakpoints(proc, z1, scratch);
  double total = 0.0;
  double lo = -kInf;
  for (std::size_t i = 0; i <= scratch.size(); ++i) {
    const double hi = i < scratch.size() ? scratch[i] : kInf;
    if (hi > lo) {
      const double mid =
          std::isinf(lo) ? (std::isinf(hi) ? 0.0 : hi - 1.0)
                         : (std::isinf(hi) ? lo + 1.0 : 0.5 * (lo + hi));
      const double w = weight(analytic_rejects(proc, z1, mid));
      if (w != 0.0) total += w * interval_prob(lo, hi, d2);
      lo = hi;
    }
  }
  return total;
}

double analytic_weighted_prob(const AnalyticProcedure& proc, double d1, double d2,
                              const std::function<double(std::uint8_t)>& weight,
                              double tol) {
  std::vector<double> scratch;
  auto f = [&](double z1) {
    return section_value(proc, z1, d2, weight, scratch) * norm_pdf(z1 - d1);
  };
  std::vector<double> cuts = z1_splits(proc);
  cuts.push_back(d1 - 9.5);
  cuts.push_back(d1 + 9.5);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(cuts[i], d1 - 9.5);
    const double b = std::min(cuts[i + 1], d1 + 9.5);
    if (b > a) total += integrate(f, a, b, tol);
  }
  return total;
}

}  // namespace

double analytic_event_prob(const AnalyticProcedure& proc, double d1, double d2,
                           const std::function<bool(std::uint8_t)>& predicate,
                           double tol) {
  return analytic_weighted_prob(
      proc, d1, d2,
      [&](std::uint8_t m) { return predicate(m) ? 1.0 : 0.0; }, tol);
}

// ---------------------------------------------------------------------------
// Evaluation.

double evaluate_power(const DiscreteProcedure& proc, double d1, double d2,
                      std::uint8_t hypothesis) {
  const std::vector<double> px = axis_cell_probs(proc.grid.edges1(), d1);
  const std::vector<double> py = axis_cell_probs(proc.grid.edges2(), d2);
  const int nf = proc.n_free();
  double total = 0.0;
  for (int i1 = 0; i1 < proc.grid.cells1(); ++i1) {
    if (px[i1] == 0.0) continue;
    for (int i2 = 0; i2 < proc.grid.cells2(); ++i2) {
      const std::size_t r = proc.grid.index(i1, i2);
      double hit = 0.0;
      for (int j = 1; j <= nf; ++j) {
        if (proc.space->mask(j) & hypothesis) hit += proc.mass(r, j);
      }
      if (hit != 0.0) total += px[i1] * py[i2] * hit;
    }
  }
  return total;
}

double evaluate_power(const AnalyticProcedure& proc, double d1, double d2,
                      std::uint8_t hypothesis) {
  return analytic_event_prob(
      proc, d1, d2, [&](std::uint8_t m) { return (m & hypothesis) != 0; });
}

double expected_loss(const DiscreteProcedure& proc, const LossSpec& loss,
                     double d1, double d2) {
  const std::vector<double> px = axis_cell_probs(proc.grid.edges1(), d1);
  const std::vector<double> py = axis_cell_probs(proc.grid.edges2(), d2);
  const int nf = proc.n_free();
  const double base = loss_no_action(loss, d1, d2);
  // Mass outside the grid takes no action.
  double total = base;
  for (int i1 = 0; i1 < proc.grid.cells1(); ++i1) {
    if (px[i1] == 0.0) continue;
    for (int i2 = 0; i2 < proc.grid.cells2(); ++i2) {
      const std::size_t r = proc.grid.index(i1, i2);
      double diff = 0.0;
      for (int j = 1; j <= nf; ++j) {
        const double m = proc.mass(r, j);
        if (m != 0.0) {
          diff += m * (loss_eval(loss, proc.space->mask(j), d1, d2) - base);
        }
      }
      if (diff != 0.0) total += px[i1] * py[i2] * diff;
    }
  }
  return total;
}

double expected_loss(const AnalyticProcedure& proc, const LossSpec& loss,
                     double d1, double d2) {
  return analytic_weighted_prob(
      proc, d1, d2,
      [&](std::uint8_t m) { return loss_eval(loss, m, d1, d2); }, 1e-10);
}

double evaluate_bayes_risk(const DiscreteProcedure& proc, const LossSpec& loss,
                           const Prior& prior) {
  check_loss_bounded(loss, prior);
  return integrate_prior(
      [&](double d1, double d2) { return expected_loss(proc, loss, d1, d2); },
      prior, 1e-8);
}

double evaluate_bayes_risk(const AnalyticProcedure& proc, const LossSpec& loss,
                           const Prior& prior) {
  check_loss_bounded(loss, prior);
  return integrate_prior(
      [&](double d1, double d2) { return expected_loss(proc, loss, d1, d2); },
      prior, 1e-7);
}

double fwer_at(const DiscreteProcedure& proc, const DerivedScale& scale,
               double d1, double d2) {
  const NullSet truth = true_nulls(scale, d1, d2);
  if (truth.empty()) return 0.0;
  return evaluate_power(proc, d1, d2, truth.mask());
}

double fwer_at(const AnalyticProcedure& proc, const DerivedScale& scale,
               double d1, double d2) {
  const NullSet truth = true_nulls(scale, d1, d2);
  if (truth.empty()) return 0.0;
  return evaluate_power(proc, d1, d2, truth.mask());
}

// ---------------------------------------------------------------------------
// Discretization.

namespace {

int ordinal_of_mask(const ActionSpace& space, std::uint8_t mask) {
  for (int j = 0; j < space.n_actions(); ++j) {
    if (space.mask(j) == mask) return j;
  }
  throw std::logic_error("analytic rule produced an action outside the space");
}

}  // namespace

DiscreteProcedure discretize_analytic(const AnalyticProcedure& proc,
                                      const RectGrid& grid) {
  DiscreteProcedure d;
  d.grid = grid;
  d.space = &ActionSpace::testing();
  d.action_mass.assign(grid.size() * d.n_free(), 0.0);
  d.label = proc.label + "-discretized";
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const Rect rect = grid.rect(r);
    const std::uint8_t mask =
        analytic_rejects(proc, rect.center1(), rect.center2());
    const int j = ordinal_of_mask(*d.space, mask);
    if (j > 0) d.action_mass[r * d.n_free() + (j - 1)] = 1.0;
  }
  return d;
}

double straddle_mass(const AnalyticProcedure& proc, const RectGrid& grid,
                     const Prior& prior) {
  const std::vector<double> mass = prior_cell_mass(grid, prior);
  double total = 0.0;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const Rect rect = grid.rect(r);
    const std::uint8_t center =
        analytic_rejects(proc, rect.center1(), rect.center2());
    const bool straddles =
        analytic_rejects(proc, rect.lo1, rect.lo2) != center ||
        analytic_rejects(proc, rect.lo1, rect.hi2) != center ||
        analytic_rejects(proc, rect.hi1, rect.lo2) != center ||
        analytic_rejects(proc, rect.hi1, rect.hi2) != center;
    if (straddles) total += mass[r];
  }
  return total;
}

std::vector<double> prior_cell_mass(const RectGrid& grid, const Prior& prior) {
  prior.validate();
  std::vector<double> out(grid.size(), 0.0);
  const AxisGain unit{1.0, 0.0, 1.0};
  for (std::size_t ci = 0; ci < prior.components.size(); ++ci) {
    const double w = prior.weights[ci];
    if (w == 0.0) continue;
    const auto& comp = prior.components[ci];
    const std::vector<double> m1 =
        axis_prior_cell_integrals(grid.edges1(), comp, 0, unit, 0.0);
    const std::vector<double> m2 =
        axis_prior_cell_integrals(grid.edges2(), comp, 1, unit, 0.0);
    for (int i1 = 0; i1 < grid.cells1(); ++i1) {
      for (int i2 = 0; i2 < grid.cells2(); ++i2) {
        out[grid.index(i1, i2)] += w * m1[i1] * m2[i2];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence.

void write_procedure_json(const DiscreteProcedure& proc, std::ostream& os) {
  nlohmann::ordered_json j;
  j["grid"] = {{"tau1", proc.grid.tau1()},
               {"tau2", proc.grid.tau2()},
               {"b", proc.grid.b()}};
  j["space"] = proc.space->is_decision() ? "decision" : "testing";
  j["label"] = proc.label;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  const int nf = proc.n_free();
  for (std::size_t r = 0; r < proc.grid.size(); ++r) {
    bool any = false;
    for (int j2 = 1; j2 <= nf; ++j2) {
      if (proc.mass(r, j2) > 0.0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    const Rect rect = proc.grid.rect(r);
    nlohmann::ordered_json cell;
    cell["k1"] = rect.k1;
    cell["k2"] = rect.k2;
    nlohmann::ordered_json actions;
    for (int j2 = 1; j2 <= nf; ++j2) {
      const double m = proc.mass(r, j2);
      if (m > 0.0) actions[proc.space->label(j2)] = m;
    }
    cell["actions"] = std::move(actions);
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  os << j.dump(1);
}

DiscreteProcedure read_procedure_json(std::istream& is) {
  nlohmann::json j;
  is >> j;
  DiscreteProcedure proc;
  proc.grid = RectGrid(j.at("grid").at("tau1").get<double>(),
                       j.at("grid").at("tau2").get<double>(),
                       j.at("grid").at("b").get<double>());
  proc.space = j.at("space").get<std::string>() == "decision"
                   ? &ActionSpace::decision()
                   : &ActionSpace::testing();
  proc.label = j.value("label", "");
  proc.action_mass.assign(proc.grid.size() * proc.n_free(), 0.0);
  // Ordinal lookup by label.
  auto ordinal = [&](const std::string& name) {
    for (int a = 1; a <= proc.n_free(); ++a) {
      if (proc.space->label(a) == name) return a;
    }
    throw std::invalid_argument("procedure json: unknown action " + name);
  };
  const int k1_min =
      static_cast<int>(std::lround(proc.grid.edges1().front() / proc.grid.tau1()));
  const int k2_min =
      static_cast<int>(std::lround(proc.grid.edges2().front() / proc.grid.tau2()));
  for (const auto& cell : j.at("cells")) {
    const int i1 = cell.at("k1").get<int>() - k1_min;
    const int i2 = cell.at("k2").get<int>() - k2_min;
    if (i1 < 0 || i1 >= proc.grid.cells1() || i2 < 0 ||
        i2 >= proc.grid.cells2()) {
      throw std::invalid_argument("procedure json: cell outside grid");
    }
    const std::size_t r = proc.grid.index(i1, i2);
    for (const auto& [name, value] : cell.at("actions").items()) {
      proc.action_mass[r * proc.n_free() + (ordinal(name) - 1)] =
          value.get<double>();
    }
  }
  proc.validate();
  return proc;
}

void write_region_csv(const DiscreteProcedure& proc, std::ostream& os) {
  os.precision(17);
  os << "k1,k2,z1_lo,z2_lo,action,randomized,distribution\n";
  const int nf = proc.n_free();
  for (std::size_t r = 0; r < proc.grid.size(); ++r) {
    const Rect rect = proc.grid.rect(r);
    const int best = proc.argmax_action(r);
    double top = best == 0 ? proc.none_mass(r) : proc.mass(r, best);
    const bool randomized = top < 1.0 - 1e-6;
    os << rect.k1 << ',' << rect.k2 << ',' << rect.lo1 << ',' << rect.lo2 << ','
       << proc.space->label(best) << ',' << (randomized ? 1 : 0) << ',';
    if (randomized) {
      os << '"';
      bool first = true;
      const double none = proc.none_mass(r);
      if (none > 1e-12) {
        os << "none:" << none;
        first = false;
      }
      for (int j = 1; j <= nf; ++j) {
        const double m = proc.mass(r, j);
        if (m > 1e-12) {
          if (!first) os << ';';
          os << proc.space->label(j) << ':' << m;
          first = false;
        }
      }
      os << '"';
    }
    os << '\n';
  }
}

}  // namespace optmtp
