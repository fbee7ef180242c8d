// Ad-hoc timing driver for the desk-scale pipeline stages.

#include <chrono>
#include <cstdio>

#include "optmtp/analysis.hpp"
#include "optmtp/constraint_grid.hpp"
#include "optmtp/workflows.hpp"

using namespace optmtp;
using Clock = std::chrono::steady_clock;

static double secs(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int main(int argc, char** argv) {
  const double one_minus_beta = argc > 1 ? std::atof(argv[1]) : 0.9;
  const int sub_iters = argc > 2 ? std::atoi(argv[2]) : 2000;
  RunConfig cfg = RunConfig::preset("sym");
  cfg.one_minus_beta = one_minus_beta;
  cfg.solver.max_iters = sub_iters;

  auto t0 = Clock::now();
  const TrialDesign design = cfg.resolve_design();
  const DerivedScale scale = derive_scale(design);
  const RectGrid grid(cfg.tau, cfg.tau, cfg.b);
  const ConstraintGrid cgrid = make_constraint_grid(scale, cfg.tau_g, cfg.b);
  const LossSpec loss = cfg.resolve_loss(scale);
  const Prior prior = cfg.resolve_prior(scale);
  SparseLp lp = build_lp(design, grid, cgrid, loss, prior, {}, cfg.build);
  auto t1 = Clock::now();
  std::printf("build: %.2fs  (n_v=%zu n_d=%zu)\n", secs(t0, t1), lp.n_v(), lp.n_d());

  SubgradientResult warm = subgradient_phase(lp, cfg.solver);
  auto t2 = Clock::now();
  std::printf("subgradient: %.2fs  iters=%d obj=%.5f maxviol=%.6f stab=%d\n",
              secs(t1, t2), warm.iterations, warm.objective, warm.max_violation,
              warm.stabilized);

  LpSolution sol = refine_exact(lp, warm.x, cfg.solver);
  auto t3 = Clock::now();
  std::printf(
      "refine: %.2fs  feas=%d obj=%.6f gap=%.2e rounds=%d simplex_iters=%d "
      "infeas=%.6f\n",
      secs(t2, t3), sol.feasible, sol.objective, sol.gap, sol.refine_rounds,
      sol.simplex_iters, sol.infeasibility);

  if (!sol.feasible) {
    const int pr = static_cast<int>(lp.rows.size()) - 1;
    lp.rows[pr].rhs += sol.infeasibility + 1e-7;
    auto t3b = Clock::now();
    sol = refine_exact(lp, sol.x, cfg.solver);
    auto t3c = Clock::now();
    std::printf("relaxed refine: %.2fs feas=%d obj=%.6f gap=%.2e rounds=%d\n",
                secs(t3b, t3c), sol.feasible, sol.objective, sol.gap,
                sol.refine_rounds);
  }
  if (!sol.feasible) return 1;

  DiscreteProcedure proc;
  proc.grid = grid;
  proc.space = lp.space;
  proc.action_mass = sol.x;
  const ExtendedProcedure ext = extend_procedure(proc);
  auto t4 = Clock::now();
  const FwerVerification v = verify_fwer(ext, scale, cfg.alpha, cfg.fine_tau,
                                         cfg.b_prime);
  auto t5 = Clock::now();
  std::printf("verify: %.2fs  max=%.6f at (%.4f, %.4f) cert=%.6f pass=%d pts=%zu\n",
              secs(t4, t5), v.max_grid_fwer, v.argmax_d1, v.argmax_d2,
              v.certified_bound, v.pass, v.points);
  // Compare base vs extended familywise error at nearby constraint points.
  for (double t : {0.0, -0.32, -0.64, 0.32, 0.64}) {
    const double g1 = v.argmax_d1 == 0.0 ? 0.0 : v.argmax_d1 + t;
    const double g2 = v.argmax_d2 == 0.0 ? 0.0 : v.argmax_d2 + t;
    std::printf("  fwer base=%.6f ext=%.6f at (%.3f, %.3f)\n",
                fwer_at(proc, scale, g1, g2), fwer_at(ext, scale, g1, g2), g1,
                g2);
  }

  const DualCertificate cert =
      dual_lower_bound(sol, lp, loss, prior, scale, cfg.one_minus_beta);
  auto t6 = Clock::now();
  std::printf("bound: %.2fs  lower=%.6f primal=%.6f gap=%.6f nu_p=%.3f active=%zu\n",
              secs(t5, t6), cert.lower_bound, cert.primal_risk, cert.bound_gap,
              cert.nu_power, cert.active_points.size());

  const double d1m = scale.delta1_min, d2m = scale.delta2_min;
  std::printf("table: 1-risk=%.4f p1=%.4f p2=%.4f both=%.4f pC=%.4f\n",
              lp.risk_offset - evaluate_bayes_risk(ext, loss, prior),
              evaluate_power(ext, d1m, 0.0, kH01),
              evaluate_power(ext, 0.0, d2m, kH02),
              0.5 * (evaluate_power(ext, d1m, d2m, kH01) +
                     evaluate_power(ext, d1m, d2m, kH02)),
              evaluate_power(ext, d1m, d2m, kH0C));
  return 0;
}
