#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "optmtp/analysis.hpp"
#include "optmtp/lp.hpp"
#include "optmtp/procedures.hpp"
#include "optmtp/solver.hpp"

// End-to-end workflows: named presets, configuration, the
// build/solve/extend/verify/bound pipeline, sweeps, and file exports.

namespace optmtp {

struct RunConfig {
  std::string workflow = "bayes";
  std::string label = "run";

  // Design block.
  double p1 = 0.5;
  double sigma2[2][2] = {{1.0, 1.0}, {1.0, 1.0}};
  double delta_min = 1.0;
  double alpha = 0.05;
  double one_minus_beta = 0.9;
  double n_multiplier = 1.0;  // n = multiplier * n_min unless n_explicit > 0
  double n_explicit = 0.0;

  // Grid block.
  double tau = 0.1;
  double tau_g = 0.32;
  double b = 5.0;
  double b_prime = 8.0;
  double fine_tau = 1e-4;

  // Objective block.
  std::string loss_kind = "indicator";  // indicator | proportional | decision
  double decision_fn[2] = {1.0, 1.0};
  double decision_fp[2] = {2.0, 2.0};
  std::string prior_name = "sym";  // builtin name or "custom"
  Prior custom_prior;

  BuildOptions build;
  SolverConfig solver;
  std::string output_dir;

  static RunConfig preset(const std::string& name);
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  std::string config_hash() const;  // FNV-1a over the canonical dump

  TrialDesign resolve_design() const;  // resolves n through n_min
  Prior resolve_prior(const DerivedScale& scale) const;
  LossSpec resolve_loss(const DerivedScale& scale) const;
};

// Result of one constrained-Bayes solve with certification. Headline power
// numbers are those of the monotone-extended procedure; the in-grid values
// of the raw LP optimum are carried alongside.
struct BayesRun {
  RunConfig config;
  DerivedScale scale;
  bool feasible = true;
  LpSolution solution;
  DiscreteProcedure procedure;
  ExtendedProcedure extended;
  FwerVerification verification;
  DualCertificate certificate;

  std::size_t n_v = 0, n_d = 0, n_s = 0;
  double risk_offset = 0;
  double power_relaxed_by = 0;  // grid-infeasible power target relaxation
  double one_minus_bayes_risk = 0;  // prior-weighted power sum (extended)
  double power_h01_single = 0;      // P[reject H01] at (delta1_min, 0)
  double power_h02_single = 0;      // P[reject H02] at (0, delta2_min)
  double power_both_avg = 0;        // averaged subpopulation power at both
  double power_h0c = 0;             // P[reject H0C] at (d1min, d2min)
  double bayes_risk = 0;            // extended-procedure risk
  double lp_objective = 0;          // in-grid gain c'x

  nlohmann::ordered_json report() const;
};

BayesRun run_bayes(const RunConfig& config);

struct MinimaxRun {
  RunConfig config;
  bool consistent = true;          // top-of-bracket feasibility
  double value = 0;                // minimax risk (upper bracket)
  double bracket_lo = 0, bracket_hi = 0;
  int feasibility_solves = 0;
  std::vector<std::pair<double, double>> alternatives;
  std::vector<double> risks;       // expected loss of the final procedure
  std::size_t worst_index = 0;
  DiscreteProcedure procedure;
  nlohmann::ordered_json report() const;
};

MinimaxRun run_minimax(const RunConfig& config,
                       std::vector<std::pair<double, double>> alternatives = {});

struct DecisionRun {
  RunConfig config;
  bool feasible = true;
  LpSolution solution;
  DiscreteProcedure procedure;
  // Recommendation probabilities at the four standard alternatives, rows in
  // the order (0,0), (d1min,0), (0,d2min), (d1min,d2min); columns in action
  // order none, {1}, {2}, {1,2}.
  std::vector<std::array<double, 4>> recommend_prob;
  std::vector<std::pair<double, double>> alternatives;
  double global_null_error = 0;  // P[nonempty erroneous recommendation] at (0,0)
  nlohmann::ordered_json report() const;
};

DecisionRun run_decision(const RunConfig& config);

struct TradeoffPoint {
  double one_minus_beta = 0;
  bool feasible = false;
  double one_minus_bayes_risk = 0;
  double power_h01_single = 0;
  double power_h02_single = 0;
  double power_both_avg = 0;
  double power_h0c = 0;
  double gap = 0;
};

struct TradeoffRun {
  RunConfig config;
  std::vector<TradeoffPoint> points;
  // Baseline overlays: label -> the same measurements.
  std::vector<std::pair<std::string, TradeoffPoint>> baselines;
  nlohmann::ordered_json report() const;
};

TradeoffRun run_tradeoff(const RunConfig& config,
                         const std::vector<double>& beta_grid = {});

struct SampleSizePoint {
  double multiplier = 0;  // n / n_min
  bool feasible = false;
  double power_h01_single = 0;
  double power_h02_single = 0;
};

struct SampleSizeRun {
  RunConfig config;
  bool inverse_mode = false;
  double target_power = 0;
  double achieved_multiplier = 0;  // inverse mode result
  std::vector<SampleSizePoint> points;
  nlohmann::ordered_json report() const;
};

// Forward mode: solve at each n = multiplier * n_min (default prior: the
// subpopulation-only weights). Inverse mode (target_power in (0,1)): bisect
// the multiplier until both subpopulation powers reach the target.
SampleSizeRun run_sample_size_sweep(const RunConfig& config,
                                    const std::vector<double>& multipliers,
                                    double target_power = 0.0);

struct AblationRun {
  RunConfig config;
  bool feasible = true;
  DiscreteProcedure procedure;
  double fwer_at_d1 = 0;  // at (delta1_min, 0)
  double fwer_at_d2 = 0;  // at (0, delta2_min)
  bool all_or_nothing = true;
  nlohmann::ordered_json report() const;
};

// Constraint grid reduced to the global null only.
AblationRun run_global_null_ablation(const RunConfig& config);

// Deterministic file emission; re-running with identical inputs reproduces
// byte-identical files.
void export_regions(const DiscreteProcedure& proc, const std::string& path);
void export_curves(const TradeoffRun& run, const std::string& path);
void write_report(const nlohmann::ordered_json& report, const std::string& path);

}  // namespace optmtp
