#include "optmtp/workflows.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "optmtp/constraint_grid.hpp"
#include "optmtp/kernel.hpp"
#include "optmtp/normal.hpp"

namespace optmtp {

namespace {

constexpr const char* kVersion = "0.1.0";

nlohmann::ordered_json solver_to_json(const SolverConfig& s) {
  return {{"step_rule",
           s.step_rule == SolverConfig::StepRule::polyak ? "polyak"
                                                         : "diminishing"},
          {"step_scale", s.step_scale},
          {"improvement_tol", s.improvement_tol},
          {"improvement_window", s.improvement_window},
          {"gap_tol", s.gap_tol},
          {"max_iters", s.max_iters},
          {"seed", s.rng_seed},
          {"feasibility_tol", s.feasibility_tol},
          {"activity_tol", s.activity_tol},
          {"max_refine_rounds", s.max_refine_rounds}};
}

void solver_from_json(const nlohmann::json& j, SolverConfig& s) {
  if (j.contains("step_rule")) {
    s.step_rule = j["step_rule"] == "polyak" ? SolverConfig::StepRule::polyak
                                             : SolverConfig::StepRule::diminishing;
  }
  s.step_scale = j.value("step_scale", s.step_scale);
  s.improvement_tol = j.value("improvement_tol", s.improvement_tol);
  s.improvement_window = j.value("improvement_window", s.improvement_window);
  s.gap_tol = j.value("gap_tol", s.gap_tol);
  s.max_iters = j.value("max_iters", s.max_iters);
  s.rng_seed = j.value("seed", s.rng_seed);
  s.feasibility_tol = j.value("feasibility_tol", s.feasibility_tol);
  s.activity_tol = j.value("activity_tol", s.activity_tol);
  s.max_refine_rounds = j.value("max_refine_rounds", s.max_refine_rounds);
}

}  // namespace

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig c;
  c.label = name;
  if (name == "sym" || name == "sym-normal") {
    c.p1 = 0.5;
  } else if (name == "asym" || name == "asym-normal") {
    c.p1 = 0.63;
  } else if (name == "subpop-only") {
    c.p1 = 0.5;
  } else {
    throw std::invalid_argument("RunConfig::preset: unknown preset " + name);
  }
  c.prior_name = name;
  return c;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("preset")) c = preset(j["preset"].get<std::string>());
  c.workflow = j.value("workflow", c.workflow);
  c.label = j.value("label", c.label);
  if (j.contains("design")) {
    const auto& d = j["design"];
    c.p1 = d.value("p1", c.p1);
    if (d.contains("sigma2")) {
      const auto& s = d["sigma2"];
      for (int k = 0; k < 2; ++k) {
        for (int a = 0; a < 2; ++a) c.sigma2[k][a] = s.at(k).at(a).get<double>();
      }
    }
    c.delta_min = d.value("delta_min", c.delta_min);
    c.alpha = d.value("alpha", c.alpha);
    c.one_minus_beta = d.value("one_minus_beta", c.one_minus_beta);
    c.n_multiplier = d.value("n_multiplier", c.n_multiplier);
    c.n_explicit = d.value("n", 0.0);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    c.tau = g.value("tau", c.tau);
    c.tau_g = g.value("tau_g", c.tau_g);
    c.b = g.value("b", c.b);
    c.b_prime = g.value("b_prime", c.b_prime);
    c.fine_tau = g.value("fine_tau", c.fine_tau);
  }
  if (j.contains("objective")) {
    const auto& o = j["objective"];
    c.loss_kind = o.value("loss", c.loss_kind);
    if (o.contains("decision_penalties")) {
      const auto& p = o["decision_penalties"];
      c.decision_fn[0] = p.value("fn1", c.decision_fn[0]);
      c.decision_fp[0] = p.value("fp1", c.decision_fp[0]);
      c.decision_fn[1] = p.value("fn2", c.decision_fn[1]);
      c.decision_fp[1] = p.value("fp2", c.decision_fp[1]);
    }
    if (o.contains("prior")) {
      if (o["prior"].is_string()) {
        c.prior_name = o["prior"].get<std::string>();
      } else {
        c.prior_name = "custom";
        const auto& p = o["prior"];
        for (const auto& comp : p.at("components")) {
          PriorComponent pc;
          pc.kind = comp.value("kind", std::string("point")) == "normal"
                        ? PriorComponent::Kind::normal
                        : PriorComponent::Kind::point;
          pc.mean1 = comp.at("mean1").get<double>();
          pc.mean2 = comp.at("mean2").get<double>();
          pc.sd1 = comp.value("sd1", 0.0);
          pc.sd2 = comp.value("sd2", 0.0);
          c.custom_prior.components.push_back(pc);
          c.custom_prior.weights.push_back(comp.at("weight").get<double>());
        }
        c.custom_prior.name = "custom";
      }
    }
  }
  if (j.contains("build")) {
    c.build.alpha_margin = j["build"].value("alpha_margin", c.build.alpha_margin);
    c.build.power_relax_budget =
        j["build"].value("power_relax_budget", c.build.power_relax_budget);
    c.build.truncation_adjust =
        j["build"].value("truncation_adjust", c.build.truncation_adjust);
  }
  if (j.contains("solver")) solver_from_json(j["solver"], c.solver);
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["workflow"] = workflow;
  j["label"] = label;
  j["design"] = {{"p1", p1},
                 {"sigma2", {{sigma2[0][0], sigma2[0][1]},
                             {sigma2[1][0], sigma2[1][1]}}},
                 {"delta_min", delta_min},
                 {"alpha", alpha},
                 {"one_minus_beta", one_minus_beta},
                 {"n_multiplier", n_multiplier},
                 {"n", n_explicit}};
  j["grid"] = {{"tau", tau},
               {"tau_g", tau_g},
               {"b", b},
               {"b_prime", b_prime},
               {"fine_tau", fine_tau}};
  nlohmann::ordered_json obj;
  obj["loss"] = loss_kind;
  obj["decision_penalties"] = {{"fn1", decision_fn[0]},
                               {"fp1", decision_fp[0]},
                               {"fn2", decision_fn[1]},
                               {"fp2", decision_fp[1]}};
  if (prior_name == "custom") {
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < custom_prior.components.size(); ++i) {
      const auto& pc = custom_prior.components[i];
      comps.push_back(
          {{"kind",
            pc.kind == PriorComponent::Kind::normal ? "normal" : "point"},
           {"weight", custom_prior.weights[i]},
           {"mean1", pc.mean1},
           {"mean2", pc.mean2},
           {"sd1", pc.sd1},
           {"sd2", pc.sd2}});
    }
    obj["prior"] = {{"components", comps}};
  } else {
    obj["prior"] = prior_name;
  }
  j["objective"] = obj;
  j["build"] = {{"alpha_margin", build.alpha_margin},
                {"truncation_adjust", build.truncation_adjust},
                {"power_relax_budget", build.power_relax_budget}};
  j["solver"] = solver_to_json(solver);
  j["output_dir"] = output_dir;
  return j;
}

std::string RunConfig::config_hash() const {
  const std::string dump = to_json().dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

TrialDesign RunConfig::resolve_design() const {
  TrialDesign d;
  d.p1 = p1;
  for (int k = 0; k < 2; ++k) {
    for (int a = 0; a < 2; ++a) d.sigma2[k][a] = sigma2[k][a];
  }
  d.delta_min = delta_min;
  d.alpha = alpha;
  d.beta = 1.0 - one_minus_beta;
  if (n_explicit > 0.0) {
    d.n = n_explicit;
  } else {
    // The reference sample size keeps the usual definition: the smallest n
    // at which the pooled UMP test reaches 90% power at the minimum effect.
    TrialDesign ref = d;
    ref.beta = 0.1;
    d.n = n_multiplier * n_min(ref);
  }
  d.validate();
  return d;
}

Prior RunConfig::resolve_prior(const DerivedScale& scale) const {
  if (prior_name == "custom") {
    Prior p = custom_prior;
    p.validate();
    return p;
  }
  return builtin_prior(prior_name, scale);
}

LossSpec RunConfig::resolve_loss(const DerivedScale& scale) const {
  if (loss_kind == "indicator") return LossSpec::indicator_loss(scale);
  if (loss_kind == "proportional") return LossSpec::proportional_loss(scale);
  if (loss_kind == "decision") {
    return LossSpec::decision_loss(scale, decision_fn[0], decision_fp[0],
                                   decision_fn[1], decision_fp[1]);
  }
  throw std::invalid_argument("unknown loss kind " + loss_kind);
}

// ---------------------------------------------------------------------------
// Bayes workflow.

namespace {

struct CoreSolve {
  DerivedScale scale;
  SparseLp lp;
  LpSolution solution;
  DiscreteProcedure procedure;
  double power_relaxed_by = 0;
};

int power_row_index(const SparseLp& lp) {
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    if (lp.rows[i].tag == DenseRow::Tag::power) return static_cast<int>(i);
  }
  return -1;
}

// Solves the LP, relaxing an infeasible power target by its certified
// shortfall as long as the cumulative relaxation stays within the budget.
LpSolution solve_with_power_relax(SparseLp& lp, const SolverConfig& solver,
                                  double budget, double& relaxed_by) {
  relaxed_by = 0.0;
  LpSolution sol = solve_lp(lp, solver);
  const int pr = power_row_index(lp);
  for (int attempt = 0; attempt < 4 && !sol.feasible && pr >= 0; ++attempt) {
    const double shortfall = sol.infeasibility + 1e-7;
    if (relaxed_by + shortfall > budget) break;
    relaxed_by += shortfall;
    lp.rows[pr].rhs += shortfall;  // the row is stored negated
    sol = refine_exact(lp, sol.x, solver);
  }
  return sol;
}

CoreSolve solve_bayes_core(const RunConfig& config, const ConstraintGrid* cgrid_override) {
  CoreSolve core;
  const TrialDesign design = config.resolve_design();
  core.scale = derive_scale(design);
  const RectGrid grid(config.tau, config.tau, config.b);
  const ConstraintGrid cgrid =
      cgrid_override ? *cgrid_override
                     : make_constraint_grid(core.scale, config.tau_g, config.b);
  const LossSpec loss = config.resolve_loss(core.scale);
  const Prior prior = config.resolve_prior(core.scale);
  core.lp = build_lp(design, grid, cgrid, loss, prior, {}, config.build);
  core.solution = solve_with_power_relax(core.lp, config.solver,
                                         config.build.power_relax_budget,
                                         core.power_relaxed_by);
  core.procedure.grid = grid;
  core.procedure.space = core.lp.space;
  core.procedure.action_mass = core.solution.x;
  core.procedure.label = config.label;
  return core;
}

void fill_table_values(BayesRun& run, const LossSpec& loss, const Prior& prior) {
  const double d1m = run.scale.delta1_min;
  const double d2m = run.scale.delta2_min;
  run.power_h01_single = evaluate_power(run.extended, d1m, 0.0, kH01);
  run.power_h02_single = evaluate_power(run.extended, 0.0, d2m, kH02);
  run.power_both_avg = 0.5 * (evaluate_power(run.extended, d1m, d2m, kH01) +
                              evaluate_power(run.extended, d1m, d2m, kH02));
  run.power_h0c = evaluate_power(run.extended, d1m, d2m, kH0C);
  run.bayes_risk = evaluate_bayes_risk(run.extended, loss, prior);
  run.one_minus_bayes_risk = run.risk_offset - run.bayes_risk;
}

}  // namespace

BayesRun run_bayes(const RunConfig& config) {
  BayesRun run;
  run.config = config;
  CoreSolve core = solve_bayes_core(config, nullptr);
  run.scale = core.scale;
  run.n_v = core.lp.n_v();
  run.n_d = core.lp.n_d();
  run.n_s = core.lp.n_s();
  run.risk_offset = core.lp.risk_offset;
  run.power_relaxed_by = core.power_relaxed_by;
  run.solution = std::move(core.solution);
  run.feasible = run.solution.feasible;
  run.procedure = std::move(core.procedure);
  if (!run.feasible) return run;

  run.lp_objective = run.solution.objective;
  run.extended = extend_procedure(run.procedure);
  run.verification = verify_fwer(run.extended, run.scale, config.alpha,
                                 config.fine_tau, config.b_prime);
  const LossSpec loss = config.resolve_loss(run.scale);
  const Prior prior = config.resolve_prior(run.scale);
  run.certificate = dual_lower_bound(run.solution, core.lp, loss, prior,
                                     run.scale, config.one_minus_beta);
  fill_table_values(run, loss, prior);

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    const std::string stem = config.output_dir + "/" + config.label;
    export_regions(run.procedure, stem + ".regions.csv");
    std::ofstream pj(stem + ".procedure.json");
    write_procedure_json(run.procedure, pj);
    std::ofstream ck(stem + ".checkpoint.json");
    write_checkpoint(run.solution, ck);
    write_report(run.report(), stem + ".report.json");
  }
  return run;
}

nlohmann::ordered_json BayesRun::report() const {
  nlohmann::ordered_json j;
  j["config"] = config.to_json();
  j["provenance"] = {{"config_hash", config.config_hash()},
                     {"version", kVersion}};
  j["dimensions"] = {{"n_v", n_v}, {"n_d", n_d}, {"n_s", n_s}};
  j["feasible"] = feasible;
  if (!feasible) {
    j["infeasibility"] = solution.infeasibility;
    return j;
  }
  j["objective"] = {{"lp_objective", lp_objective},
                    {"risk_offset", risk_offset},
                    {"bayes_risk", bayes_risk},
                    {"one_minus_bayes_risk", one_minus_bayes_risk}};
  j["table"] = {{"one_minus_bayes_risk", one_minus_bayes_risk},
                {"power_h01_single", power_h01_single},
                {"power_h02_single", power_h02_single},
                {"power_both_avg", power_both_avg},
                {"power_h0c", power_h0c}};
  nlohmann::ordered_json active = nlohmann::ordered_json::array();
  for (int idx : solution.active_rows) {
    active.push_back(idx);
  }
  j["solver"] = {{"gap", solution.gap},
                 {"dual_objective", solution.dual_objective},
                 {"max_violation", solution.max_violation},
                 {"subgradient_iters", solution.subgradient_iters},
                 {"refine_rounds", solution.refine_rounds},
                 {"simplex_iters", solution.simplex_iters},
                 {"power_relaxed_by", power_relaxed_by},
                 {"active_rows", active}};
  nlohmann::ordered_json active_pts = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < certificate.active_points.size(); ++k) {
    active_pts.push_back({{"d1", certificate.active_points[k].d1},
                          {"d2", certificate.active_points[k].d2},
                          {"nu", certificate.active_duals[k]}});
  }
  j["certification"] = {
      {"nu_power", certificate.nu_power},
      {"active_fwer", active_pts},
      {"lower_bound", certificate.lower_bound},
      {"primal_risk", certificate.primal_risk},
      {"bound_gap", certificate.bound_gap},
      {"quadrature_error", certificate.quadrature_error}};
  j["fwer_verification"] = {
      {"max_grid_fwer", verification.max_grid_fwer},
      {"argmax", {verification.argmax_d1, verification.argmax_d2}},
      {"margin", verification.margin},
      {"outside_bound", verification.outside_bound},
      {"tail_containment_ok", verification.tail_containment_ok},
      {"certified_bound", verification.certified_bound},
      {"points", verification.points},
      {"pass", verification.pass}};
  j["randomized_cells"] = procedure.randomized();
  j["timing"] = {{"solve_wall_time", solution.wall_time}};
  return j;
}

// ---------------------------------------------------------------------------
// Minimax workflow.

MinimaxRun run_minimax(const RunConfig& config,
                       std::vector<std::pair<double, double>> alternatives) {
  MinimaxRun run;
  run.config = config;
  const TrialDesign design = config.resolve_design();
  const DerivedScale scale = derive_scale(design);
  if (alternatives.empty()) {
    alternatives = {{scale.delta1_min, 0.0},
                    {0.0, scale.delta2_min},
                    {scale.delta1_min, scale.delta2_min}};
  }
  run.alternatives = alternatives;
  const RectGrid grid(config.tau, config.tau, config.b);
  const ConstraintGrid cgrid = make_constraint_grid(scale, config.tau_g, config.b);
  const LossSpec loss = config.resolve_loss(scale);
  const Prior prior = config.resolve_prior(scale);

  // Per-alternative risks are compared on a per-benefiting-subpopulation
  // basis: at an alternative where both subpopulations benefit the cap reads
  // E L <= v * 2. Without this normalization the double-benefit point would
  // dominate the maximum for every admissible procedure and the reported
  // value would never reflect the single-benefit risks.
  auto cap_scale = [&](double d1, double d2) {
    double s = 0.0;
    if (d1 >= loss.delta1_min) s += 1.0;
    if (d2 >= loss.delta2_min) s += 1.0;
    return std::max(1.0, s);
  };
  double hi = 0.0;
  for (const auto& [d1, d2] : alternatives) {
    hi = std::max(hi, loss_no_action(loss, d1, d2) / cap_scale(d1, d2));
  }
  std::vector<DenseRow> caps;
  for (const auto& [d1, d2] : alternatives) {
    caps.push_back(build_risk_cap_row(d1, d2, hi * cap_scale(d1, d2), grid,
                                      ActionSpace::testing(), loss));
  }
  SparseLp lp = build_lp(design, grid, cgrid, loss, prior, caps, config.build);
  const std::size_t cap_base = lp.rows.size() - caps.size();
  auto set_caps = [&](double v) {
    for (std::size_t k = 0; k < caps.size(); ++k) {
      const auto& [d1, d2] = alternatives[k];
      lp.rows[cap_base + k].rhs =
          v * cap_scale(d1, d2) - loss_no_action(loss, d1, d2);
    }
  };

  double lo = 0.0;
  run.bracket_lo = lo;
  run.bracket_hi = hi;
  set_caps(hi);
  LpSolution feasible_sol = check_feasible(lp, config.solver);
  ++run.feasibility_solves;
  if (!feasible_sol.feasible) {
    run.consistent = false;
    return run;
  }
  std::vector<double> last_x = feasible_sol.x;
  while (hi - lo >= 1e-3) {
    const double mid = 0.5 * (lo + hi);
    set_caps(mid);
    LpSolution probe = check_feasible(lp, config.solver, &last_x);
    ++run.feasibility_solves;
    if (probe.feasible) {
      hi = mid;
      feasible_sol = std::move(probe);
      last_x = feasible_sol.x;
    } else {
      lo = mid;
    }
  }
  run.bracket_lo = lo;
  run.bracket_hi = hi;
  run.value = hi;
  run.procedure.grid = grid;
  run.procedure.space = lp.space;
  run.procedure.action_mass = feasible_sol.x;
  run.procedure.label = config.label + "-minimax";
  for (const auto& [d1, d2] : alternatives) {
    run.risks.push_back(expected_loss(run.procedure, loss, d1, d2) /
                        cap_scale(d1, d2));
  }
  run.worst_index = static_cast<std::size_t>(
      std::max_element(run.risks.begin(), run.risks.end()) - run.risks.begin());
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    export_regions(run.procedure,
                   config.output_dir + "/" + config.label + ".minimax.regions.csv");
    write_report(run.report(),
                 config.output_dir + "/" + config.label + ".minimax.report.json");
  }
  return run;
}

nlohmann::ordered_json MinimaxRun::report() const {
  nlohmann::ordered_json j;
  j["config"] = config.to_json();
  j["consistent"] = consistent;
  j["value"] = value;
  j["bracket"] = {bracket_lo, bracket_hi};
  j["feasibility_solves"] = feasibility_solves;
  nlohmann::ordered_json alts = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < alternatives.size(); ++k) {
    alts.push_back({{"d1", alternatives[k].first},
                    {"d2", alternatives[k].second},
                    {"risk", k < risks.size() ? risks[k] : 0.0}});
  }
  j["alternatives"] = alts;
  j["worst_index"] = worst_index;
  return j;
}

// ---------------------------------------------------------------------------
// Decision workflow.

DecisionRun run_decision(const RunConfig& config) {
  DecisionRun run;
  run.config = config;
  const TrialDesign design = config.resolve_design();
  const DerivedScale scale = derive_scale(design);
  const RectGrid grid(config.tau, config.tau, config.b);
  const ConstraintGrid cgrid = make_constraint_grid(scale, config.tau_g, config.b);
  const LossSpec loss = config.resolve_loss(scale);
  if (!loss.decision()) {
    throw std::invalid_argument("run_decision: decision loss required");
  }
  const Prior prior = config.resolve_prior(scale);
  SparseLp lp = build_decision_lp(design, grid, cgrid, loss, prior, config.build);
  run.solution = solve_lp(lp, config.solver);
  run.feasible = run.solution.feasible;
  run.procedure.grid = grid;
  run.procedure.space = lp.space;
  run.procedure.action_mass = run.solution.x;
  run.procedure.label = config.label + "-decision";
  if (!run.feasible) return run;

  run.alternatives = {{0.0, 0.0},
                      {scale.delta1_min, 0.0},
                      {0.0, scale.delta2_min},
                      {scale.delta1_min, scale.delta2_min}};
  for (const auto& [d1, d2] : run.alternatives) {
    const std::vector<double> layer = cell_prob_layer(grid, d1, d2);
    std::array<double, 4> probs{0.0, 0.0, 0.0, 0.0};
    for (std::size_t r = 0; r < grid.size(); ++r) {
      for (int j = 1; j <= lp.n_free(); ++j) {
        probs[j] += layer[r] * run.procedure.mass(r, j);
      }
    }
    probs[0] = 1.0 - probs[1] - probs[2] - probs[3];
    run.recommend_prob.push_back(probs);
  }
  // Error probability of a nonempty recommendation at the global null.
  run.global_null_error =
      run.recommend_prob[0][1] + run.recommend_prob[0][2] + run.recommend_prob[0][3];
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    export_regions(run.procedure,
                   config.output_dir + "/" + config.label + ".decision.regions.csv");
    write_report(run.report(),
                 config.output_dir + "/" + config.label + ".decision.report.json");
  }
  return run;
}

nlohmann::ordered_json DecisionRun::report() const {
  nlohmann::ordered_json j;
  j["config"] = config.to_json();
  j["feasible"] = feasible;
  if (!feasible) return j;
  j["gap"] = solution.gap;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < alternatives.size(); ++k) {
    rows.push_back({{"d1", alternatives[k].first},
                    {"d2", alternatives[k].second},
                    {"none", recommend_prob[k][0]},
                    {"rec:1", recommend_prob[k][1]},
                    {"rec:2", recommend_prob[k][2]},
                    {"rec:1+2", recommend_prob[k][3]}});
  }
  j["recommendations"] = rows;
  j["global_null_error"] = global_null_error;
  return j;
}

// ---------------------------------------------------------------------------
// Tradeoff sweep.

TradeoffRun run_tradeoff(const RunConfig& config,
                         const std::vector<double>& beta_grid) {
  TradeoffRun run;
  run.config = config;
  std::vector<double> targets = beta_grid;
  if (targets.empty()) {
    for (double x = 0.80; x <= 0.90 + 1e-9; x += 0.005) targets.push_back(x);
  }
  // Solve from the tightest constraint down: each optimum stays feasible for
  // the next target, so the warm starts carry.
  std::sort(targets.begin(), targets.end(), std::greater<double>());

  const TrialDesign design = config.resolve_design();
  const DerivedScale scale = derive_scale(design);
  const RectGrid grid(config.tau, config.tau, config.b);
  const ConstraintGrid cgrid = make_constraint_grid(scale, config.tau_g, config.b);
  const LossSpec loss = config.resolve_loss(scale);
  const Prior prior = config.resolve_prior(scale);
  SparseLp lp = build_lp(design, grid, cgrid, loss, prior, {}, config.build);
  int power_row = -1;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    if (lp.rows[i].tag == DenseRow::Tag::power) power_row = static_cast<int>(i);
  }
  const double trunc_adjust =
      config.build.truncation_adjust
          ? -lp.rows[power_row].rhs - (1.0 - design.beta)
          : 0.0;

  std::vector<double> warm;
  for (double target : targets) {
    lp.rows[power_row].rhs = -(target + trunc_adjust);
    LpSolution sol = warm.empty() ? solve_lp(lp, config.solver)
                                  : refine_exact(lp, warm, config.solver);
    TradeoffPoint pt;
    pt.one_minus_beta = target;
    pt.feasible = sol.feasible;
    if (sol.feasible) {
      warm = sol.x;
      DiscreteProcedure proc;
      proc.grid = grid;
      proc.space = lp.space;
      proc.action_mass = sol.x;
      const ExtendedProcedure ext = extend_procedure(proc);
      pt.one_minus_bayes_risk =
          lp.risk_offset - evaluate_bayes_risk(ext, loss, prior);
      pt.power_h01_single =
          evaluate_power(ext, scale.delta1_min, 0.0, kH01);
      pt.power_h02_single =
          evaluate_power(ext, 0.0, scale.delta2_min, kH02);
      pt.power_both_avg =
          0.5 * (evaluate_power(ext, scale.delta1_min, scale.delta2_min, kH01) +
                 evaluate_power(ext, scale.delta1_min, scale.delta2_min, kH02));
      pt.power_h0c =
          evaluate_power(ext, scale.delta1_min, scale.delta2_min, kH0C);
      pt.gap = sol.gap;
    }
    run.points.push_back(pt);
  }
  std::reverse(run.points.begin(), run.points.end());  // ascending targets

  // Baseline overlays evaluated in closed form.
  const double a2 = calibrate_song_chi_alpha2(scale, 0.045, 0.1, 0.05);
  const std::vector<AnalyticProcedure> baselines = {
      rosenbaum(scale, config.alpha), make_bergmann_hommel(scale, config.alpha),
      make_song_chi(scale, 0.045, 0.1, a2)};
  for (const AnalyticProcedure& base : baselines) {
    TradeoffPoint pt;
    pt.feasible = true;
    pt.one_minus_beta =
        evaluate_power(base, scale.delta1_min, scale.delta2_min, kH0C);
    pt.one_minus_bayes_risk =
        lp.risk_offset - evaluate_bayes_risk(base, loss, prior);
    pt.power_h01_single = evaluate_power(base, scale.delta1_min, 0.0, kH01);
    pt.power_h02_single = evaluate_power(base, 0.0, scale.delta2_min, kH02);
    pt.power_both_avg =
        0.5 *
        (evaluate_power(base, scale.delta1_min, scale.delta2_min, kH01) +
         evaluate_power(base, scale.delta1_min, scale.delta2_min, kH02));
    pt.power_h0c = pt.one_minus_beta;
    run.baselines.emplace_back(base.label, pt);
  }
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    export_curves(run, config.output_dir + "/" + config.label + ".curve.csv");
    write_report(run.report(),
                 config.output_dir + "/" + config.label + ".tradeoff.report.json");
  }
  return run;
}

namespace {

nlohmann::ordered_json tradeoff_point_json(const TradeoffPoint& pt) {
  return {{"one_minus_beta", pt.one_minus_beta},
          {"feasible", pt.feasible},
          {"one_minus_bayes_risk", pt.one_minus_bayes_risk},
          {"power_h01_single", pt.power_h01_single},
          {"power_h02_single", pt.power_h02_single},
          {"power_both_avg", pt.power_both_avg},
          {"power_h0c", pt.power_h0c},
          {"gap", pt.gap}};
}

}  // namespace

nlohmann::ordered_json TradeoffRun::report() const {
  nlohmann::ordered_json j;
  j["config"] = config.to_json();
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const TradeoffPoint& pt : points) pts.push_back(tradeoff_point_json(pt));
  j["points"] = pts;
  nlohmann::ordered_json bl = nlohmann::ordered_json::array();
  for (const auto& [label, pt] : baselines) {
    nlohmann::ordered_json row = tradeoff_point_json(pt);
    row["label"] = label;
    bl.push_back(row);
  }
  j["baselines"] = bl;
  return j;
}

// ---------------------------------------------------------------------------
// Sample-size sweep.

namespace {

SampleSizePoint sample_size_point(const RunConfig& base, double multiplier) {
  RunConfig c = base;
  c.n_multiplier = multiplier;
  c.label = base.label + "-n" + std::to_string(multiplier);
  CoreSolve core = solve_bayes_core(c, nullptr);
  SampleSizePoint pt;
  pt.multiplier = multiplier;
  pt.feasible = core.solution.feasible;
  if (pt.feasible) {
    const ExtendedProcedure ext = extend_procedure(core.procedure);
    pt.power_h01_single =
        evaluate_power(ext, core.scale.delta1_min, 0.0, kH01);
    pt.power_h02_single =
        evaluate_power(ext, 0.0, core.scale.delta2_min, kH02);
  }
  return pt;
}

}  // namespace

SampleSizeRun run_sample_size_sweep(const RunConfig& config,
                                    const std::vector<double>& multipliers,
                                    double target_power) {
  SampleSizeRun run;
  run.config = config;
  if (target_power > 0.0) {
    run.inverse_mode = true;
    run.target_power = target_power;
    double lo = 1.0, hi = 1.0;
    SampleSizePoint pt = sample_size_point(config, lo);
    run.points.push_back(pt);
    auto achieved = [](const SampleSizePoint& p) {
      return std::min(p.power_h01_single, p.power_h02_single);
    };
    if (achieved(pt) < target_power) {
      while (hi < 8.0) {
        hi *= 1.25;
        pt = sample_size_point(config, hi);
        run.points.push_back(pt);
        if (achieved(pt) >= target_power) break;
      }
      while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        pt = sample_size_point(config, mid);
        run.points.push_back(pt);
        if (achieved(pt) >= target_power) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
    }
    run.achieved_multiplier = hi;
  } else {
    for (double m : multipliers) {
      run.points.push_back(sample_size_point(config, m));
    }
  }
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_report(run.report(), config.output_dir + "/" + config.label +
                                   ".samplesize.report.json");
  }
  return run;
}

nlohmann::ordered_json SampleSizeRun::report() const {
  nlohmann::ordered_json j;
  j["config"] = config.to_json();
  j["inverse_mode"] = inverse_mode;
  if (inverse_mode) {
    j["target_power"] = target_power;
    j["achieved_multiplier"] = achieved_multiplier;
  }
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const SampleSizePoint& pt : points) {
    pts.push_back({{"multiplier", pt.multiplier},
                   {"feasible", pt.feasible},
                   {"power_h01_single", pt.power_h01_single},
                   {"power_h02_single", pt.power_h02_single}});
  }
  j["points"] = pts;
  return j;
}

// ---------------------------------------------------------------------------
// Global-null-only ablation.

AblationRun run_global_null_ablation(const RunConfig& config) {
  AblationRun run;
  run.config = config;
  const TrialDesign design = config.resolve_design();
  const DerivedScale scale = derive_scale(design);
  const ConstraintGrid cgrid = global_null_grid(scale);
  CoreSolve core = solve_bayes_core(config, &cgrid);
  run.feasible = core.solution.feasible;
  run.procedure = std::move(core.procedure);
  if (!run.feasible) return run;
  run.fwer_at_d1 = fwer_at(run.procedure, scale, scale.delta1_min, 0.0);
  run.fwer_at_d2 = fwer_at(run.procedure, scale, 0.0, scale.delta2_min);
  // The ablated optimum should reject nothing or everything per cell.
  run.all_or_nothing = true;
  const int nf = run.procedure.n_free();
  for (std::size_t r = 0; r < run.procedure.grid.size() && run.all_or_nothing;
       ++r) {
    double partial = 0.0;
    for (int j = 1; j < nf; ++j) partial += run.procedure.mass(r, j);
    if (partial > 1e-6) run.all_or_nothing = false;
  }
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_report(run.report(), config.output_dir + "/" + config.label +
                                   ".ablation.report.json");
  }
  return run;
}

nlohmann::ordered_json AblationRun::report() const {
  nlohmann::ordered_json j;
  j["config"] = config.to_json();
  j["feasible"] = feasible;
  j["fwer_at_single_benefit"] = {{"d1min_0", fwer_at_d1}, {"0_d2min", fwer_at_d2}};
  j["all_or_nothing"] = all_or_nothing;
  return j;
}

// ---------------------------------------------------------------------------
// Exports.

void export_regions(const DiscreteProcedure& proc, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_regions: cannot open " + path);
  write_region_csv(proc, os);
}

void export_curves(const TradeoffRun& run, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_curves: cannot open " + path);
  os.precision(17);
  os << "label,one_minus_beta,one_minus_bayes_risk,power_h01_single,"
        "power_h02_single,power_both_avg,power_h0c,feasible\n";
  auto emit = [&](const std::string& label, const TradeoffPoint& pt) {
    os << label << ',' << pt.one_minus_beta << ',' << pt.one_minus_bayes_risk
       << ',' << pt.power_h01_single << ',' << pt.power_h02_single << ','
       << pt.power_both_avg << ',' << pt.power_h0c << ','
       << (pt.feasible ? 1 : 0) << '\n';
  };
  for (const TradeoffPoint& pt : run.points) emit("optimal", pt);
  for (const auto& [label, pt] : run.baselines) emit(label, pt);
}

void write_report(const nlohmann::ordered_json& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_report: cannot open " + path);
  os << report.dump(1) << '\n';
}

}  // namespace optmtp
