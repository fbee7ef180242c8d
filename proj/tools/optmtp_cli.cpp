// Command-line front end: named workflows over a JSON run configuration.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "optmtp/analysis.hpp"
#include "optmtp/workflows.hpp"

namespace {

using optmtp::RunConfig;

RunConfig load_config(const std::string& config_path, const std::string& preset,
                      const CLI::App& app) {
  RunConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
    nlohmann::json j;
    in >> j;
    cfg = RunConfig::from_json(j);
  } else if (!preset.empty()) {
    cfg = RunConfig::preset(preset);
  }
  return cfg;
}

void add_common(CLI::App* cmd, std::string& config_path, std::string& preset,
                RunConfig& overrides, bool& has_beta, double& beta,
                bool& has_seed, std::uint64_t& seed) {
  cmd->add_option("--config", config_path, "JSON run configuration file");
  cmd->add_option("--preset", preset,
                  "named preset: sym, asym, sym-normal, asym-normal");
  cmd->add_option("--label", overrides.label, "run label for output files");
  cmd->add_option("--out", overrides.output_dir, "output directory");
  cmd->add_option("--tau", overrides.tau, "rectangle spacing");
  cmd->add_option("--tau-g", overrides.tau_g, "constraint-grid spacing");
  cmd->add_option("--b", overrides.b, "half-width of the solve box");
  cmd->add_option("--b-prime", overrides.b_prime, "verification half-width");
  cmd->add_option("--fine-tau", overrides.fine_tau, "verification grid spacing");
  cmd->add_option("--p1", overrides.p1, "subpopulation-1 fraction");
  cmd->add_option("--alpha", overrides.alpha, "familywise error level");
  cmd->add_option_function<double>(
      "--one-minus-beta",
      [&has_beta, &beta](const double& v) {
        has_beta = true;
        beta = v;
      },
      "combined-population power target");
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&has_seed, &seed](const std::uint64_t& v) {
        has_seed = true;
        seed = v;
      },
      "subgradient RNG seed");
  cmd->add_option("--prior", overrides.prior_name, "builtin prior name");
  cmd->add_option("--loss", overrides.loss_kind,
                  "loss kind: indicator, proportional, decision");
}

struct CommonArgs {
  std::string config_path;
  std::string preset;
  RunConfig overrides;
  bool has_beta = false;
  double beta = 0.9;
  bool has_seed = false;
  std::uint64_t seed = 1;

  RunConfig resolve(const CLI::App& app, CLI::App* cmd) const {
    RunConfig cfg = load_config(config_path, preset, app);
    auto touched = [&](const std::string& name) {
      return cmd->count(name) > 0;
    };
    if (touched("--label")) cfg.label = overrides.label;
    if (touched("--out")) cfg.output_dir = overrides.output_dir;
    if (touched("--tau")) cfg.tau = overrides.tau;
    if (touched("--tau-g")) cfg.tau_g = overrides.tau_g;
    if (touched("--b")) cfg.b = overrides.b;
    if (touched("--b-prime")) cfg.b_prime = overrides.b_prime;
    if (touched("--fine-tau")) cfg.fine_tau = overrides.fine_tau;
    if (touched("--p1")) cfg.p1 = overrides.p1;
    if (touched("--alpha")) cfg.alpha = overrides.alpha;
    if (touched("--prior")) cfg.prior_name = overrides.prior_name;
    if (touched("--loss")) cfg.loss_kind = overrides.loss_kind;
    if (has_beta) cfg.one_minus_beta = beta;
    if (has_seed) cfg.solver.rng_seed = seed;
    if (cfg.tau <= 0.05) {
      std::cerr << "note: tau <= 0.05 builds a large instance; expect a long solve\n";
    }
    return cfg;
  }
};

int emit_and_status(const nlohmann::ordered_json& report, bool ok) {
  std::cout << report.dump(1) << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal subpopulation testing designs via block-sparse LP"};
  app.require_subcommand(1);

  CommonArgs bayes_args, minimax_args, decision_args, tradeoff_args,
      samplesize_args, ablate_args, verify_args, bound_args;

  auto* bayes = app.add_subcommand("bayes", "constrained Bayes solve");
  add_common(bayes, bayes_args.config_path, bayes_args.preset,
             bayes_args.overrides, bayes_args.has_beta, bayes_args.beta,
             bayes_args.has_seed, bayes_args.seed);

  auto* minimax = app.add_subcommand("minimax", "minimax solve by bisection");
  add_common(minimax, minimax_args.config_path, minimax_args.preset,
             minimax_args.overrides, minimax_args.has_beta, minimax_args.beta,
             minimax_args.has_seed, minimax_args.seed);

  auto* decision = app.add_subcommand("decision", "treatment-recommendation solve");
  add_common(decision, decision_args.config_path, decision_args.preset,
             decision_args.overrides, decision_args.has_beta, decision_args.beta,
             decision_args.has_seed, decision_args.seed);

  auto* tradeoff = app.add_subcommand("tradeoff", "power-tradeoff sweep");
  add_common(tradeoff, tradeoff_args.config_path, tradeoff_args.preset,
             tradeoff_args.overrides, tradeoff_args.has_beta, tradeoff_args.beta,
             tradeoff_args.has_seed, tradeoff_args.seed);
  double beta_from = 0.80, beta_to = 0.90, beta_step = 0.005;
  tradeoff->add_option("--from", beta_from, "lowest power target");
  tradeoff->add_option("--to", beta_to, "highest power target");
  tradeoff->add_option("--step", beta_step, "power-target step");

  auto* samplesize = app.add_subcommand("samplesize", "sample-size sweep");
  add_common(samplesize, samplesize_args.config_path, samplesize_args.preset,
             samplesize_args.overrides, samplesize_args.has_beta,
             samplesize_args.beta, samplesize_args.has_seed, samplesize_args.seed);
  std::vector<double> multipliers = {1.0, 1.03, 1.06};
  double target_power = 0.0;
  samplesize->add_option("--multipliers", multipliers, "n / n_min grid");
  samplesize->add_option("--target-power", target_power,
                         "inverse mode: bisect n/n_min to this power");

  auto* ablate = app.add_subcommand("ablate-global-null",
                                    "solve with only the global-null constraint");
  add_common(ablate, ablate_args.config_path, ablate_args.preset,
             ablate_args.overrides, ablate_args.has_beta, ablate_args.beta,
             ablate_args.has_seed, ablate_args.seed);

  auto* verify = app.add_subcommand("verify", "verify a stored procedure");
  add_common(verify, verify_args.config_path, verify_args.preset,
             verify_args.overrides, verify_args.has_beta, verify_args.beta,
             verify_args.has_seed, verify_args.seed);
  std::string procedure_path;
  verify->add_option("--procedure", procedure_path, "procedure JSON file")
      ->required();

  auto* bound = app.add_subcommand("bound", "re-derive the dual lower bound");
  add_common(bound, bound_args.config_path, bound_args.preset,
             bound_args.overrides, bound_args.has_beta, bound_args.beta,
             bound_args.has_seed, bound_args.seed);

  auto* export_cmd = app.add_subcommand("export", "procedure JSON to region CSV");
  std::string export_in, export_out;
  export_cmd->add_option("--procedure", export_in, "procedure JSON file")
      ->required();
  export_cmd->add_option("--csv", export_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (bayes->parsed()) {
      const auto run = optmtp::run_bayes(bayes_args.resolve(app, bayes));
      return emit_and_status(run.report(),
                             run.feasible && run.verification.pass);
    }
    if (minimax->parsed()) {
      const auto run = optmtp::run_minimax(minimax_args.resolve(app, minimax));
      return emit_and_status(run.report(), run.consistent);
    }
    if (decision->parsed()) {
      RunConfig cfg = decision_args.resolve(app, decision);
      cfg.loss_kind = "decision";
      const auto run = optmtp::run_decision(cfg);
      return emit_and_status(run.report(), run.feasible);
    }
    if (tradeoff->parsed()) {
      std::vector<double> grid;
      for (double x = beta_from; x <= beta_to + 1e-9; x += beta_step) {
        grid.push_back(x);
      }
      const auto run =
          optmtp::run_tradeoff(tradeoff_args.resolve(app, tradeoff), grid);
      bool any = false;
      for (const auto& pt : run.points) any = any || pt.feasible;
      return emit_and_status(run.report(), any);
    }
    if (samplesize->parsed()) {
      const auto run = optmtp::run_sample_size_sweep(
          samplesize_args.resolve(app, samplesize), multipliers, target_power);
      return emit_and_status(run.report(), true);
    }
    if (ablate->parsed()) {
      const auto run =
          optmtp::run_global_null_ablation(ablate_args.resolve(app, ablate));
      return emit_and_status(run.report(), run.feasible);
    }
    if (verify->parsed()) {
      RunConfig cfg = verify_args.resolve(app, verify);
      std::ifstream in(procedure_path);
      if (!in) {
        std::cerr << "cannot open " << procedure_path << '\n';
        return 2;
      }
      const auto proc = optmtp::read_procedure_json(in);
      const auto scale = optmtp::derive_scale(cfg.resolve_design());
      const auto ext = optmtp::extend_procedure(proc);
      const auto v = optmtp::verify_fwer(ext, scale, cfg.alpha, cfg.fine_tau,
                                         cfg.b_prime);
      nlohmann::ordered_json j;
      j["max_grid_fwer"] = v.max_grid_fwer;
      j["certified_bound"] = v.certified_bound;
      j["tail_containment_ok"] = v.tail_containment_ok;
      j["pass"] = v.pass;
      return emit_and_status(j, v.pass);
    }
    if (bound->parsed()) {
      const auto run = optmtp::run_bayes(bound_args.resolve(app, bound));
      nlohmann::ordered_json j;
      j["lower_bound"] = run.certificate.lower_bound;
      j["primal_risk"] = run.certificate.primal_risk;
      j["bound_gap"] = run.certificate.bound_gap;
      return emit_and_status(j, run.feasible);
    }
    if (export_cmd->parsed()) {
      std::ifstream in(export_in);
      if (!in) {
        std::cerr << "cannot open " << export_in << '\n';
        return 2;
      }
      const auto proc = optmtp::read_procedure_json(in);
      optmtp::export_regions(proc, export_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
