// Command-line experiment runner: `run` executes a configured experiment
// and writes CSV traces, `validate` runs the theory-validation suite,
// `sweep` scans one parameter axis.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fastpca/errors.hpp"
#include "fastpca/harness.hpp"

namespace {

void apply_overrides(fastpca::ExperimentConfig& cfg, const CLI::App& cmd) {
  auto set_if_given = [&cmd](const std::string& name, auto&& apply) {
    const CLI::Option* opt = cmd.get_option_no_throw(name);
    if (opt && opt->count()) apply(*opt);
  };
  set_if_given("--seed", [&](const CLI::Option& o) {
    cfg.master_seed = o.as<std::uint64_t>();
  });
  set_if_given("--out", [&](const CLI::Option& o) {
    cfg.out_dir = o.as<std::string>();
  });
  set_if_given("--trials", [&](const CLI::Option& o) {
    cfg.n_trials = o.as<int>();
  });
  set_if_given("--accounting", [&](const CLI::Option& o) {
    cfg.accounting = o.as<std::string>() == "payload"
                         ? fastpca::Accounting::payload
                         : fastpca::Accounting::paper;
  });
  set_if_given("--safe-alpha",
               [&](const CLI::Option&) { cfg.safe_alpha = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FAST-PCA distributed PCA simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string axis;
  std::vector<double> values;
  std::string sweep_out = "sweep.csv";
  fastpca::ValidateOptions vopts;

  auto* run_cmd = app.add_subcommand("run", "run a configured experiment");
  run_cmd->add_option("config", config_path, "experiment config file")
      ->required();
  run_cmd->add_option("--seed", "master seed override");
  run_cmd->add_option("--out", "output directory override");
  run_cmd->add_option("--trials", "Monte-Carlo trial count override");
  run_cmd->add_option("--accounting", "comm accounting: paper | payload")
      ->check(CLI::IsMember({"paper", "payload"}));
  run_cmd->add_flag("--safe-alpha",
                    "replace alpha by 0.9x the theoretical step-size bound");

  auto* validate_cmd =
      app.add_subcommand("validate", "run the theory-validation suite");
  validate_cmd->add_option("--alpha", vopts.alpha_override,
                           "step size for the identity checks");
  validate_cmd->add_flag("--strict-alpha", vopts.strict_alpha,
                         "record a warning when alpha exceeds the bound");
  validate_cmd->add_flag("--corrupt-tracker", vopts.corrupt_tracker,
                         "negative control: perturb one tracker mid-run");
  validate_cmd->add_option("--seed", vopts.seed, "suite seed");

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one parameter axis");
  sweep_cmd->add_option("config", config_path, "experiment config file")
      ->required();
  sweep_cmd->add_option("--axis", axis, "alpha | beta | gap")->required();
  sweep_cmd->add_option("--values", values, "axis values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--out", sweep_out, "output CSV path");
  sweep_cmd->add_option("--seed", "master seed override");
  sweep_cmd->add_option("--trials", "Monte-Carlo trial count override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      auto cfg = fastpca::load_config(config_path);
      apply_overrides(cfg, *run_cmd);
      const auto result = fastpca::run(cfg);
      for (const auto& file : result.written_files)
        std::cout << "wrote " << file << "\n";
      return 0;
    }
    if (validate_cmd->parsed()) {
      const auto report = fastpca::validate(vopts);
      std::cout << report.to_string();
      return report.all_passed ? 0 : 1;
    }
    if (sweep_cmd->parsed()) {
      auto cfg = fastpca::load_config(config_path);
      apply_overrides(cfg, *sweep_cmd);
      const auto rows = fastpca::sweep(cfg, axis, values);
      std::ofstream out(sweep_out, std::ios::binary);
      if (!out) throw fastpca::FormatError("cannot open " + sweep_out);
      out << fastpca::sweep_to_csv(rows, axis);
      std::cout << "wrote " << sweep_out << "\n";
      return 0;
    }
  } catch (const fastpca::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fastpca::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
