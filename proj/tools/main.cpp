#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rnnpool/commands.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BiLSTM pooling laboratory: training, positional-bias probes, gradient diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string artifact_dir;
  std::string metric = "test_acc";
  rnnpool::CommandOptions options;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", options.out_dir_override, "output directory (overrides out_dir)");
    cmd->add_option("--jobs", options.jobs, "worker threads for independent runs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed-override", options.seed_override, "replace the config seed list");
  };

  CLI::App* train = app.add_subcommand("train", "train classifiers; emits reports, checkpoints, CSVs");
  add_common(train, true);
  CLI::App* perturb = app.add_subcommand("perturb", "write distractor-appended corpus copies");
  add_common(perturb, true);
  CLI::App* nwi = app.add_subcommand("nwi", "normalized word importance curves for trained checkpoints");
  add_common(nwi, true);
  CLI::App* sweep = app.add_subcommand("sweep", "test-time distractor-fraction accuracy sweep");
  add_common(sweep, true);
  CLI::App* synth = app.add_subcommand("synth", "generate the planted-keyword corpus and distractor pool");
  add_common(synth, true);

  CLI::App* report = app.add_subcommand("report", "aggregate run metrics into a mean +- std table");
  report->add_option("--dir", artifact_dir, "directory of run artifacts")->required();
  report->add_option("--metric", metric, "manifest metric to aggregate (default test_acc)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (report->parsed()) {
      rnnpool::cmd_report(artifact_dir, metric);
      return 0;
    }
    const rnnpool::ExperimentConfig config = rnnpool::parse_config_file(config_path);
    if (train->parsed()) rnnpool::cmd_train(config, options);
    else if (perturb->parsed()) rnnpool::cmd_perturb(config, options);
    else if (nwi->parsed()) rnnpool::cmd_nwi(config, options);
    else if (sweep->parsed()) rnnpool::cmd_sweep(config, options);
    else if (synth->parsed()) rnnpool::cmd_synth(config, options);
  } catch (const rnnpool::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitRuntimeError;
  }
  return 0;
}
