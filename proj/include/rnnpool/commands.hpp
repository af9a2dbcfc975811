#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rnnpool/config.hpp"

namespace rnnpool {

struct CommandOptions {
  std::string out_dir_override;
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
};

// Subcommand entry points. Bad configs throw ConfigError (exit 2); runtime
// failures throw other exceptions (exit 3) after leaving a FAILED marker in
// the run directory.
void cmd_train(ExperimentConfig config, const CommandOptions& options);
void cmd_perturb(ExperimentConfig config, const CommandOptions& options);
void cmd_nwi(ExperimentConfig config, const CommandOptions& options);
void cmd_sweep(ExperimentConfig config, const CommandOptions& options);
void cmd_synth(ExperimentConfig config, const CommandOptions& options);
void cmd_report(const std::string& artifact_dir, const std::string& metric, std::string* rendered = nullptr);

}  // namespace rnnpool
