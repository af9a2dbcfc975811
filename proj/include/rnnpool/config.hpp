#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rnnpool/perturb.hpp"
#include "rnnpool/pooling.hpp"

namespace rnnpool {

// Raised for malformed configs and bad CLI usage; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One experiment = one key/value file. Unknown keys are rejected and every
// run's report echoes the resolved values.
struct ExperimentConfig {
  // data
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string distractor_path;
  std::string embeddings_path;
  std::optional<int> min_len;
  std::optional<int> max_len;
  int vocab_cap = 25000;

  // model / training
  std::vector<PoolingKind> pooling = {PoolingKind::Last};
  std::vector<std::uint64_t> seeds = {1};
  int embed_dim = 100;
  int hidden_dim = 256;
  double lr = 2e-3;
  int batch_size = 32;
  int epochs = 20;
  double weight_decay = 0.0;
  ForgetBias forget_bias = ForgetBias::High;
  bool stop_after_threshold = false;
  int ratio_log_every = 64;
  int profile_examples = 500;

  // output
  std::string out_dir = "out";

  // perturb
  KeepPosition perturb_position = KeepPosition::Mid;
  double perturb_fraction = 2.0 / 3.0;
  std::uint64_t perturb_seed = 7;

  // nwi / sweep
  std::string checkpoint_dir;
  int nwi_k = 5;
  std::optional<int> nwi_min_len;
  std::optional<int> nwi_max_len;
  int nwi_max_examples = 0;
  std::vector<double> sweep_fractions = {0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0};
  std::vector<KeepPosition> sweep_positions = {KeepPosition::Mid};

  // synth
  int synth_train = 1000;
  int synth_valid = 200;
  int synth_test = 400;
  int synth_length = 200;
  double synth_keyword_pos = 0.5;
  int synth_classes = 2;
  int synth_vocab = 200;
  int synth_distractor_sentences = 500;
  std::uint64_t synth_seed = 42;

  // Resolved key/value view, echoed into reports and manifests.
  std::map<std::string, std::string> echo() const;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

}  // namespace rnnpool
