#pragma once

#include <cstdint>
#include <functional>

#include "rnnpool/diagnostics.hpp"
#include "rnnpool/model.hpp"

namespace rnnpool {

// Bias-corrected Adam with optional decoupled weight decay.
class Adam {
 public:
  Adam(const std::vector<Parameter*>& params, double lr, double weight_decay = 0.0,
       double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step();  // consumes current grads; callers zero_grad() afterwards
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_, v_;
  double lr_, weight_decay_, beta1_, beta2_, epsilon_;
  long t_ = 0;
};

struct TrainConfig {
  Eigen::Index embed_dim = 100;
  Eigen::Index hidden_dim = 256;
  double lr = 2e-3;
  int batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 1;
  ForgetBias forget_bias = ForgetBias::High;
  double weight_decay = 0.0;

  double train_acc_threshold = 0.95;   // ratio-at-threshold trigger
  bool stop_after_threshold = false;   // end training once the trigger fires
  int ratio_log_every_examples = 64;
  int profile_example_cap = 500;       // gradient profile covers the first N examples
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double valid_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<RatioEntry> ratio_series;

  // First batch at which the running training accuracy reached the threshold;
  // -1 when it never did. The accuracy window spans the last
  // ceil(train_size / batch_size) batches.
  long threshold_batch = -1;
  long threshold_examples = -1;
  double threshold_ratio = 0.0;
  bool threshold_degenerate = false;

  double best_valid_acc = 0.0;
  int best_epoch = -1;
  long total_batches = 0;
  GradientProfile profile;
};

// Per-batch observation passed to an optional external hook.
struct BatchDiagnostics {
  long batch_index = 0;
  long examples_seen = 0;
  double loss = 0.0;
  double batch_acc = 0.0;
  const std::vector<std::vector<double>>* grad_norms = nullptr;  // per example, valid positions
};

using BatchHook = std::function<void(const BatchDiagnostics&)>;

// Runs the full loop: seeded shuffles each epoch, Adam updates, gradient
// capture every batch, ratio logging every `ratio_log_every_examples`
// examples, per-epoch validation. The model is left holding the
// best-validation parameters.
TrainReport train_classifier(ClassifierModel& model, const TrainConfig& config, const Corpus& train,
                             const Corpus& valid, const BatchHook& hook = {});

// Seeded 90/10 split used when the caller has no validation file.
std::pair<Corpus, Corpus> split_validation(const Corpus& corpus, double valid_fraction,
                                           std::uint64_t seed);

}  // namespace rnnpool
