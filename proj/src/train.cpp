#include "rnnpool/train.hpp"

#include <cmath>
#include <deque>

#include "rnnpool/rng.hpp"

namespace rnnpool {

Adam::Adam(const std::vector<Parameter*>& params, double lr, double weight_decay, double beta1,
           double beta2, double epsilon)
    : params_(params), lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    const Matrix& g = p.grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    const Matrix m_hat = m_[i] / bc1;
    const Matrix v_hat = v_[i] / bc2;
    p.value -= lr_ * m_hat.cwiseQuotient(v_hat.cwiseSqrt() + Matrix::Constant(g.rows(), g.cols(), epsilon_));
    if (weight_decay_ != 0.0) p.value -= lr_ * weight_decay_ * p.value;
  }
}

std::pair<Corpus, Corpus> split_validation(const Corpus& corpus, double valid_fraction,
                                           std::uint64_t seed) {
  std::vector<int> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed ^ 0x5851f42d4c957f2dULL);
  rng.shuffle(order);

  const auto valid_count =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(valid_fraction * static_cast<double>(corpus.size()))));
  Corpus train, valid;
  train.num_classes = valid.num_classes = corpus.num_classes;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Example& e = corpus.examples[static_cast<std::size_t>(order[i])];
    (i < valid_count ? valid : train).examples.push_back(e);
  }
  if (train.examples.empty()) throw std::invalid_argument("split_validation: nothing left for training");
  return {std::move(train), std::move(valid)};
}

namespace {

struct WindowAccuracy {
  std::deque<std::pair<long, long>> batches;  // (correct, total)
  long correct = 0, total = 0;
  std::size_t capacity = 1;

  void push(long batch_correct, long batch_total) {
    batches.emplace_back(batch_correct, batch_total);
    correct += batch_correct;
    total += batch_total;
    while (batches.size() > capacity) {
      correct -= batches.front().first;
      total -= batches.front().second;
      batches.pop_front();
    }
  }
  double value() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  bool full() const { return batches.size() >= capacity; }
};

struct RatioWindow {
  double sum = 0.0;
  long count = 0;
  long degenerate = 0;

  void add(const RatioResult& r) {
    if (r.degenerate) {
      ++degenerate;
    } else {
      sum += r.ratio;
      ++count;
    }
  }
  void reset() { *this = RatioWindow{}; }
  bool any() const { return count + degenerate > 0; }
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

std::vector<Parameter*> snapshot_targets(ClassifierModel& model) { return model.parameters(); }

}  // namespace

TrainReport train_classifier(ClassifierModel& model, const TrainConfig& config, const Corpus& train,
                             const Corpus& valid, const BatchHook& hook) {
  if (train.examples.empty() || valid.examples.empty())
    throw std::invalid_argument("train_classifier: train and valid sets must be nonempty");

  TrainReport report;
  Adam optimizer(model.parameters(), config.lr, config.weight_decay);
  for (Parameter* p : model.parameters()) p->zero_grad();

  Rng shuffle_rng(config.seed);
  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  const long batches_per_epoch =
      static_cast<long>((train.size() + static_cast<std::size_t>(config.batch_size) - 1) /
                        static_cast<std::size_t>(config.batch_size));
  WindowAccuracy window;
  window.capacity = static_cast<std::size_t>(batches_per_epoch);

  const long log_every_batches =
      std::max<long>(1, (config.ratio_log_every_examples + config.batch_size - 1) / config.batch_size);

  ProfileAccumulator profile;
  RatioWindow ratio_window;
  long batch_index = 0;
  long examples_seen = 0;
  double last_valid_acc = -1.0;

  std::vector<Matrix> best_params;
  bool stop = false;

  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    long epoch_correct = 0;
    long epoch_examples = 0;

    for (const Batch& batch : pad_batches(train, order, config.batch_size)) {
      Tape tape;
      LossResult result = forward_loss(tape, model, batch);
      tape.backward(result.loss);

      ++batch_index;
      examples_seen += static_cast<long>(batch.labels.size());
      epoch_examples += static_cast<long>(batch.labels.size());
      loss_sum += result.loss.scalar() * static_cast<double>(batch.labels.size());

      const std::vector<int> guesses = predict(result.logits.value());
      long batch_correct = 0;
      for (std::size_t i = 0; i < guesses.size(); ++i)
        if (guesses[i] == batch.labels[i]) ++batch_correct;
      epoch_correct += batch_correct;
      window.push(batch_correct, static_cast<long>(batch.labels.size()));

      const auto norms = capture_grad_norms(result.forward.encoder);
      RatioWindow batch_ratio;
      for (const auto& example_norms : norms) {
        if (example_norms.size() >= 2) {
          const RatioResult r = vanishing_ratio(example_norms);
          ratio_window.add(r);
          batch_ratio.add(r);
        }
        if (profile.count() < config.profile_example_cap) profile.add(example_norms);
      }

      if (hook) {
        BatchDiagnostics diag;
        diag.batch_index = batch_index;
        diag.examples_seen = examples_seen;
        diag.loss = result.loss.scalar();
        diag.batch_acc = static_cast<double>(batch_correct) / static_cast<double>(batch.labels.size());
        diag.grad_norms = &norms;
        hook(diag);
      }

      if (batch_index % log_every_batches == 0 && ratio_window.any()) {
        RatioEntry entry;
        entry.batch_index = batch_index;
        entry.examples_seen = examples_seen;
        entry.degenerate = ratio_window.count == 0;
        entry.ratio = ratio_window.mean();
        entry.train_acc = window.value();
        entry.valid_acc = last_valid_acc;
        report.ratio_series.push_back(entry);
        ratio_window.reset();
      }

      if (report.threshold_batch < 0 && window.full() && window.value() >= config.train_acc_threshold) {
        report.threshold_batch = batch_index;
        report.threshold_examples = examples_seen;
        report.threshold_degenerate = batch_ratio.count == 0;
        report.threshold_ratio = batch_ratio.mean();
        if (config.stop_after_threshold) stop = true;
      }

      optimizer.step();
      for (Parameter* p : model.parameters()) p->zero_grad();
      tape.reset();
      if (stop) break;
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(epoch_examples);
    stats.train_acc = static_cast<double>(epoch_correct) / static_cast<double>(epoch_examples);
    stats.valid_acc = evaluate_accuracy(model, valid, config.batch_size);
    last_valid_acc = stats.valid_acc;
    report.epochs.push_back(stats);

    if (report.best_epoch < 0 || stats.valid_acc > report.best_valid_acc) {
      report.best_valid_acc = stats.valid_acc;
      report.best_epoch = epoch;
      best_params.clear();
      for (Parameter* p : snapshot_targets(model)) best_params.push_back(p->value);
    }
  }

  report.total_batches = batch_index;
  report.profile = profile.mean();

  if (!best_params.empty()) {
    auto targets = snapshot_targets(model);
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i]->value = best_params[i];
  }
  return report;
}

}  // namespace rnnpool
