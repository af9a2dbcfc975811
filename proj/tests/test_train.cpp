#include <doctest.h>

#include <cmath>

#include "rnnpool/grad_check.hpp"
#include "rnnpool/rng.hpp"
#include "rnnpool/train.hpp"

using namespace rnnpool;

namespace {

Corpus encoded_synthetic(const SyntheticSpec& spec, std::uint64_t seed, const Vocabulary& vocab) {
  return encode_corpus(synthetic_corpus(spec, seed), vocab, spec.num_classes);
}

struct SmallTask {
  SyntheticSpec spec;
  Vocabulary vocab;
  Corpus train, valid;

  explicit SmallTask(int examples = 200, int length = 20, double keyword_pos = 0.3,
                     int classes = 2) {
    spec.num_examples = examples;
    spec.length = length;
    spec.keyword_relative_pos = keyword_pos;
    spec.num_classes = classes;
    spec.vocab_size = 30;
    const RawCorpus raw = synthetic_corpus(spec, 901);
    vocab = Vocabulary::build(raw);
    train = encode_corpus(raw, vocab, spec.num_classes);
    SyntheticSpec vspec = spec;
    vspec.num_examples = std::max(20, examples / 5);
    valid = encoded_synthetic(vspec, 902, vocab);
  }

  ModelConfig model_config(PoolingKind kind, Eigen::Index hidden = 8) const {
    ModelConfig mc;
    mc.vocab_size = static_cast<Eigen::Index>(vocab.size());
    mc.embed_dim = 6;
    mc.hidden_dim = hidden;
    mc.num_classes = spec.num_classes;
    mc.pooling = kind;
    return mc;
  }

  TrainConfig train_config(int epochs, std::uint64_t seed) const {
    TrainConfig tc;
    tc.embed_dim = 6;
    tc.hidden_dim = 8;
    tc.epochs = epochs;
    tc.seed = seed;
    tc.batch_size = 32;
    return tc;
  }
};

Matrix all_params(ClassifierModel& model) {
  Eigen::Index total = 0;
  for (Parameter* p : model.parameters()) total += p->value.size();
  Matrix flat(total, 1);
  Eigen::Index at = 0;
  for (Parameter* p : model.parameters()) {
    flat.middleRows(at, p->value.size()) = p->value.reshaped(p->value.size(), 1);
    at += p->value.size();
  }
  return flat;
}

}  // namespace

TEST_CASE("untrained loss sits near ln(C)") {
  for (int classes : {2, 5}) {
    SmallTask task(64, 12, 0.5, classes);
    ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::Mean), 1);
    std::vector<int> order;
    for (int i = 0; i < 64; ++i) order.push_back(i);
    double loss_sum = 0.0;
    long count = 0;
    for (const Batch& batch : pad_batches(task.train, order, 32)) {
      Tape tape;
      loss_sum += forward_loss(tape, model, batch).loss.scalar() * static_cast<double>(batch.labels.size());
      count += static_cast<long>(batch.labels.size());
    }
    CHECK(std::abs(loss_sum / static_cast<double>(count) - std::log(classes)) < 0.1);
  }
}

TEST_CASE("duplicated example gives identical per-example log probabilities") {
  SmallTask task(40, 10);
  ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::Max), 3);
  Corpus pair;
  pair.num_classes = task.train.num_classes;
  pair.examples = {task.train.examples[0], task.train.examples[0]};
  const Batch batch = make_batch(pair, {0, 1});
  const Eigen::VectorXd lp = label_log_probs(model, batch);
  CHECK(lp(0) == lp(1));
}

TEST_CASE("loss gradient w.r.t. the output layer passes finite differences") {
  SmallTask task(8, 6);
  ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::Attention, 3), 5);
  const Batch batch = make_batch(task.train, {0, 1, 2, 3});
  auto build = [&](Tape& t) { return forward_loss(t, model, batch).loss; };
  const GradCheckReport report =
      finite_difference_check(build, {&model.w_out, &model.b_out, &model.query}, 1e-5, 1e-4);
  CHECK_MESSAGE(report.pass, "worst rel err ", report.worst_rel_err);
}

TEST_CASE("token ids outside the vocabulary are rejected") {
  SmallTask task(8, 6);
  ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::Last), 5);
  Corpus bad = task.train;
  bad.examples[0].ids[0] = static_cast<int>(task.vocab.size()) + 4;
  const Batch batch = make_batch(bad, {0});
  Tape tape;
  CHECK_THROWS_AS(forward_loss(tape, model, batch), std::invalid_argument);
}

TEST_CASE("adam first step follows the hand-evaluated update") {
  Parameter p("p", 2, 2);
  p.value << 1.0, -2.0, 0.5, 3.0;
  p.grad << 0.3, -0.7, 0.0, 2.0;
  const Matrix before = p.value;
  const Matrix grad = p.grad;

  const double lr = 2e-3, eps = 1e-8;
  Adam adam({&p}, lr);
  adam.step();

  // at t=1 the bias corrections cancel the moment mixing: m_hat = g, v_hat = g^2
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double g = grad(i, j);
      const double expected = before(i, j) - lr * g / (std::sqrt(g * g) + eps);
      CHECK(p.value(i, j) == doctest::Approx(expected).epsilon(1e-12));
      if (g != 0.0)
        CHECK(p.value(i, j) == doctest::Approx(before(i, j) - lr * (g > 0 ? 1.0 : -1.0)).epsilon(1e-6));
      else
        CHECK(p.value(i, j) == before(i, j));
    }
}

TEST_CASE("adam with zero gradients leaves parameters alone") {
  Parameter p("p", 3, 1);
  p.value << 1.0, 2.0, 3.0;
  const Matrix before = p.value;
  Adam adam({&p}, 1e-2);
  adam.step();
  CHECK(p.value == before);
}

TEST_CASE("one adam step lowers the first-batch loss across seeds") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    SmallTask task(64, 16);
    ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::MaxAttention), seed);
    const Batch batch = make_batch(task.train, {0, 1, 2, 3, 4, 5, 6, 7});

    Adam adam(model.parameters(), 2e-3);
    for (Parameter* p : model.parameters()) p->zero_grad();
    Tape tape;
    LossResult first = forward_loss(tape, model, batch);
    const double before = first.loss.scalar();
    tape.backward(first.loss);
    adam.step();

    Tape tape2;
    const double after = forward_loss(tape2, model, batch).loss.scalar();
    CHECK(after < before);
  }
}

TEST_CASE("training is bitwise deterministic per seed") {
  SmallTask task(64, 10);
  auto run = [&](std::uint64_t seed) {
    ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::Mean), seed);
    const TrainReport report = train_classifier(model, task.train_config(1, seed), task.train, task.valid);
    return std::pair<Matrix, TrainReport>(all_params(model), report);
  };
  const auto [params_a, report_a] = run(9);
  const auto [params_b, report_b] = run(9);
  CHECK(params_a == params_b);
  CHECK(report_a.epochs[0].train_loss == report_b.epochs[0].train_loss);

  const auto [params_c, report_c] = run(10);
  CHECK(params_a != params_c);  // seed change shuffles differently
}

TEST_CASE("every pooling head solves the separable task within budget") {
  SmallTask task(200, 20, 0.3);
  for (PoolingKind kind : {PoolingKind::Last, PoolingKind::Mean, PoolingKind::Max,
                           PoolingKind::Attention, PoolingKind::MaxAttention}) {
    ClassifierModel model = ClassifierModel::init(task.model_config(kind), 11);
    const TrainReport report = train_classifier(model, task.train_config(20, 11), task.train, task.valid);
    double best_train = 0.0;
    for (const EpochStats& e : report.epochs) best_train = std::max(best_train, e.train_acc);
    CHECK_MESSAGE(best_train == 1.0, to_string(kind), " peaked at ", best_train);
    CHECK(report.epochs.size() == 20);
    CHECK(report.best_epoch >= 0);
    double max_valid = 0.0;
    for (const EpochStats& e : report.epochs) max_valid = std::max(max_valid, e.valid_acc);
    CHECK(report.best_valid_acc == max_valid);
  }
}

TEST_CASE("hooks fire once per batch and see one norm per valid position") {
  SmallTask task(48, 9);
  ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::Max), 13);
  long batches_seen = 0;
  BatchHook hook = [&](const BatchDiagnostics& diag) {
    ++batches_seen;
    CHECK(diag.batch_index == batches_seen);
    REQUIRE(diag.grad_norms != nullptr);
    for (const auto& norms : *diag.grad_norms) CHECK(norms.size() == 9);
  };
  train_classifier(model, task.train_config(1, 13), task.train, task.valid, hook);
  CHECK(batches_seen == 2);  // 48 examples / batch 32 -> 2 batches
}

TEST_CASE("evaluate_accuracy matches a constant-prediction baseline") {
  SmallTask task(60, 8);
  ClassifierModel model = ClassifierModel::init(task.model_config(PoolingKind::Last), 15);
  // silence the input path: constant logits predict class 0 everywhere
  model.embedding.value.setZero();
  for (Parameter* p : model.fwd.parameters()) p->value.setZero();
  for (Parameter* p : model.bwd.parameters()) p->value.setZero();
  model.w_out.value.setZero();
  model.b_out.value << 1.0, 0.0;

  long zeros = 0;
  for (const Example& e : task.train.examples)
    if (e.label == 0) ++zeros;
  const double majority = static_cast<double>(zeros) / static_cast<double>(task.train.size());
  CHECK(evaluate_accuracy(model, task.train) == doctest::Approx(majority));
}

TEST_CASE("validation split holds out roughly ten percent deterministically") {
  SmallTask task(100, 6);
  const auto [train_a, valid_a] = split_validation(task.train, 0.1, 21);
  const auto [train_b, valid_b] = split_validation(task.train, 0.1, 21);
  CHECK(valid_a.size() == 10);
  CHECK(train_a.size() == 90);
  REQUIRE(valid_a.size() == valid_b.size());
  for (std::size_t i = 0; i < valid_a.size(); ++i) CHECK(valid_a.examples[i].ids == valid_b.examples[i].ids);
}
