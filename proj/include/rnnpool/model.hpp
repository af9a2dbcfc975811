#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnnpool/data.hpp"
#include "rnnpool/pooling.hpp"

namespace rnnpool {

struct ModelConfig {
  Eigen::Index vocab_size = 0;
  Eigen::Index embed_dim = 100;
  Eigen::Index hidden_dim = 256;
  int num_classes = 2;
  PoolingKind pooling = PoolingKind::Last;
  ForgetBias forget_bias = ForgetBias::High;
};

// Embedding -> BiLSTM -> pooling head -> linear classifier.
struct ClassifierModel {
  ModelConfig config;
  Parameter embedding;  // vocab x embed, fine-tuned during training
  LstmParams fwd;
  LstmParams bwd;
  Parameter query;  // 2*hidden x 1, Attention head only
  Parameter w_out;  // 2*hidden x num_classes
  Parameter b_out;  // num_classes x 1

  std::vector<Parameter*> parameters();

  static ClassifierModel init(const ModelConfig& config, std::uint64_t seed);
  static ClassifierModel init(const ModelConfig& config, std::uint64_t seed,
                              const Matrix& embedding_init);
};

struct ForwardResult {
  BiLstmOutput encoder;
  PooledEmbedding pooled;
  Tensor logits;  // B x num_classes
};

ForwardResult model_forward(Tape& tape, ClassifierModel& model, const Batch& batch);

struct LossResult {
  Tensor loss;  // mean cross-entropy over the batch
  Tensor logits;
  ForwardResult forward;
};

LossResult forward_loss(Tape& tape, ClassifierModel& model, const Batch& batch);

// log P(label | tokens) per row; forward only.
Eigen::VectorXd label_log_probs(ClassifierModel& model, const Batch& batch);

std::vector<int> predict(const Matrix& logits);
double evaluate_accuracy(ClassifierModel& model, const Corpus& corpus, int batch_size = 32);

// Checkpoint: JSON header (tensor names, shapes, byte offsets, model/vocab
// metadata) followed by packed little-endian 64-bit floats.
void save_checkpoint(const std::string& path, ClassifierModel& model, const Vocabulary& vocab);
struct LoadedModel {
  ClassifierModel model;
  Vocabulary vocab;
};
LoadedModel load_checkpoint(const std::string& path);

}  // namespace rnnpool
