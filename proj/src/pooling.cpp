#include "rnnpool/pooling.hpp"

namespace rnnpool {

PoolingKind pooling_from_string(const std::string& s) {
  if (s == "last") return PoolingKind::Last;
  if (s == "mean") return PoolingKind::Mean;
  if (s == "max") return PoolingKind::Max;
  if (s == "attention") return PoolingKind::Attention;
  if (s == "max_attention") return PoolingKind::MaxAttention;
  throw std::invalid_argument("unknown pooling kind '" + s +
                              "' (expected last|mean|max|attention|max_attention)");
}

std::string to_string(PoolingKind kind) {
  switch (kind) {
    case PoolingKind::Last: return "last";
    case PoolingKind::Mean: return "mean";
    case PoolingKind::Max: return "max";
    case PoolingKind::Attention: return "attention";
    case PoolingKind::MaxAttention: return "max_attention";
  }
  return "?";
}

namespace {

Tape& tape_of(const BiLstmOutput& out) { return *out.h.front().tape; }

// Masked attention scores -> alpha, shared by both attention heads.
Tensor masked_softmax(const BiLstmOutput& out, const std::vector<Tensor>& score_cols) {
  Tape& tape = tape_of(out);
  Tensor scores = stack_cols(score_cols);
  Matrix sentinel = Matrix::Zero(out.batch(), out.positions());
  for (Eigen::Index i = 0; i < out.batch(); ++i)
    for (Eigen::Index t = 0; t < out.positions(); ++t)
      if (out.mask(i, t) <= 0.0) sentinel(i, t) = kPadScore;
  return softmax_rows(scores + tape.constant(std::move(sentinel)));
}

}  // namespace

PooledEmbedding pool_last(const BiLstmOutput& out) {
  PooledEmbedding pooled;
  pooled.s_emb = concat_cols(out.last_fwd, out.first_bwd);
  return pooled;
}

PooledEmbedding pool_mean(const BiLstmOutput& out) {
  Tape& tape = tape_of(out);
  Tensor acc;
  for (Eigen::Index t = 0; t < out.positions(); ++t) {
    Matrix w(out.batch(), 1);
    for (Eigen::Index i = 0; i < out.batch(); ++i)
      w(i, 0) = out.mask(i, t) > 0.0 ? 1.0 / out.lengths[static_cast<std::size_t>(i)] : 0.0;
    Tensor term = scale_rows(out.h[static_cast<std::size_t>(t)], tape.constant(std::move(w)));
    acc = acc.defined() ? acc + term : term;
  }
  PooledEmbedding pooled;
  pooled.s_emb = acc;
  return pooled;
}

PooledEmbedding pool_max(const BiLstmOutput& out) {
  PooledEmbedding pooled;
  pooled.s_emb = max_over(out.h, out.mask);
  pooled.argmax_positions = argmax_record(pooled.s_emb);
  return pooled;
}

PooledEmbedding pool_attention(const BiLstmOutput& out, Tensor query) {
  if (!query.defined()) throw std::invalid_argument("pool_attention: undefined query");
  std::vector<Tensor> scores;
  scores.reserve(out.h.size());
  for (const Tensor& h_t : out.h) scores.push_back(matmul(h_t, query));
  Tensor alpha = masked_softmax(out, scores);

  PooledEmbedding pooled;
  pooled.s_emb = weighted_sum(out.h, alpha);
  pooled.alpha = alpha.value();
  return pooled;
}

PooledEmbedding pool_max_attention(const BiLstmOutput& out) {
  Tensor query = max_over(out.h, out.mask);  // B x 2h, one query per sentence

  std::vector<Tensor> scores;
  scores.reserve(out.h.size());
  for (const Tensor& h_t : out.h) {
    Tensor inv_norm = reciprocal(clamp_min(reduce(Reduce::L2Norm, h_t, Axis::Cols), kNormFloor));
    Tensor h_hat = scale_rows(h_t, inv_norm);
    scores.push_back(reduce(Reduce::Sum, h_hat * query, Axis::Cols));
  }
  Tensor alpha = masked_softmax(out, scores);

  PooledEmbedding pooled;
  pooled.s_emb = weighted_sum(out.h, alpha);  // raw states in the sum
  pooled.alpha = alpha.value();
  pooled.argmax_positions = argmax_record(query);
  return pooled;
}

PooledEmbedding pool(const BiLstmOutput& out, PoolingKind kind, Tensor query) {
  switch (kind) {
    case PoolingKind::Last: return pool_last(out);
    case PoolingKind::Mean: return pool_mean(out);
    case PoolingKind::Max: return pool_max(out);
    case PoolingKind::Attention: return pool_attention(out, query);
    case PoolingKind::MaxAttention: return pool_max_attention(out);
  }
  throw std::invalid_argument("pool: bad kind");
}

}  // namespace rnnpool
