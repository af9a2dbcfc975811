#pragma once

#include <string>

#include "rnnpool/lstm.hpp"

namespace rnnpool {

enum class PoolingKind { Last, Mean, Max, Attention, MaxAttention };

PoolingKind pooling_from_string(const std::string& s);
std::string to_string(PoolingKind kind);

// Additive score for pad positions; exp() underflows to exactly 0 after
// max-subtraction, so pad weights are exactly zero.
inline constexpr double kPadScore = -1e30;
// Guard for normalizing near-zero hidden states in max-attention.
inline constexpr double kNormFloor = 1e-12;

struct PooledEmbedding {
  Tensor s_emb;                    // B x 2*hidden
  Matrix alpha;                    // B x n attention weights; empty for last/mean/max
  IndexMatrix argmax_positions;    // B x 2*hidden winning positions; empty unless max-family
};

PooledEmbedding pool_last(const BiLstmOutput& out);
PooledEmbedding pool_mean(const BiLstmOutput& out);
PooledEmbedding pool_max(const BiLstmOutput& out);
// Luong attention: scores h_t . q with a corpus-wide learnable query.
PooledEmbedding pool_attention(const BiLstmOutput& out, Tensor query);
// Max-attention: the max-pooled representation is the query; scores use
// L2-normalized states but the weighted sum uses the raw ones.
PooledEmbedding pool_max_attention(const BiLstmOutput& out);

PooledEmbedding pool(const BiLstmOutput& out, PoolingKind kind, Tensor query = {});

}  // namespace rnnpool
