#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnnpool/autodiff.hpp"

namespace rnnpool {

enum class ForgetBias { High, Low };

// Per-direction LSTM parameters. Gate order everywhere: input, forget, cell,
// output.
struct LstmParams {
  Parameter w_ii, w_if, w_ig, w_io;  // hidden x embed
  Parameter w_hi, w_hf, w_hg, w_ho;  // hidden x hidden
  Parameter b_ii, b_if, b_ig, b_io;  // hidden x 1
  Parameter b_hi, b_hf, b_hg, b_ho;  // hidden x 1

  Eigen::Index embed_dim() const { return w_ii.cols(); }
  Eigen::Index hidden_dim() const { return w_ii.rows(); }
  std::vector<Parameter*> parameters();
};

// Xavier-uniform initialization, bound sqrt(6 / (fan_in + fan_out)) with
// fan_in = cols and fan_out = rows of each tensor. ForgetBias::High then
// overwrites b_if = 1 and b_hf = 0 so the effective forget bias is exactly 1;
// ForgetBias::Low leaves the drawn values in place.
LstmParams init_lstm_params(Eigen::Index embed_dim, Eigen::Index hidden_dim, ForgetBias mode,
                            std::uint64_t seed, const std::string& name_prefix = "lstm");

struct LstmState {
  Tensor h;
  Tensor c;
};

// Gate weights stacked row-wise as [i; f; g; o], built once per tape and
// shared by every step of the sequence.
struct StackedLstmWeights {
  Tensor wx;  // 4*hidden x embed
  Tensor wh;  // 4*hidden x hidden
  Tensor bx;  // 4*hidden x 1
  Tensor bh;  // 4*hidden x 1
  Eigen::Index hidden = 0;
};

StackedLstmWeights stack_lstm_weights(Tape& tape, LstmParams& params);

// One cell update for a whole batch; x_t is (B x embed), states are (B x hidden).
LstmState lstm_cell_step(const StackedLstmWeights& w, Tensor x_t, const LstmState& prev);
LstmState lstm_cell_step(Tape& tape, LstmParams& params, Tensor x_t, const LstmState& prev);

// Encoder output. Position tensors are (B x 2*hidden) with the forward half
// first. Rows at pad positions carry the last valid state (forward) or the
// zero state (backward); `mask` marks which rows are real tokens.
struct BiLstmOutput {
  std::vector<Tensor> h;      // concatenated [fwd ; bwd] per position
  std::vector<Tensor> h_fwd;  // per-direction states, used for gradient capture
  std::vector<Tensor> h_bwd;
  Tensor last_fwd;   // last valid forward state per example
  Tensor first_bwd;  // first valid backward state per example
  Matrix mask;       // B x n, 1.0 on valid positions
  std::vector<int> lengths;
  Eigen::Index hidden_dim = 0;

  Eigen::Index batch() const { return mask.rows(); }
  Eigen::Index positions() const { return mask.cols(); }
};

// Runs both chains from zero states over every position (pads included);
// masked positions keep the previous state so per-example results match the
// unpadded sequence exactly. Requires n >= 1 and at least one valid position
// per example.
BiLstmOutput bilstm_forward(Tape& tape, LstmParams& fwd, LstmParams& bwd,
                            const std::vector<Tensor>& embedded, const Matrix& mask);

// Assembles a BiLstmOutput from externally built per-position states. Used by
// tests that need pooling to act on hand-made hidden states.
BiLstmOutput bilstm_from_states(Tape& tape, const std::vector<Tensor>& h_fwd,
                                const std::vector<Tensor>& h_bwd, const Matrix& mask);

}  // namespace rnnpool
