#include "rnnpool/lstm.hpp"

#include <cmath>

#include "rnnpool/rng.hpp"

namespace rnnpool {

namespace {

void xavier_fill(Parameter& p, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(p.rows() + p.cols()));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) p.value(i, j) = rng.uniform(-bound, bound);
}

// valid ? current : carry, per example row
Tensor select_rows(Tensor current, Tensor carry, Tensor valid, Tensor invalid) {
  return scale_rows(current, valid) + scale_rows(carry, invalid);
}

}  // namespace

std::vector<Parameter*> LstmParams::parameters() {
  return {&w_ii, &w_if, &w_ig, &w_io, &w_hi, &w_hf, &w_hg, &w_ho,
          &b_ii, &b_if, &b_ig, &b_io, &b_hi, &b_hf, &b_hg, &b_ho};
}

LstmParams init_lstm_params(Eigen::Index embed_dim, Eigen::Index hidden_dim, ForgetBias mode,
                            std::uint64_t seed, const std::string& name_prefix) {
  if (embed_dim < 1 || hidden_dim < 1) throw std::invalid_argument("init_lstm_params: dims must be >= 1");
  LstmParams p;
  auto name = [&](const char* suffix) { return name_prefix + "." + suffix; };
  p.w_ii = Parameter(name("w_ii"), hidden_dim, embed_dim);
  p.w_if = Parameter(name("w_if"), hidden_dim, embed_dim);
  p.w_ig = Parameter(name("w_ig"), hidden_dim, embed_dim);
  p.w_io = Parameter(name("w_io"), hidden_dim, embed_dim);
  p.w_hi = Parameter(name("w_hi"), hidden_dim, hidden_dim);
  p.w_hf = Parameter(name("w_hf"), hidden_dim, hidden_dim);
  p.w_hg = Parameter(name("w_hg"), hidden_dim, hidden_dim);
  p.w_ho = Parameter(name("w_ho"), hidden_dim, hidden_dim);
  p.b_ii = Parameter(name("b_ii"), hidden_dim, 1);
  p.b_if = Parameter(name("b_if"), hidden_dim, 1);
  p.b_ig = Parameter(name("b_ig"), hidden_dim, 1);
  p.b_io = Parameter(name("b_io"), hidden_dim, 1);
  p.b_hi = Parameter(name("b_hi"), hidden_dim, 1);
  p.b_hf = Parameter(name("b_hf"), hidden_dim, 1);
  p.b_hg = Parameter(name("b_hg"), hidden_dim, 1);
  p.b_ho = Parameter(name("b_ho"), hidden_dim, 1);

  Rng rng(seed);
  for (Parameter* w : p.parameters()) xavier_fill(*w, rng);

  if (mode == ForgetBias::High) {
    // only the sum b_if + b_hf enters the gate; put the whole unit on b_if
    p.b_if.value.setConstant(1.0);
    p.b_hf.value.setZero();
  }
  return p;
}

StackedLstmWeights stack_lstm_weights(Tape& tape, LstmParams& p) {
  StackedLstmWeights w;
  w.hidden = p.hidden_dim();
  w.wx = concat_rows({tape.leaf(p.w_ii), tape.leaf(p.w_if), tape.leaf(p.w_ig), tape.leaf(p.w_io)});
  w.wh = concat_rows({tape.leaf(p.w_hi), tape.leaf(p.w_hf), tape.leaf(p.w_hg), tape.leaf(p.w_ho)});
  w.bx = concat_rows({tape.leaf(p.b_ii), tape.leaf(p.b_if), tape.leaf(p.b_ig), tape.leaf(p.b_io)});
  w.bh = concat_rows({tape.leaf(p.b_hi), tape.leaf(p.b_hf), tape.leaf(p.b_hg), tape.leaf(p.b_ho)});
  return w;
}

LstmState lstm_cell_step(const StackedLstmWeights& w, Tensor x_t, const LstmState& prev) {
  const Eigen::Index h = w.hidden;
  Tensor pre = matmul_nt(x_t, w.wx) + matmul_nt(prev.h, w.wh);
  pre = add_row_broadcast(pre, w.bx);
  pre = add_row_broadcast(pre, w.bh);

  Tensor i = sigmoid(slice_cols(pre, 0, h));
  Tensor f = sigmoid(slice_cols(pre, h, h));
  Tensor g = tanh(slice_cols(pre, 2 * h, h));
  Tensor o = sigmoid(slice_cols(pre, 3 * h, h));

  LstmState next;
  next.c = f * prev.c + i * g;
  next.h = o * tanh(next.c);
  return next;
}

LstmState lstm_cell_step(Tape& tape, LstmParams& params, Tensor x_t, const LstmState& prev) {
  if (x_t.cols() != params.embed_dim())
    throw std::invalid_argument("lstm_cell_step: input width " + std::to_string(x_t.cols()) +
                                " does not match embed_dim " + std::to_string(params.embed_dim()));
  if (prev.h.cols() != params.hidden_dim() || prev.c.cols() != params.hidden_dim())
    throw std::invalid_argument("lstm_cell_step: state width does not match hidden_dim");
  return lstm_cell_step(stack_lstm_weights(tape, params), x_t, prev);
}

namespace {

std::vector<int> mask_lengths(const Matrix& mask) {
  std::vector<int> lengths(static_cast<std::size_t>(mask.rows()), 0);
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    int len = 0;
    for (Eigen::Index t = 0; t < mask.cols(); ++t) {
      if (mask(i, t) > 0.0) {
        if (t != len) throw std::invalid_argument("bilstm_forward: mask must be contiguous with trailing pads");
        ++len;
      }
    }
    if (len == 0) throw std::invalid_argument("bilstm_forward: example with no valid positions");
    lengths[static_cast<std::size_t>(i)] = len;
  }
  return lengths;
}

}  // namespace

BiLstmOutput bilstm_forward(Tape& tape, LstmParams& fwd, LstmParams& bwd,
                            const std::vector<Tensor>& embedded, const Matrix& mask) {
  if (embedded.empty()) throw std::invalid_argument("bilstm_forward: empty sequence");
  const Eigen::Index batch = embedded[0].rows();
  const auto n = static_cast<Eigen::Index>(embedded.size());
  if (mask.rows() != batch || mask.cols() != n)
    throw std::invalid_argument("bilstm_forward: mask shape does not match embedded input");

  BiLstmOutput out;
  out.mask = mask;
  out.lengths = mask_lengths(mask);
  out.hidden_dim = fwd.hidden_dim();
  out.h_fwd.resize(static_cast<std::size_t>(n));
  out.h_bwd.resize(static_cast<std::size_t>(n));
  out.h.resize(static_cast<std::size_t>(n));

  std::vector<bool> all_valid(static_cast<std::size_t>(n), true);
  std::vector<Tensor> valid_col(static_cast<std::size_t>(n)), invalid_col(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) {
    bool full = true;
    for (Eigen::Index i = 0; i < batch; ++i) full = full && mask(i, t) > 0.0;
    all_valid[static_cast<std::size_t>(t)] = full;
    if (!full) {
      Matrix v = mask.col(t);
      valid_col[static_cast<std::size_t>(t)] = tape.constant(v);
      invalid_col[static_cast<std::size_t>(t)] = tape.constant(Matrix::Ones(batch, 1) - v);
    }
  }

  StackedLstmWeights wf = stack_lstm_weights(tape, fwd);
  StackedLstmWeights wb = stack_lstm_weights(tape, bwd);

  LstmState state{tape.constant(Matrix::Zero(batch, fwd.hidden_dim())),
                  tape.constant(Matrix::Zero(batch, fwd.hidden_dim()))};
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    LstmState next = lstm_cell_step(wf, embedded[ti], state);
    if (!all_valid[ti]) {
      next.h = select_rows(next.h, state.h, valid_col[ti], invalid_col[ti]);
      next.c = select_rows(next.c, state.c, valid_col[ti], invalid_col[ti]);
    }
    out.h_fwd[ti] = next.h;
    state = next;
  }

  state = {tape.constant(Matrix::Zero(batch, bwd.hidden_dim())),
           tape.constant(Matrix::Zero(batch, bwd.hidden_dim()))};
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    LstmState next = lstm_cell_step(wb, embedded[ti], state);
    if (!all_valid[ti]) {
      next.h = select_rows(next.h, state.h, valid_col[ti], invalid_col[ti]);
      next.c = select_rows(next.c, state.c, valid_col[ti], invalid_col[ti]);
    }
    out.h_bwd[ti] = next.h;
    state = next;
  }

  for (std::size_t t = 0; t < static_cast<std::size_t>(n); ++t)
    out.h[t] = concat_cols(out.h_fwd[t], out.h_bwd[t]);
  out.last_fwd = out.h_fwd.back();
  out.first_bwd = out.h_bwd.front();
  return out;
}

BiLstmOutput bilstm_from_states(Tape& tape, const std::vector<Tensor>& h_fwd,
                                const std::vector<Tensor>& h_bwd, const Matrix& mask) {
  if (h_fwd.empty() || h_fwd.size() != h_bwd.size())
    throw std::invalid_argument("bilstm_from_states: state lists empty or mismatched");
  BiLstmOutput out;
  out.mask = mask;
  out.lengths = mask_lengths(mask);
  out.hidden_dim = h_fwd[0].cols();
  out.h_fwd = h_fwd;
  out.h_bwd = h_bwd;
  out.h.resize(h_fwd.size());
  for (std::size_t t = 0; t < h_fwd.size(); ++t) out.h[t] = concat_cols(h_fwd[t], h_bwd[t]);

  // Recover the per-example last valid forward state with a carry chain.
  const Eigen::Index batch = mask.rows();
  Tensor carry = h_fwd[0];
  for (Eigen::Index t = 1; t < mask.cols(); ++t) {
    bool full = true;
    for (Eigen::Index i = 0; i < batch; ++i) full = full && mask(i, t) > 0.0;
    const auto ti = static_cast<std::size_t>(t);
    if (full) {
      carry = h_fwd[ti];
    } else {
      Matrix v = mask.col(t);
      carry = select_rows(h_fwd[ti], carry, tape.constant(v), tape.constant(Matrix::Ones(batch, 1) - v));
    }
  }
  out.last_fwd = carry;
  out.first_bwd = h_bwd.front();
  return out;
}

}  // namespace rnnpool
