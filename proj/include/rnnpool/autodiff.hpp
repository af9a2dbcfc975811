#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rnnpool {

using Matrix = Eigen::MatrixXd;
using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

// Persistent trainable storage. Parameters live outside any tape; leaf nodes
// bind to them and backward() accumulates into `grad` until zero_grad().
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string name, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(name)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
};

class Tape;

// Handle to a node on a tape. Cheap to copy; values and grads live in the tape.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  bool defined() const { return tape != nullptr && id >= 0; }
  const Matrix& value() const;
  const Matrix& grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const;
  Eigen::Index cols() const;
  double scalar() const;  // value of a 1x1 tensor
};

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  EmbedRows,
  Add,
  Sub,
  Mul,
  Sigmoid,
  Tanh,
  Log,
  Reciprocal,
  ClampMin,
  Scale,
  MatMul,
  MatMulNT,
  AddRowVec,
  ScaleRows,
  ConcatCols,
  ConcatRows,
  SliceCols,
  StackCols,
  MaxOverList,
  WeightedSum,
  SoftmaxRows,
  LogSoftmaxRows,
  PickCols,
  ReduceOp,
};

enum class Reduce : std::uint8_t { Sum, Mean, Max, L2Norm };

// Axis::Rows collapses the row dimension (result 1 x n); Axis::Cols collapses
// columns (result m x 1); Axis::All reduces to a 1 x 1 scalar.
enum class Axis : std::uint8_t { All, Rows, Cols };

struct Node {
  Op op;
  std::vector<int> inputs;
  Matrix value;
  Matrix grad;  // allocated lazily during backward
  bool requires_grad = false;

  // op-specific payload
  Parameter* param = nullptr;       // Leaf, EmbedRows
  std::vector<int> indices;         // EmbedRows ids, PickCols labels, SliceCols {begin,count}
  double scalar = 0.0;              // Scale factor, ClampMin floor
  Reduce reduce = Reduce::Sum;      // ReduceOp
  Axis axis = Axis::All;            // ReduceOp
  IndexMatrix arg;                  // argmax record (ReduceOp/Max, MaxOverList)
};

// Dynamic tape, rebuilt per forward pass. Nodes are recorded in topological
// order by construction; backward() sweeps them once in reverse. Calling
// backward() again without reset() accumulates on top of existing gradients;
// callers are expected to zero_grad() parameters between optimizer steps.
class Tape {
 public:
  Tensor leaf(Parameter& p);
  Tensor constant(Matrix value);
  // Gathers table rows by token id; gradients scatter straight into table.grad.
  Tensor embed_rows(Parameter& table, const std::vector<int>& ids);

  void backward(Tensor loss);
  bool backward_run() const { return backward_run_; }
  void reset();
  std::size_t size() const { return nodes_.size(); }

  const Matrix& value_of(int id) const;
  const Matrix& grad_of(int id);
  const IndexMatrix& argmax_of(int id) const;
  bool node_requires_grad(int id) const { return nodes_.at(id).requires_grad; }

  int record(Node&& node);
  const Node& node(int id) const { return nodes_.at(id); }

 private:
  std::vector<Node> nodes_;
  bool backward_run_ = false;
};

// --- graph building -------------------------------------------------------
// Free functions; the result is recorded on the inputs' tape. Binary
// elementwise ops require identical shapes and throw std::invalid_argument
// otherwise.

Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);  // Hadamard product
Tensor sigmoid(Tensor a);
Tensor tanh(Tensor a);
Tensor log(Tensor a);
Tensor reciprocal(Tensor a);
Tensor clamp_min(Tensor a, double floor);
Tensor scale(Tensor a, double c);

Tensor matmul(Tensor a, Tensor b);     // (m x k) * (k x n)
Tensor matmul_nt(Tensor a, Tensor b);  // (m x k) * (n x k)^T

// Adds a length-n vector to every row of a (m x n).
Tensor add_row_broadcast(Tensor a, Tensor row);
// Scales row i of a (m x n) by col[i] (m x 1).
Tensor scale_rows(Tensor a, Tensor col);

Tensor concat_cols(Tensor a, Tensor b);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(Tensor a, Eigen::Index begin, Eigen::Index count);
// Stacks m x 1 columns into an m x n matrix.
Tensor stack_cols(const std::vector<Tensor>& cols);

// Elementwise max over a list of equally shaped items, restricted to items
// flagged valid per row: valid is (rows x items), entry > 0 marks item t as a
// candidate for that row. Records the winning item index per element (first
// occurrence on ties); backward routes the full gradient to the winner.
Tensor max_over(const std::vector<Tensor>& items, const Matrix& valid);

// sum_t weights(:,t) .* items[t]; weights is (rows x items).
Tensor weighted_sum(const std::vector<Tensor>& items, Tensor weights);

// Row-wise softmax / log-softmax with max-subtraction.
Tensor softmax_rows(Tensor a);
Tensor log_softmax_rows(Tensor a);

// out(i, 0) = a(i, cols[i]).
Tensor pick_cols(Tensor a, const std::vector<int>& cols);

Tensor reduce(Reduce kind, Tensor a, Axis axis = Axis::All);
Tensor sum(Tensor a);

const IndexMatrix& argmax_record(Tensor t);

inline Tensor operator+(Tensor a, Tensor b) { return add(a, b); }
inline Tensor operator-(Tensor a, Tensor b) { return sub(a, b); }
inline Tensor operator*(Tensor a, Tensor b) { return mul(a, b); }
inline Tensor operator*(Tensor a, double c) { return scale(a, c); }
inline Tensor operator*(double c, Tensor a) { return scale(a, c); }

}  // namespace rnnpool
