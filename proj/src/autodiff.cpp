#include "rnnpool/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace rnnpool {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::string dims(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void check_same_tape(Tensor a, Tensor b, const char* op) {
  if (!a.defined() || !b.defined() || a.tape != b.tape)
    fail(std::string(op) + ": tensors must live on the same tape");
}

void check_same_shape(Tensor a, Tensor b, const char* op) {
  check_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(std::string(op) + ": shape mismatch (" + dims(a.value()) + " vs " + dims(b.value()) + ")");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor unary(Op op, Tensor a, Matrix value, double scalar = 0.0) {
  Node n;
  n.op = op;
  n.inputs = {a.id};
  n.value = std::move(value);
  n.scalar = scalar;
  n.requires_grad = a.requires_grad();
  return {a.tape, a.tape->record(std::move(n))};
}

Tensor binary(Op op, Tensor a, Tensor b, Matrix value) {
  Node n;
  n.op = op;
  n.inputs = {a.id, b.id};
  n.value = std::move(value);
  n.requires_grad = a.requires_grad() || b.requires_grad();
  return {a.tape, a.tape->record(std::move(n))};
}

}  // namespace

const Matrix& Tensor::value() const { return tape->value_of(id); }
const Matrix& Tensor::grad() const { return tape->grad_of(id); }
bool Tensor::requires_grad() const { return tape->node_requires_grad(id); }
Eigen::Index Tensor::rows() const { return value().rows(); }
Eigen::Index Tensor::cols() const { return value().cols(); }

double Tensor::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) fail("Tensor::scalar: tensor is " + dims(v) + ", not 1x1");
  return v(0, 0);
}

int Tape::record(Node&& node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::leaf(Parameter& p) {
  Node n;
  n.op = Op::Leaf;
  n.param = &p;
  n.requires_grad = true;
  return {this, record(std::move(n))};
}

Tensor Tape::constant(Matrix value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  n.requires_grad = false;
  return {this, record(std::move(n))};
}

Tensor Tape::embed_rows(Parameter& table, const std::vector<int>& ids) {
  Node n;
  n.op = Op::EmbedRows;
  n.param = &table;
  n.requires_grad = true;
  n.value.resize(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows())
      fail("embed_rows: token id " + std::to_string(ids[i]) + " out of range for table with " +
           std::to_string(table.rows()) + " rows");
    n.value.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
  }
  n.indices.assign(ids.begin(), ids.end());
  return {this, record(std::move(n))};
}

const Matrix& Tape::value_of(int id) const {
  const Node& n = nodes_.at(id);
  if (n.op == Op::Leaf) return n.param->value;
  return n.value;
}

const Matrix& Tape::grad_of(int id) {
  Node& n = nodes_.at(id);
  const Matrix& v = value_of(id);
  if (n.grad.rows() != v.rows() || n.grad.cols() != v.cols()) n.grad = Matrix::Zero(v.rows(), v.cols());
  return n.grad;
}

const IndexMatrix& Tape::argmax_of(int id) const { return nodes_.at(id).arg; }

void Tape::reset() {
  nodes_.clear();
  backward_run_ = false;
}

// --- elementwise -----------------------------------------------------------

Tensor add(Tensor a, Tensor b) {
  check_same_shape(a, b, "add");
  return binary(Op::Add, a, b, a.value() + b.value());
}

Tensor sub(Tensor a, Tensor b) {
  check_same_shape(a, b, "sub");
  return binary(Op::Sub, a, b, a.value() - b.value());
}

Tensor mul(Tensor a, Tensor b) {
  check_same_shape(a, b, "mul");
  return binary(Op::Mul, a, b, a.value().cwiseProduct(b.value()));
}

Tensor sigmoid(Tensor a) {
  return unary(Op::Sigmoid, a, a.value().unaryExpr([](double x) { return stable_sigmoid(x); }));
}

Tensor tanh(Tensor a) {
  return unary(Op::Tanh, a, a.value().unaryExpr([](double x) { return std::tanh(x); }));
}

Tensor log(Tensor a) {
  return unary(Op::Log, a, a.value().unaryExpr([](double x) { return std::log(x); }));
}

Tensor reciprocal(Tensor a) { return unary(Op::Reciprocal, a, a.value().cwiseInverse()); }

Tensor clamp_min(Tensor a, double floor) {
  return unary(Op::ClampMin, a, a.value().cwiseMax(floor), floor);
}

Tensor scale(Tensor a, double c) { return unary(Op::Scale, a, a.value() * c, c); }

// --- linear algebra ---------------------------------------------------------

Tensor matmul(Tensor a, Tensor b) {
  check_same_tape(a, b, "matmul");
  if (a.cols() != b.rows())
    fail("matmul: inner dimensions disagree (" + dims(a.value()) + " * " + dims(b.value()) + ")");
  return binary(Op::MatMul, a, b, a.value() * b.value());
}

Tensor matmul_nt(Tensor a, Tensor b) {
  check_same_tape(a, b, "matmul_nt");
  if (a.cols() != b.cols())
    fail("matmul_nt: inner dimensions disagree (" + dims(a.value()) + " * " + dims(b.value()) + "^T)");
  return binary(Op::MatMulNT, a, b, a.value() * b.value().transpose());
}

Tensor add_row_broadcast(Tensor a, Tensor row) {
  check_same_tape(a, row, "add_row_broadcast");
  const Matrix& v = row.value();
  if (std::min(v.rows(), v.cols()) != 1 || v.size() != a.cols())
    fail("add_row_broadcast: expected length-" + std::to_string(a.cols()) + " vector, got " + dims(v));
  Matrix out = a.value();
  out.rowwise() += v.reshaped().transpose();
  return binary(Op::AddRowVec, a, row, std::move(out));
}

Tensor scale_rows(Tensor a, Tensor col) {
  check_same_tape(a, col, "scale_rows");
  const Matrix& v = col.value();
  if (v.cols() != 1 || v.rows() != a.rows())
    fail("scale_rows: expected " + std::to_string(a.rows()) + "x1 column, got " + dims(v));
  return binary(Op::ScaleRows, a, col, v.col(0).asDiagonal() * a.value());
}

Tensor concat_cols(Tensor a, Tensor b) {
  check_same_tape(a, b, "concat_cols");
  if (a.rows() != b.rows()) fail("concat_cols: row counts differ (" + dims(a.value()) + " vs " + dims(b.value()) + ")");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  return binary(Op::ConcatCols, a, b, std::move(out));
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail("concat_rows: empty list");
  Eigen::Index rows = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != parts[0].cols()) fail("concat_rows: column counts differ");
    rows += p.rows();
  }
  Node n;
  n.op = Op::ConcatRows;
  n.value.resize(rows, parts[0].cols());
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    n.inputs.push_back(p.id);
    n.requires_grad = n.requires_grad || p.requires_grad();
    n.value.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return {parts[0].tape, parts[0].tape->record(std::move(n))};
}

Tensor slice_cols(Tensor a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 1 || begin + count > a.cols())
    fail("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
         ") out of bounds for " + dims(a.value()));
  Node n;
  n.op = Op::SliceCols;
  n.inputs = {a.id};
  n.indices = {static_cast<int>(begin), static_cast<int>(count)};
  n.value = a.value().middleCols(begin, count);
  n.requires_grad = a.requires_grad();
  return {a.tape, a.tape->record(std::move(n))};
}

Tensor stack_cols(const std::vector<Tensor>& cols) {
  if (cols.empty()) fail("stack_cols: empty list");
  Node n;
  n.op = Op::StackCols;
  n.value.resize(cols[0].rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].cols() != 1 || cols[j].rows() != cols[0].rows()) fail("stack_cols: items must be equal-length columns");
    n.inputs.push_back(cols[j].id);
    n.requires_grad = n.requires_grad || cols[j].requires_grad();
    n.value.col(static_cast<Eigen::Index>(j)) = cols[j].value();
  }
  return {cols[0].tape, cols[0].tape->record(std::move(n))};
}

Tensor max_over(const std::vector<Tensor>& items, const Matrix& valid) {
  if (items.empty()) fail("max_over: empty list");
  const Eigen::Index rows = items[0].rows(), cols = items[0].cols();
  const auto count = static_cast<Eigen::Index>(items.size());
  if (valid.rows() != rows || valid.cols() != count)
    fail("max_over: validity mask must be (rows x items), got " + dims(valid));
  Node n;
  n.op = Op::MaxOverList;
  n.value.resize(rows, cols);
  n.arg = IndexMatrix::Constant(rows, cols, -1);
  for (const Tensor& t : items) {
    if (t.rows() != rows || t.cols() != cols) fail("max_over: items must share one shape");
    n.inputs.push_back(t.id);
    n.requires_grad = n.requires_grad || t.requires_grad();
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double best = 0.0;
      Eigen::Index best_t = -1;
      for (Eigen::Index t = 0; t < count; ++t) {
        if (valid(i, t) <= 0.0) continue;
        const double x = items[static_cast<std::size_t>(t)].value()(i, j);
        if (best_t < 0 || x > best) {
          best = x;
          best_t = t;
        }
      }
      if (best_t < 0) fail("max_over: row " + std::to_string(i) + " has no valid items");
      n.value(i, j) = best;
      n.arg(i, j) = best_t;
    }
  }
  return {items[0].tape, items[0].tape->record(std::move(n))};
}

Tensor weighted_sum(const std::vector<Tensor>& items, Tensor weights) {
  if (items.empty()) fail("weighted_sum: empty list");
  const Eigen::Index rows = items[0].rows();
  if (weights.rows() != rows || weights.cols() != static_cast<Eigen::Index>(items.size()))
    fail("weighted_sum: weights must be (rows x items), got " + dims(weights.value()));
  Node n;
  n.op = Op::WeightedSum;
  n.requires_grad = weights.requires_grad();
  n.value = Matrix::Zero(rows, items[0].cols());
  const Matrix& w = weights.value();
  for (std::size_t t = 0; t < items.size(); ++t) {
    if (items[t].rows() != rows || items[t].cols() != items[0].cols())
      fail("weighted_sum: items must share one shape");
    n.inputs.push_back(items[t].id);
    n.requires_grad = n.requires_grad || items[t].requires_grad();
    n.value += w.col(static_cast<Eigen::Index>(t)).asDiagonal() * items[t].value();
  }
  n.inputs.push_back(weights.id);
  return {weights.tape, weights.tape->record(std::move(n))};
}

// --- softmax family ----------------------------------------------------------

Tensor softmax_rows(Tensor a) {
  if (a.cols() < 1 || a.rows() < 1) fail("softmax_rows: empty input");
  Matrix out = a.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return unary(Op::SoftmaxRows, a, std::move(out));
}

Tensor log_softmax_rows(Tensor a) {
  if (a.cols() < 1 || a.rows() < 1) fail("log_softmax_rows: empty input");
  Matrix out = a.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    const double lse = std::log((out.row(i).array() - m).exp().sum());
    out.row(i) = out.row(i).array() - m - lse;
  }
  return unary(Op::LogSoftmaxRows, a, std::move(out));
}

Tensor pick_cols(Tensor a, const std::vector<int>& cols) {
  if (static_cast<Eigen::Index>(cols.size()) != a.rows())
    fail("pick_cols: need one column index per row");
  Node n;
  n.op = Op::PickCols;
  n.inputs = {a.id};
  n.indices = cols;
  n.requires_grad = a.requires_grad();
  n.value.resize(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (cols[static_cast<std::size_t>(i)] < 0 || cols[static_cast<std::size_t>(i)] >= a.cols())
      fail("pick_cols: index " + std::to_string(cols[static_cast<std::size_t>(i)]) + " out of range");
    n.value(i, 0) = a.value()(i, cols[static_cast<std::size_t>(i)]);
  }
  return {a.tape, a.tape->record(std::move(n))};
}

// --- reductions ---------------------------------------------------------------

Tensor reduce(Reduce kind, Tensor a, Axis axis) {
  const Matrix& v = a.value();
  if (v.rows() == 0 || v.cols() == 0) fail("reduce: reduction over a size-0 axis");
  Node n;
  n.op = Op::ReduceOp;
  n.inputs = {a.id};
  n.reduce = kind;
  n.axis = axis;
  n.requires_grad = a.requires_grad();

  auto group_count = [&](Axis ax) -> double {
    if (ax == Axis::All) return static_cast<double>(v.size());
    return static_cast<double>(ax == Axis::Rows ? v.rows() : v.cols());
  };

  switch (kind) {
    case Reduce::Sum:
    case Reduce::Mean: {
      const double div = kind == Reduce::Mean ? group_count(axis) : 1.0;
      if (axis == Axis::All)
        n.value = Matrix::Constant(1, 1, v.sum() / div);
      else if (axis == Axis::Rows)
        n.value = v.colwise().sum() / div;
      else
        n.value = v.rowwise().sum() / div;
      break;
    }
    case Reduce::L2Norm: {
      if (axis == Axis::All)
        n.value = Matrix::Constant(1, 1, v.norm());
      else if (axis == Axis::Rows)
        n.value = v.colwise().norm();
      else
        n.value = v.rowwise().norm();
      break;
    }
    case Reduce::Max: {
      // first occurrence wins on ties, scanning the reduced axis in order
      if (axis == Axis::All) {
        n.value.resize(1, 1);
        n.arg = IndexMatrix::Zero(1, 2);
        double best = v(0, 0);
        Eigen::Index bi = 0, bj = 0;
        for (Eigen::Index i = 0; i < v.rows(); ++i)
          for (Eigen::Index j = 0; j < v.cols(); ++j)
            if (v(i, j) > best) {
              best = v(i, j);
              bi = i;
              bj = j;
            }
        n.value(0, 0) = best;
        n.arg(0, 0) = bi;
        n.arg(0, 1) = bj;
      } else if (axis == Axis::Rows) {
        n.value.resize(1, v.cols());
        n.arg = IndexMatrix::Zero(1, v.cols());
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
          double best = v(0, j);
          Eigen::Index bi = 0;
          for (Eigen::Index i = 1; i < v.rows(); ++i)
            if (v(i, j) > best) {
              best = v(i, j);
              bi = i;
            }
          n.value(0, j) = best;
          n.arg(0, j) = bi;
        }
      } else {
        n.value.resize(v.rows(), 1);
        n.arg = IndexMatrix::Zero(v.rows(), 1);
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          double best = v(i, 0);
          Eigen::Index bj = 0;
          for (Eigen::Index j = 1; j < v.cols(); ++j)
            if (v(i, j) > best) {
              best = v(i, j);
              bj = j;
            }
          n.value(i, 0) = best;
          n.arg(i, 0) = bj;
        }
      }
      break;
    }
  }
  return {a.tape, a.tape->record(std::move(n))};
}

Tensor sum(Tensor a) { return reduce(Reduce::Sum, a, Axis::All); }

const IndexMatrix& argmax_record(Tensor t) { return t.tape->argmax_of(t.id); }

// --- backward -----------------------------------------------------------------

namespace {

// Accumulates g into the grad buffer of node `id` if it participates in
// differentiation.
void accum(std::vector<Node>& nodes, int id, const Matrix& g) {
  Node& n = nodes[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  const Matrix& v = n.op == Op::Leaf ? n.param->value : n.value;
  if (n.grad.rows() != v.rows() || n.grad.cols() != v.cols()) n.grad = Matrix::Zero(v.rows(), v.cols());
  n.grad += g;
}

}  // namespace

void Tape::backward(Tensor loss) {
  if (loss.tape != this) fail("backward: loss lives on another tape");
  const Matrix& lv = value_of(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1)
    fail("backward: loss must be scalar (1x1), got " + dims(lv));

  accum(nodes_, loss.id, Matrix::Constant(1, 1, 1.0));

  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::Leaf:
        n.param->grad += g;
        break;
      case Op::Constant:
        break;
      case Op::EmbedRows:
        for (std::size_t r = 0; r < n.indices.size(); ++r)
          n.param->grad.row(n.indices[r]) += g.row(static_cast<Eigen::Index>(r));
        break;
      case Op::Add:
        accum(nodes_, n.inputs[0], g);
        accum(nodes_, n.inputs[1], g);
        break;
      case Op::Sub:
        accum(nodes_, n.inputs[0], g);
        accum(nodes_, n.inputs[1], -g);
        break;
      case Op::Mul:
        accum(nodes_, n.inputs[0], g.cwiseProduct(value_of(n.inputs[1])));
        accum(nodes_, n.inputs[1], g.cwiseProduct(value_of(n.inputs[0])));
        break;
      case Op::Sigmoid:
        accum(nodes_, n.inputs[0], g.cwiseProduct(n.value.cwiseProduct(Matrix::Ones(n.value.rows(), n.value.cols()) - n.value)));
        break;
      case Op::Tanh:
        accum(nodes_, n.inputs[0], g.cwiseProduct(Matrix::Ones(n.value.rows(), n.value.cols()) - n.value.cwiseProduct(n.value)));
        break;
      case Op::Log:
        accum(nodes_, n.inputs[0], g.cwiseQuotient(value_of(n.inputs[0])));
        break;
      case Op::Reciprocal:
        accum(nodes_, n.inputs[0], -g.cwiseProduct(n.value.cwiseProduct(n.value)));
        break;
      case Op::ClampMin: {
        const Matrix& x = value_of(n.inputs[0]);
        accum(nodes_, n.inputs[0], (x.array() >= n.scalar).cast<double>().matrix().cwiseProduct(g));
        break;
      }
      case Op::Scale:
        accum(nodes_, n.inputs[0], g * n.scalar);
        break;
      case Op::MatMul:
        accum(nodes_, n.inputs[0], g * value_of(n.inputs[1]).transpose());
        accum(nodes_, n.inputs[1], value_of(n.inputs[0]).transpose() * g);
        break;
      case Op::MatMulNT:
        accum(nodes_, n.inputs[0], g * value_of(n.inputs[1]));
        accum(nodes_, n.inputs[1], g.transpose() * value_of(n.inputs[0]));
        break;
      case Op::AddRowVec: {
        accum(nodes_, n.inputs[0], g);
        const Matrix& v = value_of(n.inputs[1]);
        Matrix gv = g.colwise().sum();
        if (v.cols() == 1) gv.transposeInPlace();
        accum(nodes_, n.inputs[1], gv);
        break;
      }
      case Op::ScaleRows: {
        const Matrix& a = value_of(n.inputs[0]);
        const Matrix& c = value_of(n.inputs[1]);
        accum(nodes_, n.inputs[0], c.col(0).asDiagonal() * g);
        accum(nodes_, n.inputs[1], g.cwiseProduct(a).rowwise().sum());
        break;
      }
      case Op::ConcatCols: {
        const Eigen::Index ac = value_of(n.inputs[0]).cols();
        accum(nodes_, n.inputs[0], g.leftCols(ac));
        accum(nodes_, n.inputs[1], g.rightCols(g.cols() - ac));
        break;
      }
      case Op::ConcatRows: {
        Eigen::Index at = 0;
        for (int in : n.inputs) {
          const Eigen::Index r = value_of(in).rows();
          accum(nodes_, in, g.middleRows(at, r));
          at += r;
        }
        break;
      }
      case Op::SliceCols: {
        const Matrix& a = value_of(n.inputs[0]);
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        ga.middleCols(n.indices[0], n.indices[1]) = g;
        accum(nodes_, n.inputs[0], ga);
        break;
      }
      case Op::StackCols:
        for (std::size_t j = 0; j < n.inputs.size(); ++j)
          accum(nodes_, n.inputs[j], g.col(static_cast<Eigen::Index>(j)));
        break;
      case Op::MaxOverList: {
        std::vector<Matrix> gi(n.inputs.size());
        for (std::size_t t = 0; t < n.inputs.size(); ++t) gi[t] = Matrix::Zero(g.rows(), g.cols());
        for (Eigen::Index i = 0; i < g.rows(); ++i)
          for (Eigen::Index j = 0; j < g.cols(); ++j) gi[static_cast<std::size_t>(n.arg(i, j))](i, j) = g(i, j);
        for (std::size_t t = 0; t < n.inputs.size(); ++t) accum(nodes_, n.inputs[t], gi[t]);
        break;
      }
      case Op::WeightedSum: {
        const int wid = n.inputs.back();
        const Matrix& w = value_of(wid);
        const std::size_t count = n.inputs.size() - 1;
        Matrix gw = Matrix::Zero(w.rows(), w.cols());
        for (std::size_t t = 0; t < count; ++t) {
          const Matrix& item = value_of(n.inputs[t]);
          accum(nodes_, n.inputs[t], w.col(static_cast<Eigen::Index>(t)).asDiagonal() * g);
          gw.col(static_cast<Eigen::Index>(t)) = g.cwiseProduct(item).rowwise().sum();
        }
        accum(nodes_, wid, gw);
        break;
      }
      case Op::SoftmaxRows: {
        const Matrix& y = n.value;
        Matrix gin = g.cwiseProduct(y);
        const Matrix dot = gin.rowwise().sum();
        gin -= (dot.col(0).asDiagonal() * y).eval();
        accum(nodes_, n.inputs[0], gin);
        break;
      }
      case Op::LogSoftmaxRows: {
        const Matrix y = n.value.array().exp().matrix();  // softmax recovered from stored log-softmax
        const Matrix rowsum = g.rowwise().sum();
        accum(nodes_, n.inputs[0], g - rowsum.col(0).asDiagonal() * y);
        break;
      }
      case Op::PickCols: {
        const Matrix& a = value_of(n.inputs[0]);
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        for (Eigen::Index r = 0; r < a.rows(); ++r) ga(r, n.indices[static_cast<std::size_t>(r)]) = g(r, 0);
        accum(nodes_, n.inputs[0], ga);
        break;
      }
      case Op::ReduceOp: {
        const Matrix& a = value_of(n.inputs[0]);
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        switch (n.reduce) {
          case Reduce::Sum:
          case Reduce::Mean: {
            double div = 1.0;
            if (n.reduce == Reduce::Mean)
              div = n.axis == Axis::All ? static_cast<double>(a.size())
                                        : static_cast<double>(n.axis == Axis::Rows ? a.rows() : a.cols());
            if (n.axis == Axis::All)
              ga.setConstant(g(0, 0) / div);
            else if (n.axis == Axis::Rows)
              ga = (Matrix::Ones(a.rows(), 1) * g) / div;
            else
              ga = (g * Matrix::Ones(1, a.cols())) / div;
            break;
          }
          case Reduce::Max: {
            if (n.axis == Axis::All)
              ga(n.arg(0, 0), n.arg(0, 1)) = g(0, 0);
            else if (n.axis == Axis::Rows)
              for (Eigen::Index j = 0; j < a.cols(); ++j) ga(n.arg(0, j), j) = g(0, j);
            else
              for (Eigen::Index i = 0; i < a.rows(); ++i) ga(i, n.arg(i, 0)) = g(i, 0);
            break;
          }
          case Reduce::L2Norm: {
            if (n.axis == Axis::All) {
              const double norm = n.value(0, 0);
              if (norm > 0.0) ga = a * (g(0, 0) / norm);
            } else if (n.axis == Axis::Rows) {
              for (Eigen::Index j = 0; j < a.cols(); ++j) {
                const double norm = n.value(0, j);
                if (norm > 0.0) ga.col(j) = a.col(j) * (g(0, j) / norm);
              }
            } else {
              for (Eigen::Index i = 0; i < a.rows(); ++i) {
                const double norm = n.value(i, 0);
                if (norm > 0.0) ga.row(i) = a.row(i) * (g(i, 0) / norm);
              }
            }
            break;
          }
        }
        accum(nodes_, n.inputs[0], ga);
        break;
      }
    }
  }
  backward_run_ = true;
}

}  // namespace rnnpool
