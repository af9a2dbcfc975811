#include <doctest.h>

#include <cmath>

#include "rnnpool/autodiff.hpp"
#include "rnnpool/grad_check.hpp"
#include "rnnpool/rng.hpp"

using namespace rnnpool;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

Parameter make_param(const std::string& name, const Matrix& value) {
  Parameter p(name, value.rows(), value.cols());
  p.value = value;
  return p;
}

}  // namespace

TEST_CASE("elementwise forward values") {
  Tape tape;
  Tensor x = tape.constant(Matrix::Zero(1, 1));
  CHECK(sigmoid(x).scalar() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rnnpool::tanh(x).scalar() == doctest::Approx(0.0).epsilon(1e-15));

  // independent scalar evaluation of sigma(1)
  Tensor one = tape.constant(Matrix::Constant(1, 1, 1.0));
  const double expected = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(sigmoid(one).scalar() == doctest::Approx(expected).epsilon(1e-15));
  CHECK(sigmoid(one).scalar() == doctest::Approx(0.7310585786300049).epsilon(1e-12));
}

TEST_CASE("elementwise shape mismatch is rejected") {
  Tape tape;
  Tensor a = tape.constant(Matrix::Zero(2, 3));
  Tensor b = tape.constant(Matrix::Zero(3, 2));
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(mul(a, b), std::invalid_argument);
}

TEST_CASE("matmul forward values") {
  Tape tape;
  Tensor eye = tape.constant(Matrix::Identity(2, 2));
  Matrix vv(2, 1);
  vv << 3.0, -4.0;
  Tensor v = tape.constant(vv);
  CHECK(matmul(eye, v).value() == vv);

  Matrix am(2, 2), bm(2, 1);
  am << 1, 2, 3, 4;
  bm << 1, 1;
  Tensor prod = matmul(tape.constant(am), tape.constant(bm));
  CHECK(prod.value()(0, 0) == 3.0);
  CHECK(prod.value()(1, 0) == 7.0);

  Tensor bad = tape.constant(Matrix::Zero(3, 1));
  CHECK_THROWS_AS(matmul(eye, bad), std::invalid_argument);
}

TEST_CASE("matmul gradient equals ones * B^T") {
  Rng rng(11);
  Parameter a = make_param("a", random_matrix(3, 4, rng));
  Parameter b = make_param("b", random_matrix(4, 2, rng));

  Tape tape;
  Tensor loss = sum(matmul(tape.leaf(a), tape.leaf(b)));
  tape.backward(loss);
  const Matrix expected = Matrix::Ones(3, 2) * b.value.transpose();
  CHECK((a.grad - expected).cwiseAbs().maxCoeff() < 1e-12);

  // same statement via the finite-difference oracle
  auto build = [&](Tape& t) { return sum(matmul(t.leaf(a), t.leaf(b))); };
  const GradCheckReport report = finite_difference_check(build, {&a, &b});
  CHECK(report.pass);
}

TEST_CASE("softmax values and invariants") {
  Tape tape;
  Matrix z(1, 2);
  z << 0.0, 0.0;
  const Matrix y = softmax_rows(tape.constant(z)).value();
  CHECK(y(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  // e^{ln 2} = 2 by hand: scores [ln2, 0] -> [2/3, 1/3]
  Matrix z2(1, 2);
  z2 << std::log(2.0), 0.0;
  const Matrix y2 = softmax_rows(tape.constant(z2)).value();
  CHECK(y2(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(y2(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix scores = random_matrix(1, 1 + static_cast<Eigen::Index>(rng.below(8)), rng, -5.0, 5.0);
    const double c = rng.uniform(-10.0, 10.0);
    Tape t;
    const Matrix out = softmax_rows(t.constant(scores)).value();
    const Matrix shifted = softmax_rows(t.constant((scores.array() + c).matrix())).value();
    CHECK(std::abs(out.sum() - 1.0) < 1e-12);
    CHECK(out.minCoeff() >= 0.0);
    CHECK((out - shifted).cwiseAbs().maxCoeff() < 1e-12);

    // constant scores -> uniform weights
    const Eigen::Index n = scores.cols();
    const Matrix uniform = softmax_rows(t.constant(Matrix::Constant(1, n, c))).value();
    CHECK((uniform.array() - 1.0 / static_cast<double>(n)).abs().maxCoeff() < 1e-14);
  }

  Matrix empty(1, 0);
  CHECK_THROWS_AS(softmax_rows(tape.constant(empty)), std::invalid_argument);
}

TEST_CASE("reduce max records first-occurrence argmax and routes gradient") {
  Parameter p = make_param("p", Matrix::Constant(1, 1, 3.0));
  {
    Tape tape;
    Tensor m = reduce(Reduce::Max, tape.leaf(p), Axis::All);
    CHECK(m.scalar() == 3.0);
    tape.backward(m);
    CHECK(p.grad(0, 0) == 1.0);
  }

  Matrix row(1, 3);
  row << 1.0, 4.0, 4.0;
  Parameter q = make_param("q", row);
  {
    Tape tape;
    Tensor m = reduce(Reduce::Max, tape.leaf(q), Axis::Cols);
    CHECK(m.scalar() == 4.0);
    CHECK(argmax_record(m)(0, 0) == 1);  // tie broken toward the first occurrence
    tape.backward(m);
    CHECK(q.grad(0, 0) == 0.0);
    CHECK(q.grad(0, 1) == 1.0);
    CHECK(q.grad(0, 2) == 0.0);
  }

  Matrix empty(0, 3);
  Tape tape;
  CHECK_THROWS_AS(reduce(Reduce::Sum, tape.constant(empty), Axis::All), std::invalid_argument);
}

TEST_CASE("reduce mean backward distributes 1/n") {
  Parameter p = make_param("p", Matrix::Zero(1, 4));
  Tape tape;
  Tensor m = reduce(Reduce::Mean, tape.leaf(p), Axis::All);
  tape.backward(m);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(p.grad(0, j) == 0.25);
}

TEST_CASE("backward basics") {
  Rng rng(5);
  Parameter x = make_param("x", random_matrix(5, 1, rng));

  {
    Tape tape;
    Tensor loss = sum(tape.leaf(x));
    tape.backward(loss);
    CHECK((x.grad - Matrix::Ones(5, 1)).cwiseAbs().maxCoeff() == 0.0);
  }

  x.zero_grad();
  {
    Tape tape;
    Tensor lx = tape.leaf(x);
    Tensor loss = sum(lx * lx);
    tape.backward(loss);
    CHECK((x.grad - 2.0 * x.value).cwiseAbs().maxCoeff() < 1e-15);
  }

  // non-scalar loss is rejected
  x.zero_grad();
  Tape tape;
  Tensor lx = tape.leaf(x);
  CHECK_THROWS_AS(tape.backward(lx), std::invalid_argument);
}

TEST_CASE("repeated backward without reset accumulates") {
  Parameter x = make_param("x", Matrix::Constant(2, 1, 1.5));
  Tape tape;
  Tensor loss = sum(tape.leaf(x));
  tape.backward(loss);
  const Matrix once = x.grad;
  tape.backward(loss);
  CHECK((x.grad - 2.0 * once).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar linearity: scaling the loss by 2 doubles every gradient exactly") {
  Rng rng(7);
  Parameter a = make_param("a", random_matrix(3, 3, rng));
  Parameter b = make_param("b", random_matrix(3, 3, rng));

  auto grads_for = [&](double c) {
    a.zero_grad();
    b.zero_grad();
    Tape tape;
    Tensor loss = sum(rnnpool::tanh(matmul(tape.leaf(a), tape.leaf(b))));
    tape.backward(scale(loss, c));
    return std::pair<Matrix, Matrix>(a.grad, b.grad);
  };

  const auto [ga1, gb1] = grads_for(1.0);
  const auto [ga2, gb2] = grads_for(2.0);
  CHECK((ga2 - 2.0 * ga1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((gb2 - 2.0 * gb1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random composite graph matches central finite differences") {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Parameter a = make_param("a", random_matrix(2, 3, rng));
    Parameter b = make_param("b", random_matrix(3, 2, rng));
    Parameter c = make_param("c", random_matrix(2, 2, rng));
    auto build = [&](Tape& t) {
      Tensor h = rnnpool::tanh(matmul(t.leaf(a), t.leaf(b)));
      Tensor mixed = sigmoid(h * t.leaf(c)) + h;
      return sum(mixed);
    };
    const GradCheckReport report = finite_difference_check(build, {&a, &b, &c}, 1e-5, 1e-4);
    CHECK(report.pass);
    CHECK(report.worst_rel_err < 1e-4);
  }
}

TEST_CASE("every primitive passes finite differences on random inputs") {
  Rng rng(13);
  for (int trial = 0; trial < 3; ++trial) {
    Parameter a = make_param("a", random_matrix(3, 4, rng));
    Parameter b = make_param("b", random_matrix(3, 4, rng));
    Parameter c = make_param("c", random_matrix(4, 3, rng));
    Parameter col = make_param("col", random_matrix(3, 1, rng));
    Parameter pos = make_param("pos", random_matrix(3, 4, rng, 0.5, 2.0));  // for log/reciprocal

    using Build = std::function<Tensor(Tape&)>;
    const std::vector<std::pair<Build, std::vector<Parameter*>>> cases = {
        {[&](Tape& t) { return sum(t.leaf(a) + t.leaf(b)); }, {&a, &b}},
        {[&](Tape& t) { return sum(t.leaf(a) - t.leaf(b)); }, {&a, &b}},
        {[&](Tape& t) { return sum(t.leaf(a) * t.leaf(b)); }, {&a, &b}},
        {[&](Tape& t) { return sum(sigmoid(t.leaf(a))); }, {&a}},
        {[&](Tape& t) { return sum(rnnpool::tanh(t.leaf(a))); }, {&a}},
        {[&](Tape& t) { return sum(rnnpool::log(t.leaf(pos))); }, {&pos}},
        {[&](Tape& t) { return sum(reciprocal(t.leaf(pos))); }, {&pos}},
        {[&](Tape& t) { return sum(scale(t.leaf(a), -1.7)); }, {&a}},
        {[&](Tape& t) { return sum(matmul(t.leaf(a), t.leaf(c))); }, {&a, &c}},
        {[&](Tape& t) { return sum(matmul_nt(t.leaf(a), t.leaf(b))); }, {&a, &b}},
        {[&](Tape& t) { return sum(add_row_broadcast(t.leaf(c), t.leaf(col))); }, {&c, &col}},
        {[&](Tape& t) { return sum(scale_rows(t.leaf(a), t.leaf(col))); }, {&a, &col}},
        {[&](Tape& t) { return sum(concat_cols(t.leaf(a), t.leaf(b))); }, {&a, &b}},
        {[&](Tape& t) { return sum(concat_rows({t.leaf(a), t.leaf(b)})); }, {&a, &b}},
        {[&](Tape& t) { return sum(slice_cols(t.leaf(a), 1, 2)); }, {&a}},
        {[&](Tape& t) { return sum(stack_cols({t.leaf(col), t.leaf(col)})); }, {&col}},
        {[&](Tape& t) { return sum(softmax_rows(t.leaf(a))); }, {&a}},
        {[&](Tape& t) { return sum(rnnpool::tanh(log_softmax_rows(t.leaf(a)))); }, {&a}},
        {[&](Tape& t) { return sum(pick_cols(t.leaf(a), {0, 2, 1})); }, {&a}},
        {[&](Tape& t) { return sum(reduce(Reduce::Mean, t.leaf(a), Axis::Cols)); }, {&a}},
        {[&](Tape& t) { return sum(reduce(Reduce::L2Norm, t.leaf(a), Axis::Cols)); }, {&a}},
        {[&](Tape& t) { return reduce(Reduce::L2Norm, t.leaf(a), Axis::All); }, {&a}},
        {[&](Tape& t) {
           return sum(weighted_sum({t.leaf(a), t.leaf(b)}, softmax_rows(stack_cols({t.leaf(col), t.leaf(col) * 0.5}))));
         },
         {&a, &b, &col}},
    };

    for (const auto& [build, params] : cases) {
      const GradCheckReport report = finite_difference_check(build, params, 1e-5, 1e-4);
      CHECK_MESSAGE(report.pass, "worst rel err ", report.worst_rel_err);
    }
  }
}

TEST_CASE("finite differences on a linear function are exact to machine noise") {
  Rng rng(17);
  Parameter a = make_param("a", random_matrix(2, 2, rng));
  auto build = [&](Tape& t) { return sum(scale(t.leaf(a), 3.0)); };
  const GradCheckReport report = finite_difference_check(build, {&a});
  CHECK(report.pass);
  CHECK(report.worst_rel_err < 1e-9);
}

TEST_CASE("finite differences flag a max near-tie as non-differentiable") {
  Matrix near_tie(1, 2);
  near_tie << 1.0, 1.0 + 1e-7;  // gap below the 1e-5 step: central difference straddles the kink
  Parameter p = make_param("p", near_tie);
  auto build = [&](Tape& t) { return reduce(Reduce::Max, t.leaf(p), Axis::All); };
  const GradCheckReport report = finite_difference_check(build, {&p}, 1e-5, 1e-4);
  CHECK_FALSE(report.pass);
}

TEST_CASE("max over a list applies the per-row validity mask") {
  Tape tape;
  Matrix h0(2, 2), h1(2, 2);
  h0 << 1.0, 5.0, 2.0, 2.0;
  h1 << 3.0, 4.0, 9.0, 9.0;
  Matrix valid(2, 2);
  valid << 1.0, 1.0,  // row 0 sees both items
      1.0, 0.0;       // row 1 sees only item 0
  Tensor m = max_over({tape.constant(h0), tape.constant(h1)}, valid);
  CHECK(m.value()(0, 0) == 3.0);
  CHECK(m.value()(0, 1) == 5.0);
  CHECK(m.value()(1, 0) == 2.0);
  CHECK(m.value()(1, 1) == 2.0);
  CHECK(argmax_record(m)(0, 0) == 1);
  CHECK(argmax_record(m)(0, 1) == 0);
  CHECK(argmax_record(m)(1, 0) == 0);
}

TEST_CASE("constants never receive gradients") {
  Parameter x = make_param("x", Matrix::Constant(2, 2, 0.3));
  Tape tape;
  Tensor c = tape.constant(Matrix::Constant(2, 2, 2.0));
  Tensor loss = sum(tape.leaf(x) * c);
  CHECK_FALSE(c.requires_grad());
  tape.backward(loss);
  CHECK((x.grad - Matrix::Constant(2, 2, 2.0)).cwiseAbs().maxCoeff() == 0.0);
}
