#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "deepqoe/diff.hpp"
#include "support.hpp"

using namespace deepqoe;
using namespace deepqoe::diff;

namespace {

DenseLayer identity_layer(Activation act) {
  return DenseLayer{Param("W", Tensor(2, 2, {1, 0, 0, 1})), Param("b", Tensor(1, 2)), act};
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

}  // namespace

TEST_CASE("dense_forward applies xW + b and the activation") {
  const Tensor x = Tensor::row({3, -1});
  CHECK(dense_forward(x, identity_layer(Activation::Identity)) == Tensor::row({3, -1}));
  CHECK(dense_forward(x, identity_layer(Activation::ReLU)) == Tensor::row({3, 0}));
  CHECK_ERRC(dense_forward(Tensor::row({1, 2, 3}), identity_layer(Activation::Identity)),
             Errc::ShapeMismatch);
}

TEST_CASE("embedding lookup and its sparse gradient") {
  Rng rng(3);
  EmbeddingTable table = make_embedding("emb", 4, 3, rng);
  CHECK(embedding_forward(2, table) == Tensor::row(table.table.value.row_vector(2)));
  CHECK_ERRC(embedding_forward(4, table), Errc::IndexOutOfRange);

  for (double v : table.table.value.data()) {
    CHECK(v >= -0.05);
    CHECK(v <= 0.05);
  }

  Tape t;
  const std::size_t idx[] = {2};
  Var e = embedding_forward(t, idx, table);
  Var loss = matmul(t, e, t.constant(Tensor::column({1.5, -2.0, 0.25})));
  t.backward(loss);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double expected = r == 2 ? std::array<double, 3>{1.5, -2.0, 0.25}[c] : 0.0;
      CHECK(table.table.grad(r, c) == expected);
    }
  }
}

TEST_CASE("dropout") {
  Rng rng(5);
  const Tensor x = random_tensor(4, 5, rng);
  SUBCASE("rate 0 is the identity in both modes") {
    CHECK(dropout_forward(x, DropoutLayer(0.0), rng, true) == x);
    CHECK(dropout_forward(x, DropoutLayer(0.0), rng, false) == x);
  }
  SUBCASE("inference passes through exactly") {
    CHECK(dropout_forward(x, DropoutLayer(0.9), rng, false) == x);
  }
  SUBCASE("rate 0.5 keeps about half and scales survivors by 2") {
    const Tensor ones(100, 100, 1.0);
    const Tensor y = dropout_forward(ones, DropoutLayer(0.5), rng, true);
    std::size_t kept = 0;
    for (double v : y.data()) {
      CHECK((v == 0.0 || v == 2.0));
      kept += v != 0.0 ? 1 : 0;
    }
    // binomial(10000, 0.5) has sd 50; 0.03 * 10000 = 300 is six sd.
    const double frac = static_cast<double>(kept) / 10000.0;
    CHECK(frac > 0.47);
    CHECK(frac < 0.53);
  }
  SUBCASE("rates outside [0, 1) are rejected") {
    CHECK_ERRC(DropoutLayer(1.0), Errc::InvalidConfig);
    CHECK_ERRC(DropoutLayer(-0.1), Errc::InvalidConfig);
  }
}

TEST_CASE("softmax") {
  const Tensor half = softmax(Tensor::row({0, 0}));
  CHECK(half[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half[1] == doctest::Approx(0.5).epsilon(1e-15));

  const Tensor big = softmax(Tensor::row({1000, 0}));
  CHECK(big.all_finite());
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor z = random_tensor(3, 6, rng, 20.0);
    Tensor shifted = z;
    for (std::size_t j = 0; j < 6; ++j) shifted(1, j) += 123.25;
    const Tensor p = softmax(z), q = softmax(shifted);
    for (std::size_t i = 0; i < 3; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < 6; ++j) {
        row += p(i, j);
        CHECK(p(i, j) > 0.0);
        CHECK(p(i, j) < 1.0);
        CHECK(std::abs(p(i, j) - q(i, j)) < 1e-12);
      }
      CHECK(std::abs(row - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("cross entropy") {
  const std::size_t zero[] = {0};
  CHECK(std::abs(cross_entropy(Tensor::row({0.5, 0.5}), zero) - std::log(2.0)) < 1e-12);
  CHECK(cross_entropy(Tensor::row({1.0, 0.0}), zero) < 1e-11);
  // the clamp keeps a zero probability finite
  const std::size_t one[] = {1};
  CHECK(std::abs(cross_entropy(Tensor::row({1.0, 0.0}), one) - (-std::log(1e-12))) < 1e-9);

  const std::size_t two[] = {0, 1};
  const Tensor probs(2, 2, {0.8, 0.2, 0.4, 0.6});
  CHECK(std::abs(cross_entropy(probs, two) - 0.5 * (-std::log(0.8) - std::log(0.6))) < 1e-15);
  CHECK_ERRC(cross_entropy(probs, zero), Errc::ShapeMismatch);
}

TEST_CASE("mse") {
  CHECK(mse(Tensor::column({1, 3}), Tensor::column({1, 3})) == 0.0);
  CHECK(mse(Tensor::column({2, 2}), Tensor::column({1, 3})) == 1.0);
  CHECK(mse(Tensor::column({1, 3, 5}), Tensor::column({1, 2, 3})) == doctest::Approx(5.0 / 3.0));
  // residuals scaled by 3 -> loss scaled by 9
  CHECK(mse(Tensor::column({4, 0}), Tensor::column({1, 3})) == doctest::Approx(9.0));
  CHECK_ERRC(mse(Tensor::column({1}), Tensor::column({1, 2})), Errc::ShapeMismatch);
}

TEST_CASE("backward through a single identity dense layer matches the hand derivative") {
  // loss = (x W + b - y)^2 for one sample; dL/dW = 2 (yhat - y) x^T.
  Param w("W", Tensor(3, 1, {0.5, -1.0, 2.0}));
  Param b("b", Tensor(1, 1, {0.25}));
  DenseLayer layer{w, b, Activation::Identity};
  const Tensor x = Tensor::row({1.0, 2.0, -0.5});
  const double y = 0.75;
  const double yhat = 0.5 * 1.0 - 1.0 * 2.0 + 2.0 * -0.5 + 0.25;

  Tape t;
  Var loss = mse(t, dense_forward(t, t.constant(x), layer), t.constant(Tensor(1, 1, y)));
  t.backward(loss);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(layer.weight.grad[i] == doctest::Approx(2.0 * (yhat - y) * x[i]).epsilon(1e-14));
  }
  CHECK(layer.bias.grad[0] == doctest::Approx(2.0 * (yhat - y)).epsilon(1e-14));
}

TEST_CASE("gradient accumulation") {
  Param used("used", Tensor::row({1.0, 2.0}));
  Param unused("unused", Tensor::row({3.0, 4.0}));

  SUBCASE("a parameter the loss does not reach gets exactly zero") {
    Tape t;
    t.param(unused);
    t.backward(sum(t, t.param(used)));
    CHECK(unused.grad == Tensor(1, 2));
    CHECK(used.grad == Tensor::row({1.0, 1.0}));
  }
  SUBCASE("two uses of one parameter sum their gradients") {
    Tape t;
    Var a = scale(t, t.param(used), 3.0);
    Var b = scale(t, t.param(used), -0.5);
    t.backward(sum(t, add(t, a, b)));
    CHECK(used.grad == Tensor::row({2.5, 2.5}));
  }
  SUBCASE("backward on a foreign or empty tape") {
    Tape empty;
    Tape other;
    Var v = sum(other, other.constant(Tensor::row({1, 2})));
    CHECK_ERRC(empty.backward(v), Errc::GraphNotRecorded);
    Tape third;
    third.constant(Tensor(1, 1));
    CHECK_ERRC(third.backward(v), Errc::GraphNotRecorded);
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape t;
    CHECK_ERRC(t.backward(t.param(used)), Errc::ShapeMismatch);
  }
}

TEST_CASE("non-finite values are a hard error at the producing op") {
  Tape t;
  Var a = t.constant(Tensor::row({1e300, 1e300}));
  CHECK_ERRC(scale(t, a, 1e300), Errc::NonFinite);
}

TEST_CASE("relu keeps positives and zeroes the rest") {
  Rng rng(21);
  Tape t;
  const Tensor x = random_tensor(5, 7, rng);
  const Tensor& y = t.value(relu(t, t.constant(x)));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(y[i] >= 0.0);
    if (x[i] > 0) CHECK(y[i] == x[i]);
  }
}

TEST_CASE("optimizers") {
  SUBCASE("SGD without momentum moves by lr * g") {
    Param p("p", Tensor::row({1.0, -2.0}));
    p.grad = Tensor::row({1.0, 0.0});
    Optimizer sgd(SgdConfig{0.1, 0.0});
    Param* ps[] = {&p};
    sgd.step(ps);
    CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(p.value[1] == -2.0);  // zero grad leaves it alone
    CHECK(p.grad == Tensor(1, 2));
  }
  SUBCASE("SGD momentum accumulates velocity") {
    Param p("p", Tensor::row({0.0}));
    Optimizer sgd(SgdConfig{0.1, 0.5});
    Param* ps[] = {&p};
    p.grad[0] = 1.0;
    sgd.step(ps);  // v = -0.1
    p.grad[0] = 1.0;
    sgd.step(ps);  // v = -0.05 - 0.1
    CHECK(p.value[0] == doctest::Approx(-0.25).epsilon(1e-14));
  }
  SUBCASE("Adam's bias-corrected first step has magnitude lr") {
    // t=1: m = (1-b1) g, v = (1-b2) g^2, mhat = g, vhat = g^2,
    // step = lr * g / (|g| + eps) = lr / (1 + 1e-8) for g = 1.
    Param p("p", Tensor::row({0.0}));
    p.grad[0] = 1.0;
    Optimizer adam(AdamConfig{});
    Param* ps[] = {&p};
    adam.step(ps);
    CHECK(std::abs(p.value[0] - (-1e-3 / (1.0 + 1e-8))) < 1e-18);
  }
  SUBCASE("one small step on a convex quadratic decreases the loss") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      Param p("p", random_tensor(1, 4, rng, 3.0));
      const Tensor target = random_tensor(1, 4, rng, 3.0);
      auto loss_of = [&]() { return mse(p.value, target); };
      const double before = loss_of();
      Tape t;
      t.backward(mse(t, t.param(p), t.constant(target)));
      Optimizer sgd(SgdConfig{1e-3, 0.0});
      Param* ps[] = {&p};
      sgd.step(ps);
      CHECK(loss_of() < before);
    }
  }
  SUBCASE("invalid hyperparameters") {
    CHECK_ERRC(Optimizer(SgdConfig{0.0, 0.0}), Errc::InvalidConfig);
    CHECK_ERRC(Optimizer(SgdConfig{0.1, 1.0}), Errc::InvalidConfig);
    CHECK_ERRC(Optimizer(AdamConfig{1e-3, 1.0, 0.999, 1e-8}), Errc::InvalidConfig);
  }
}

TEST_CASE("grad_check") {
  Rng rng(8);
  SUBCASE("linear model with squared loss agrees to machine precision") {
    DenseLayer layer = make_dense("lin", 4, 1, Activation::Identity, rng);
    const Tensor x = random_tensor(6, 4, rng);
    const Tensor y = random_tensor(6, 1, rng);
    Param* ps[] = {&layer.weight, &layer.bias};
    auto r = grad_check([&](Tape& t) { return mse(t, dense_forward(t, t.constant(x), layer), t.constant(y)); },
                        ps);
    CHECK(r.coords_checked == 5);
    CHECK(r.max_rel_error < 1e-9);
  }
  SUBCASE("every op passes at eps 1e-5") {
    DenseLayer l1 = make_dense("l1", 3, 6, Activation::ReLU, rng);
    DenseLayer l2 = make_dense("l2", 8, 4, Activation::Identity, rng);
    EmbeddingTable emb = make_embedding("emb", 5, 2, rng);
    for (auto& v : emb.table.value.data()) v *= 20.0;
    const Tensor x = random_tensor(7, 3, rng);
    const std::size_t idx[] = {0, 3, 3, 1, 4, 2, 0};
    const std::size_t labels[] = {0, 1, 2, 3, 1, 0, 2};
    Param* ps[] = {&l1.weight, &l1.bias, &l2.weight, &l2.bias, &emb.table};
    auto r = grad_check(
        [&](Tape& t) {
          Var h = dense_forward(t, t.constant(x), l1);
          Var e = embedding_forward(t, idx, emb);
          const Var parts[] = {h, e};
          Var z = dense_forward(t, concat_cols(t, parts), l2);
          return cross_entropy(t, softmax(t, z), labels);
        },
        ps);
    CHECK(r.max_rel_error < 1e-4);
  }
  SUBCASE("stochastic dropout inside the check is a precondition violation") {
    DenseLayer layer = make_dense("lin", 2, 2, Activation::Identity, rng);
    Param* ps[] = {&layer.weight};
    Rng drop(1);
    CHECK_ERRC(grad_check(
                   [&](Tape& t) {
                     Var h = dropout(t, dense_forward(t, t.constant(Tensor::row({1, 2})), layer), 0.5,
                                     drop, true);
                     return sum(t, h);
                   },
                   ps),
               Errc::PreconditionViolation);
  }
}

TEST_CASE("rng streams are reproducible and split independently of consumption") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  const auto s1 = c.split(3).next_u64();
  c.next_u64();
  CHECK(c.split(3).next_u64() == s1);
  CHECK(Rng(42).split(4).next_u64() != s1);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) < 7);
  }
}
