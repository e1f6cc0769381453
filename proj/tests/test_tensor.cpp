#include <doctest.h>

#include <cmath>
#include <functional>

#include "gatenet/error.hpp"
#include "gatenet/ops.hpp"
#include "gatenet/tensor.hpp"

using namespace gatenet;
using ops::Activation;

namespace {

// Central difference of a scalar function of one tensor, coordinate by coordinate.
Tensor numeric_grad(const std::function<double(const Tensor&)>& f, Tensor x, double h = 1e-5) {
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double rel(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

void check_close(const Tensor& analytic, const Tensor& numeric, double tol) {
  REQUIRE(analytic.shape() == numeric.shape());
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    CHECK(rel(analytic[i], numeric[i]) < tol);
  }
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("tensor construction checks sizes") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  const Tensor m = Tensor::mat(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6);
  CHECK(Tensor::vec({1, 2}).rows() == 1);
}

TEST_CASE("require_finite names the tensor") {
  Tensor t = Tensor::vec({1.0, NAN});
  CHECK_FALSE(t.all_finite());
  try {
    require_finite(t, "mlp.l1.W");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("mlp.l1.W") != std::string::npos);
  }
}

TEST_CASE("dense_affine examples") {
  const Tensor id = Tensor::mat(2, 2, {1, 0, 0, 1});
  CHECK(ops::dense_affine(Tensor::vec({1, 2}), id, Tensor::vec({0, 0})) == Tensor::vec({1, 2}));
  const Tensor y = ops::dense_affine(Tensor::vec({1, -1}), Tensor::mat(1, 2, {0.5, 0.5}), Tensor::vec({0.1}));
  CHECK(y[0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("dense_affine rejects mismatched shapes") {
  try {
    ops::dense_affine(Tensor::vec({1, 2, 3}), Tensor::mat(1, 2, {1, 1}), Tensor::vec({0}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[3]") != std::string::npos);
    CHECK(msg.find("[1x2]") != std::string::npos);
  }
}

TEST_CASE("gradient of out.out w.r.t. W matches finite differences") {
  const Tensor x = Tensor::vec({1, 2});
  const Tensor W = Tensor::mat(1, 2, {1, 1});
  const Tensor b = Tensor::vec({0});
  auto loss = [&](const Tensor& w) {
    const Tensor y = ops::dense_affine(x, w, b);
    return dot(y, y);
  };
  const Tensor y = ops::dense_affine(x, W, b);
  Tensor dy(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dy[i] = 2 * y[i];
  Tensor dW(W.shape());
  Tensor db(b.shape());
  ops::dense_affine_backward(dy, x, W, dW, db);
  check_close(dW, numeric_grad(loss, W), 1e-6);
  CHECK(dW == Tensor::mat(1, 2, {6, 12}));
}

TEST_CASE("dense_affine backward on random batches") {
  Rng rng(3);
  const Tensor x = random_tensor({5, 4}, rng);
  const Tensor W = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({3}, rng);
  const Tensor c = random_tensor({5, 3}, rng);
  Tensor dW(W.shape());
  Tensor db(b.shape());
  const Tensor dx = ops::dense_affine_backward(c, x, W, dW, db);
  check_close(dW, numeric_grad([&](const Tensor& w) { return dot(ops::dense_affine(x, w, b), c); }, W), 1e-4);
  check_close(db, numeric_grad([&](const Tensor& v) { return dot(ops::dense_affine(x, W, v), c); }, b), 1e-4);
  check_close(dx, numeric_grad([&](const Tensor& v) { return dot(ops::dense_affine(v, W, b), c); }, x), 1e-4);
}

TEST_CASE("activation examples") {
  CHECK(ops::activate(0.0, Activation::kSigmoid) == 0.5);
  CHECK(ops::activate(0.0, Activation::kTanh) == 0.0);
  CHECK(ops::activation(Tensor::vec({-1, 2}), Activation::kRelu) == Tensor::vec({0, 2}));
  CHECK(ops::activation(Tensor::vec({-1, 2}), Activation::kLinear) == Tensor::vec({-1, 2}));
  CHECK(ops::activation(Tensor::vec({-1, 2}), Activation::kConstantOne) == Tensor::vec({1, 1}));
}

TEST_CASE("activation backward matches finite differences") {
  Rng rng(5);
  Tensor z = random_tensor({4, 6}, rng);
  for (auto& v : z.data()) {
    if (std::abs(v) < 1e-2) v += 0.1;  // keep away from the relu kink
  }
  const Tensor c = random_tensor({4, 6}, rng);
  for (auto kind : {Activation::kLinear, Activation::kRelu, Activation::kSigmoid, Activation::kTanh}) {
    CAPTURE(ops::to_string(kind));
    const Tensor y = ops::activation(z, kind);
    const Tensor dz = ops::activation_backward(c, z, y, kind);
    check_close(dz, numeric_grad([&](const Tensor& v) { return dot(ops::activation(v, kind), c); }, z), 1e-4);
  }
}

TEST_CASE("parse_activation lists the four kinds") {
  CHECK(ops::parse_activation("tanh") == Activation::kTanh);
  try {
    ops::parse_activation("swish");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* k : {"linear", "relu", "sigmoid", "tanh"}) CHECK(msg.find(k) != std::string::npos);
  }
  CHECK_THROWS_AS(ops::parse_activation("one"), ConfigError);
}

TEST_CASE("hadamard examples") {
  CHECK(ops::hadamard(Tensor::vec({1, 2, 3}), Tensor::vec({1, 1, 1})) == Tensor::vec({1, 2, 3}));
  CHECK(ops::hadamard(Tensor::vec({1, 2}), Tensor::scalar(0.5)) == Tensor::vec({0.5, 1.0}));
  CHECK(ops::hadamard(Tensor::vec({2, 3}), Tensor::vec({0, 0})) == Tensor::vec({0, 0}));
  CHECK_THROWS_AS(ops::hadamard(Tensor::vec({1, 2}), Tensor::vec({1, 2, 3})), ShapeError);
}

TEST_CASE("hadamard is commutative and associative") {
  Rng rng(8);
  const Tensor a = random_tensor({7}, rng);
  const Tensor b = random_tensor({7}, rng);
  const Tensor c = random_tensor({7}, rng);
  CHECK(ops::hadamard(a, b) == ops::hadamard(b, a));
  const Tensor l = ops::hadamard(ops::hadamard(a, b), c);
  const Tensor r = ops::hadamard(a, ops::hadamard(b, c));
  for (std::size_t i = 0; i < 7; ++i) CHECK(l[i] == doctest::Approx(r[i]).epsilon(1e-15));
}

TEST_CASE("hadamard backward, elementwise and scalar broadcast") {
  Rng rng(9);
  const Tensor a = random_tensor({6}, rng);
  const Tensor b = random_tensor({6}, rng);
  const Tensor s = Tensor::scalar(0.7);
  const Tensor c = random_tensor({6}, rng);
  auto g = ops::hadamard_backward(c, a, b);
  check_close(g.da, numeric_grad([&](const Tensor& v) { return dot(ops::hadamard(v, b), c); }, a), 1e-4);
  check_close(g.db, numeric_grad([&](const Tensor& v) { return dot(ops::hadamard(a, v), c); }, b), 1e-4);
  g = ops::hadamard_backward(c, a, s);
  REQUIRE(g.db.size() == 1);
  check_close(g.db, numeric_grad([&](const Tensor& v) { return dot(ops::hadamard(a, v), c); }, s), 1e-4);
}

TEST_CASE("dropout") {
  Rng rng(1);
  const Tensor x = Tensor::vec({1, 2, 3});
  CHECK(ops::dropout(x, 0.0, rng, true).out == x);
  CHECK(ops::dropout(x, 0.5, rng, false).out == x);
  CHECK_THROWS_AS(ops::dropout(x, 1.0, rng, true), ConfigError);

  const Tensor ones({100000}, 1.0);
  const auto r = ops::dropout(ones, 0.5, rng, true);
  double mean = 0;
  for (double v : r.out.data()) {
    CHECK((v == 0.0 || v == 2.0));
    mean += v;
  }
  mean /= 100000.0;
  CHECK(mean >= 0.98);
  CHECK(mean <= 1.02);
  const Tensor back = ops::dropout_backward(ones, r.mask);
  CHECK(back == r.out);
}

TEST_CASE("initializers") {
  Rng rng(4);
  CHECK(ops::init_tensor({2, 2}, ops::InitScheme::kZeros, rng) == Tensor({2, 2}, 0.0));
  const Tensor w = ops::init_tensor({400, 400}, ops::InitScheme::kGlorotUniform, rng);
  const double bound = std::sqrt(6.0 / 800.0);
  double lo = 0;
  double hi = 0;
  for (double v : w.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(-lo <= bound);
  CHECK(hi <= bound);
  CHECK(hi > 0.95 * bound);
  Rng a(77);
  Rng b(77);
  CHECK(ops::init_tensor({5, 3}, ops::InitScheme::kGlorotUniform, a) ==
        ops::init_tensor({5, 3}, ops::InitScheme::kGlorotUniform, b));
}

TEST_CASE("rng is reproducible and derive is label-keyed") {
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(5).derive("x").next_u64() == Rng(5).derive("x").next_u64());
  CHECK(Rng(5).derive("x").next_u64() != Rng(5).derive("y").next_u64());
  Rng c(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.uniform_int(7) < 7);
  }
}
