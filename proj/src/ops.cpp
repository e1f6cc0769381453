#include "gatenet/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "gatenet/error.hpp"

namespace gatenet::ops {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstRowVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.raw(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.raw(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

Shape batch_shape(const Tensor& like, std::size_t cols) {
  if (like.rank() <= 1) return {cols};
  return {like.rows(), cols};
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(a.shape()) +
                     " does not match " + shape_string(b.shape()));
  }
}

}  // namespace

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::kLinear:
      return "linear";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
    case Activation::kConstantOne:
      return "one";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (valid: linear, relu, sigmoid, tanh)");
}

Tensor linear(const Tensor& x, const Tensor& W) {
  if (W.rank() != 2 || x.cols() != W.dim(1)) {
    throw ShapeError("linear: input " + shape_string(x.shape()) +
                     " incompatible with weight " + shape_string(W.shape()));
  }
  Tensor y(batch_shape(x, W.dim(0)));
  as_matrix(y).noalias() = as_matrix(x) * as_matrix(W).transpose();
  return y;
}

Tensor linear_backward(const Tensor& dy, const Tensor& x, const Tensor& W, Tensor& dW) {
  if (dy.rows() != x.rows() || dy.cols() != W.dim(0) || dW.shape() != W.shape()) {
    throw ShapeError("linear_backward: upstream " + shape_string(dy.shape()) +
                     " incompatible with weight " + shape_string(W.shape()));
  }
  as_matrix(dW).noalias() += as_matrix(dy).transpose() * as_matrix(x);
  Tensor dx(x.shape());
  as_matrix(dx).noalias() = as_matrix(dy) * as_matrix(W);
  return dx;
}

Tensor dense_affine(const Tensor& x, const Tensor& W, const Tensor& b) {
  if (W.rank() != 2 || x.cols() != W.dim(1) || b.size() != W.dim(0)) {
    throw ShapeError("dense_affine: input " + shape_string(x.shape()) +
                     " incompatible with weight " + shape_string(W.shape()) +
                     " and bias " + shape_string(b.shape()));
  }
  Tensor y(batch_shape(x, W.dim(0)));
  auto ym = as_matrix(y);
  ym.noalias() = as_matrix(x) * as_matrix(W).transpose();
  ym.rowwise() += ConstRowVectorMap(b.raw(), static_cast<Eigen::Index>(b.size()));
  return y;
}

Tensor dense_affine_backward(const Tensor& dy, const Tensor& x,
                             const Tensor& W, Tensor& dW, Tensor& db) {
  if (dy.rows() != x.rows() || dy.cols() != W.dim(0) ||
      dW.shape() != W.shape() || db.size() != W.dim(0)) {
    throw ShapeError("dense_affine_backward: upstream " +
                     shape_string(dy.shape()) + " incompatible with weight " +
                     shape_string(W.shape()));
  }
  as_matrix(dW).noalias() += as_matrix(dy).transpose() * as_matrix(x);
  Eigen::Map<Eigen::RowVectorXd>(db.raw(), static_cast<Eigen::Index>(db.size())) +=
      as_matrix(dy).colwise().sum();
  Tensor dx(x.shape());
  as_matrix(dx).noalias() = as_matrix(dy) * as_matrix(W);
  return dx;
}

double activate(double z, Activation kind) {
  switch (kind) {
    case Activation::kLinear:
      return z;
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kSigmoid:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                      : std::exp(z) / (1.0 + std::exp(z));
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kConstantOne:
      return 1.0;
  }
  return z;
}

double activate_grad(double z, double y, Activation kind) {
  switch (kind) {
    case Activation::kLinear:
      return 1.0;
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid:
      return y * (1.0 - y);
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kConstantOne:
      return 0.0;
  }
  return 1.0;
}

Tensor activation(const Tensor& z, Activation kind) {
  Tensor y(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) y[i] = activate(z[i], kind);
  return y;
}

Tensor activation_backward(const Tensor& dy, const Tensor& z, const Tensor& y,
                           Activation kind) {
  require_same_shape(dy, z, "activation_backward");
  Tensor dz(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    dz[i] = dy[i] * activate_grad(z[i], y[i], kind);
  }
  return dz;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  Tensor out(a.shape());
  if (b.size() == 1 && a.shape() != b.shape()) {
    const double s = b[0];
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
  }
  require_same_shape(a, b, "hadamard");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

HadamardGrads hadamard_backward(const Tensor& dy, const Tensor& a,
                                const Tensor& b) {
  require_same_shape(dy, a, "hadamard_backward");
  HadamardGrads g{hadamard(dy, b), Tensor(b.shape())};
  if (b.size() == 1 && a.shape() != b.shape()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += dy[i] * a[i];
    g.db[0] = sum;
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) g.db[i] = dy[i] * a[i];
  }
  return g;
}

DropoutResult dropout(const Tensor& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0, 1), got " +
                      std::to_string(rate));
  }
  if (!training || rate == 0.0) return {x, Tensor()};
  DropoutResult r{Tensor(x.shape()), Tensor(x.shape())};
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    r.out[i] = x[i] * r.mask[i];
  }
  return r;
}

Tensor dropout_backward(const Tensor& dy, const Tensor& mask) {
  if (mask.empty()) return dy;
  return hadamard(dy, mask);
}

double glorot_bound(const Shape& shape) {
  if (shape.empty()) return 0.0;
  const double fan_out = static_cast<double>(shape[0]);
  const double fan_in = shape.size() == 1
                            ? fan_out
                            : static_cast<double>(shape_size(shape) / shape[0]);
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor init_tensor(const Shape& shape, InitScheme scheme, Rng& rng) {
  if (shape.empty() || shape_size(shape) == 0) {
    throw ShapeError("init_tensor: empty shape " + shape_string(shape));
  }
  Tensor t(shape);
  if (scheme == InitScheme::kGlorotUniform) {
    const double bound = glorot_bound(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  }
  return t;
}

}  // namespace gatenet::ops
