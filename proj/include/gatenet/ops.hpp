#pragma once

#include <string>
#include <string_view>

#include "gatenet/rng.hpp"
#include "gatenet/tensor.hpp"

// Forward operations paired with hand-derived backward rules. Inputs with a
// leading batch axis ([B, n]) are processed row by row; rank-1 inputs are a
// batch of one.
namespace gatenet::ops {

// kConstantOne maps everything to 1 with zero derivative. It is not a
// user-facing choice; it turns a gate into an exact identity for diagnostics.
enum class Activation { kLinear, kRelu, kSigmoid, kTanh, kConstantOne };

std::string_view to_string(Activation kind);
// Accepts linear|relu|sigmoid|tanh. Throws ConfigError naming the four kinds.
Activation parse_activation(std::string_view name);

// y = x·Wᵀ with W stored [out, in].
Tensor linear(const Tensor& x, const Tensor& W);
// Accumulates dW += dyᵀ·x; returns dx = dy·W.
Tensor linear_backward(const Tensor& dy, const Tensor& x, const Tensor& W, Tensor& dW);

// y = x·Wᵀ + b with W stored [out, in].
Tensor dense_affine(const Tensor& x, const Tensor& W, const Tensor& b);
// Accumulates dW += dyᵀ·x and db += Σ_rows dy; returns dx = dy·W.
Tensor dense_affine_backward(const Tensor& dy, const Tensor& x,
                             const Tensor& W, Tensor& dW, Tensor& db);

double activate(double z, Activation kind);
// Derivative expressed through the pre-activation z and output y.
double activate_grad(double z, double y, Activation kind);

Tensor activation(const Tensor& z, Activation kind);
Tensor activation_backward(const Tensor& dy, const Tensor& z, const Tensor& y,
                           Activation kind);

// Elementwise product; b may also hold a single value broadcast over a.
Tensor hadamard(const Tensor& a, const Tensor& b);
struct HadamardGrads {
  Tensor da;
  Tensor db;
};
HadamardGrads hadamard_backward(const Tensor& dy, const Tensor& a,
                                const Tensor& b);

// Inverted dropout. mask holds 0 or 1/(1-rate) per element, so the backward
// pass is dy ⊙ mask. At evaluation time the input is returned untouched and
// the mask is empty.
struct DropoutResult {
  Tensor out;
  Tensor mask;
};
DropoutResult dropout(const Tensor& x, double rate, Rng& rng, bool training);
Tensor dropout_backward(const Tensor& dy, const Tensor& mask);

enum class InitScheme { kZeros, kGlorotUniform };

// Glorot bound sqrt(6/(fan_in+fan_out)) with fan_out = shape[0] and fan_in the
// product of the remaining axes (rank-1 shapes use shape[0] for both).
double glorot_bound(const Shape& shape);
Tensor init_tensor(const Shape& shape, InitScheme scheme, Rng& rng);

}  // namespace gatenet::ops
