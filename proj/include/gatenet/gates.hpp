#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "gatenet/data.hpp"
#include "gatenet/ops.hpp"
#include "gatenet/tensor.hpp"

namespace gatenet {

enum class GateGranularity { kVectorWise, kBitWise };
enum class GateSharing { kFieldPrivate, kFieldShared };

std::string_view to_string(GateGranularity g);
std::string_view to_string(GateSharing s);
GateGranularity parse_granularity(std::string_view text);
GateSharing parse_sharing(std::string_view text);

struct GateConfig {
  GateGranularity granularity = GateGranularity::kVectorWise;
  GateSharing sharing = GateSharing::kFieldPrivate;
  ops::Activation activation = ops::Activation::kSigmoid;
  bool bias = false;
  ops::InitScheme init = ops::InitScheme::kGlorotUniform;

  friend bool operator==(const GateConfig&, const GateConfig&) = default;
};

// Number of gate weight tensors: f when private, 1 when shared.
std::size_t gate_tensor_count(const GateConfig& config, std::size_t num_fields);
// Each weight tensor is [k, 1] (vector-wise) or [k, k] (bit-wise).
Shape gate_weight_shape(const GateConfig& config, std::size_t k);
// Total gate weights: f·k, f·k², k or k², bias excluded.
std::size_t gate_param_count(const GateConfig& config, std::size_t num_fields,
                             std::size_t k);

namespace gates {

// Gathers one row per field into a [B, f·k] matrix. tables[i] is the
// [cardinality_i, k] embedding matrix of field i.
Tensor embed_lookup(const EncodedBatch& batch, std::span<const Tensor* const> tables);
// Scatter-adds rows of dE into the rows that were looked up.
void embed_lookup_backward(const EncodedBatch& batch, const Tensor& dE,
                           std::span<Tensor* const> table_grads);

// Gate value for one field embedding: σ(Wᵀ·e (+ b)). Returns a single value for
// vector-wise weights ([k,1]) and k values for bit-wise weights ([k,k]).
Tensor gate_value(const Tensor& e, const Tensor& W, const Tensor* bias,
                  ops::Activation activation);

struct FeatureGateCache {
  Tensor pre;   // [B, f·out] pre-activation gate inputs
  Tensor gate;  // [B, f·out] gate values
};

// Per-field gate weights. weights.size() is f (private) or 1 (shared); biases
// is empty unless the gate has a bias term.
struct FeatureGateParams {
  std::span<const Tensor* const> weights;
  std::span<const Tensor* const> biases;
};
struct FeatureGateGrads {
  std::span<Tensor* const> weights;
  std::span<Tensor* const> biases;
};

// ge_i = e_i ⊙ g_i over the [B, f·k] embedding matrix.
Tensor feature_gate_forward(const Tensor& E, const FeatureGateParams& params,
                            const GateConfig& config, std::size_t num_fields,
                            FeatureGateCache& cache);
// Returns dE, which includes both the direct path and the path through g_i.
Tensor feature_gate_backward(const Tensor& dGE, const Tensor& E,
                             const FeatureGateParams& params, const FeatureGateGrads& grads,
                             const GateConfig& config, std::size_t num_fields,
                             const FeatureGateCache& cache);

struct DenseLayerCache {
  Tensor input;
  Tensor pre;
  Tensor out;
};

// a = σ(W·a_prev + b).
Tensor mlp_layer_forward(const Tensor& a_prev, const Tensor& W, const Tensor& b,
                         ops::Activation activation, DenseLayerCache& cache);
Tensor mlp_layer_backward(const Tensor& da, const Tensor& W, Tensor& dW, Tensor& db,
                          ops::Activation activation, const DenseLayerCache& cache);

struct HiddenGateCache {
  Tensor input;
  Tensor pre;   // W_g·a
  Tensor gate;  // σ_g(W_g·a)
};

// g = a ⊙ σ_g(W_g·a) with W_g square.
Tensor hidden_gate_forward(const Tensor& a, const Tensor& Wg, ops::Activation activation,
                           HiddenGateCache& cache);
Tensor hidden_gate_backward(const Tensor& dg, const Tensor& Wg, Tensor& dWg,
                            ops::Activation activation, const HiddenGateCache& cache);

}  // namespace gates
}  // namespace gatenet
