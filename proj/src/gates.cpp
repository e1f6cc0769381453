#include "gatenet/gates.hpp"

#include "gatenet/error.hpp"

namespace gatenet {

std::string_view to_string(GateGranularity g) {
  return g == GateGranularity::kVectorWise ? "vector" : "bit";
}

std::string_view to_string(GateSharing s) {
  return s == GateSharing::kFieldPrivate ? "private" : "shared";
}

GateGranularity parse_granularity(std::string_view text) {
  if (text == "vector" || text == "vector_wise") return GateGranularity::kVectorWise;
  if (text == "bit" || text == "bit_wise") return GateGranularity::kBitWise;
  throw ConfigError("unknown gate granularity '" + std::string(text) +
                    "' (valid: vector, bit)");
}

GateSharing parse_sharing(std::string_view text) {
  if (text == "private" || text == "field_private") return GateSharing::kFieldPrivate;
  if (text == "shared" || text == "field_shared") return GateSharing::kFieldShared;
  throw ConfigError("unknown gate sharing '" + std::string(text) +
                    "' (valid: private, shared)");
}

std::size_t gate_tensor_count(const GateConfig& config, std::size_t num_fields) {
  return config.sharing == GateSharing::kFieldPrivate ? num_fields : 1;
}

Shape gate_weight_shape(const GateConfig& config, std::size_t k) {
  return {k, config.granularity == GateGranularity::kVectorWise ? std::size_t{1} : k};
}

std::size_t gate_param_count(const GateConfig& config, std::size_t num_fields,
                             std::size_t k) {
  return gate_tensor_count(config, num_fields) * shape_size(gate_weight_shape(config, k));
}

namespace gates {

Tensor embed_lookup(const EncodedBatch& batch, std::span<const Tensor* const> tables) {
  const std::size_t f = batch.num_fields;
  if (tables.size() != f || f == 0) {
    throw ShapeError("embed_lookup: batch has " + std::to_string(f) + " fields, got " +
                     std::to_string(tables.size()) + " tables");
  }
  const std::size_t k = tables[0]->dim(1);
  Tensor E({batch.size(), f * k});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto* idx = batch.row(b);
    for (std::size_t i = 0; i < f; ++i) {
      const Tensor& table = *tables[i];
      if (idx[i] >= table.dim(0)) {
        throw DataError("embed_lookup: field " + std::to_string(i) + " index " +
                        std::to_string(idx[i]) + " out of range for " +
                        std::to_string(table.dim(0)) + " rows");
      }
      const double* src = table.raw() + idx[i] * k;
      double* dst = E.raw() + b * f * k + i * k;
      for (std::size_t l = 0; l < k; ++l) dst[l] = src[l];
    }
  }
  return E;
}

void embed_lookup_backward(const EncodedBatch& batch, const Tensor& dE,
                           std::span<Tensor* const> table_grads) {
  const std::size_t f = batch.num_fields;
  const std::size_t k = table_grads[0]->dim(1);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto* idx = batch.row(b);
    for (std::size_t i = 0; i < f; ++i) {
      const double* src = dE.raw() + b * f * k + i * k;
      double* dst = table_grads[i]->raw() + idx[i] * k;
      for (std::size_t l = 0; l < k; ++l) dst[l] += src[l];
    }
  }
}

Tensor gate_value(const Tensor& e, const Tensor& W, const Tensor* bias,
                  ops::Activation activation) {
  if (W.rank() != 2 || W.dim(0) != e.size()) {
    throw ShapeError("gate_value: embedding " + shape_string(e.shape()) +
                     " incompatible with gate weight " + shape_string(W.shape()));
  }
  const std::size_t k = W.dim(0);
  const std::size_t out = W.dim(1);
  Tensor g({out});
  for (std::size_t j = 0; j < out; ++j) {
    double s = bias ? (*bias)[j] : 0.0;
    for (std::size_t l = 0; l < k; ++l) s += W[l * out + j] * e[l];
    g[j] = ops::activate(s, activation);
  }
  return g;
}

namespace {

void check_gate_params(const FeatureGateParams& params, const GateConfig& config,
                       std::size_t num_fields, std::size_t k) {
  const std::size_t expected = gate_tensor_count(config, num_fields);
  if (params.weights.size() != expected) {
    throw ShapeError("feature gate expects " + std::to_string(expected) +
                     " weight tensors, got " + std::to_string(params.weights.size()));
  }
  const Shape shape = gate_weight_shape(config, k);
  for (const Tensor* w : params.weights) {
    if (w->shape() != shape) {
      throw ShapeError("feature gate weight " + shape_string(w->shape()) +
                       " does not match " + shape_string(shape));
    }
  }
  if (config.bias != (params.biases.size() == expected)) {
    throw ShapeError("feature gate bias tensors do not match configuration");
  }
}

}  // namespace

Tensor feature_gate_forward(const Tensor& E, const FeatureGateParams& params,
                            const GateConfig& config, std::size_t num_fields,
                            FeatureGateCache& cache) {
  if (num_fields == 0 || E.cols() % num_fields != 0) {
    throw ShapeError("feature_gate_forward: " + shape_string(E.shape()) +
                     " is not a multiple of " + std::to_string(num_fields) + " fields");
  }
  const std::size_t k = E.cols() / num_fields;
  check_gate_params(params, config, num_fields, k);
  const std::size_t out = gate_weight_shape(config, k)[1];
  const std::size_t batch = E.rows();
  const bool shared = config.sharing == GateSharing::kFieldShared;

  cache.pre = Tensor({batch, num_fields * out});
  cache.gate = Tensor({batch, num_fields * out});
  Tensor GE(E.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < num_fields; ++i) {
      const Tensor& W = *params.weights[shared ? 0 : i];
      const Tensor* bias = config.bias ? params.biases[shared ? 0 : i] : nullptr;
      const double* e = E.raw() + b * num_fields * k + i * k;
      double* pre = cache.pre.raw() + b * num_fields * out + i * out;
      double* gate = cache.gate.raw() + b * num_fields * out + i * out;
      for (std::size_t j = 0; j < out; ++j) {
        double s = bias ? (*bias)[j] : 0.0;
        for (std::size_t l = 0; l < k; ++l) s += W[l * out + j] * e[l];
        pre[j] = s;
        gate[j] = ops::activate(s, config.activation);
      }
      double* ge = GE.raw() + b * num_fields * k + i * k;
      for (std::size_t l = 0; l < k; ++l) ge[l] = e[l] * gate[out == 1 ? 0 : l];
    }
  }
  return GE;
}

Tensor feature_gate_backward(const Tensor& dGE, const Tensor& E,
                             const FeatureGateParams& params, const FeatureGateGrads& grads,
                             const GateConfig& config, std::size_t num_fields,
                             const FeatureGateCache& cache) {
  const std::size_t k = E.cols() / num_fields;
  const std::size_t out = gate_weight_shape(config, k)[1];
  const std::size_t batch = E.rows();
  const bool shared = config.sharing == GateSharing::kFieldShared;

  Tensor dE(E.shape());
  std::vector<double> dpre(out);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < num_fields; ++i) {
      const std::size_t w_idx = shared ? 0 : i;
      const Tensor& W = *params.weights[w_idx];
      Tensor& dW = *grads.weights[w_idx];
      const double* e = E.raw() + b * num_fields * k + i * k;
      const double* dge = dGE.raw() + b * num_fields * k + i * k;
      const double* pre = cache.pre.raw() + b * num_fields * out + i * out;
      const double* gate = cache.gate.raw() + b * num_fields * out + i * out;
      double* de = dE.raw() + b * num_fields * k + i * k;

      // Direct path e -> ge, then the gate path e -> g -> ge.
      if (out == 1) {
        double dg = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
          de[l] = dge[l] * gate[0];
          dg += dge[l] * e[l];
        }
        dpre[0] = dg * ops::activate_grad(pre[0], gate[0], config.activation);
      } else {
        for (std::size_t l = 0; l < k; ++l) {
          de[l] = dge[l] * gate[l];
          dpre[l] = dge[l] * e[l] * ops::activate_grad(pre[l], gate[l], config.activation);
        }
      }
      for (std::size_t l = 0; l < k; ++l) {
        double acc = 0.0;
        for (std::size_t j = 0; j < out; ++j) {
          dW[l * out + j] += dpre[j] * e[l];
          acc += W[l * out + j] * dpre[j];
        }
        de[l] += acc;
      }
      if (config.bias) {
        Tensor& db = *grads.biases[w_idx];
        for (std::size_t j = 0; j < out; ++j) db[j] += dpre[j];
      }
    }
  }
  return dE;
}

Tensor mlp_layer_forward(const Tensor& a_prev, const Tensor& W, const Tensor& b,
                         ops::Activation activation, DenseLayerCache& cache) {
  cache.input = a_prev;
  cache.pre = ops::dense_affine(a_prev, W, b);
  cache.out = ops::activation(cache.pre, activation);
  return cache.out;
}

Tensor mlp_layer_backward(const Tensor& da, const Tensor& W, Tensor& dW, Tensor& db,
                          ops::Activation activation, const DenseLayerCache& cache) {
  const Tensor dz = ops::activation_backward(da, cache.pre, cache.out, activation);
  return ops::dense_affine_backward(dz, cache.input, W, dW, db);
}

Tensor hidden_gate_forward(const Tensor& a, const Tensor& Wg, ops::Activation activation,
                           HiddenGateCache& cache) {
  if (Wg.rank() != 2 || Wg.dim(0) != Wg.dim(1) || Wg.dim(0) != a.cols()) {
    throw ShapeError("hidden_gate_forward: gate weight " + shape_string(Wg.shape()) +
                     " must be square with side " + std::to_string(a.cols()));
  }
  cache.input = a;
  cache.pre = ops::linear(a, Wg);
  cache.gate = ops::activation(cache.pre, activation);
  return ops::hadamard(a, cache.gate);
}

Tensor hidden_gate_backward(const Tensor& dg, const Tensor& Wg, Tensor& dWg,
                            ops::Activation activation, const HiddenGateCache& cache) {
  auto [da, dgate] = ops::hadamard_backward(dg, cache.input, cache.gate);
  const Tensor dpre = ops::activation_backward(dgate, cache.pre, cache.gate, activation);
  const Tensor da_gate = ops::linear_backward(dpre, cache.input, Wg, dWg);
  for (std::size_t i = 0; i < da.size(); ++i) da[i] += da_gate[i];
  return da;
}

}  // namespace gates
}  // namespace gatenet
