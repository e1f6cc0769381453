#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gatenet/data.hpp"
#include "gatenet/gates.hpp"
#include "gatenet/ops.hpp"
#include "gatenet/tensor.hpp"

namespace gatenet {

enum class Family { kFM, kDNN, kDeepFM };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

struct HiddenGateConfig {
  ops::Activation activation = ops::Activation::kTanh;
  ops::InitScheme init = ops::InitScheme::kGlorotUniform;

  friend bool operator==(const HiddenGateConfig&, const HiddenGateConfig&) = default;
};

struct ModelSpec {
  Family family = Family::kDNN;
  std::optional<GateConfig> embed_gate;
  std::optional<HiddenGateConfig> hidden_gate;
  std::size_t k = 10;
  std::vector<std::size_t> hidden_widths{400, 400, 400};
  ops::Activation hidden_activation = ops::Activation::kRelu;
  double dropout = 0.5;

  bool has_deep_part() const { return family != Family::kFM; }
  bool has_fm_part() const { return family != Family::kDNN; }

  // Throws ConfigError listing every violated constraint.
  void validate() const;
  // One `key=value` per line in a fixed order; parse(to_text()) == *this.
  std::string to_text() const;
  static ModelSpec parse(std::string_view text);
  // Short label in the paper's suffix convention, e.g. "DeepFM_e+h".
  std::string label() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Line-level differences between two canonical spec texts.
std::vector<std::string> spec_diff(const ModelSpec& expected, const ModelSpec& actual);

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named trainable tensors, each with a gradient buffer of the same shape.
// Iteration follows registration order.
class ParamStore {
 public:
  Param& add(std::string name, Tensor value);
  Param& at(std::string_view name);
  const Param& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::deque<Param>& all() { return params_; }
  const std::deque<Param>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }

  std::size_t total_values() const;
  void zero_grad();

 private:
  std::deque<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct HiddenLayerCache {
  gates::DenseLayerCache dense;
  gates::HiddenGateCache gate;
  Tensor dropout_mask;
};

// Everything the backward pass needs from one forward pass over a batch.
struct ForwardPass {
  EncodedBatch batch;
  Tensor embeddings;  // E, [B, f·k]
  gates::FeatureGateCache embed_gate;
  Tensor gated;       // GE, equal to E when the embedding gate is off
  Tensor fm_sum;      // Σ_i ge_i per instance, [B, k]
  std::vector<HiddenLayerCache> layers;
  Tensor deep_top;    // input of the output layer
  Tensor fm_logit;    // [B], zero when there is no FM part
  Tensor deep_logit;  // [B], zero when there is no deep part
  Tensor logit;       // [B]
};

class Model {
 public:
  // Each tensor is drawn from Rng(seed).derive(name), so enabling a gate does
  // not change the initial value of any other parameter.
  Model(ModelSpec spec, std::vector<std::size_t> cardinalities, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::size_t>& cardinalities() const { return cardinalities_; }
  std::size_t num_fields() const { return cardinalities_.size(); }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Dropout is active only when training is set, and then needs rng.
  ForwardPass forward(const EncodedBatch& batch, Rng* rng, bool training) const;
  // Accumulates parameter gradients for upstream dlogit ([B]).
  void backward(const ForwardPass& pass, const Tensor& dlogit);

  // Mean cross-entropy of the batch; gradients are accumulated into params.
  double loss_and_grad(const EncodedBatch& batch, Rng* rng, bool training);
  double loss(const EncodedBatch& batch, Rng* rng, bool training) const;

  std::vector<double> predict(const EncodedBatch& batch) const;

  // Names of gate weight tensors (embedding gate first, then hidden gates).
  std::vector<std::string> gate_param_names() const;

 private:
  std::vector<const Tensor*> values(const std::vector<std::size_t>& ids) const;
  std::vector<Tensor*> grads(const std::vector<std::size_t>& ids);

  ModelSpec spec_;
  std::vector<std::size_t> cardinalities_;
  ParamStore params_;

  std::vector<std::size_t> embed_ids_;
  std::vector<std::size_t> linear_ids_;
  std::optional<std::size_t> fm_bias_id_;
  std::vector<std::size_t> egate_w_ids_;
  std::vector<std::size_t> egate_b_ids_;
  std::vector<std::size_t> mlp_w_ids_;
  std::vector<std::size_t> mlp_b_ids_;
  std::vector<std::size_t> hgate_ids_;
  std::optional<std::size_t> out_w_id_;
  std::optional<std::size_t> out_b_id_;
};

// Second-order FM term ½(‖Σe_i‖² − Σ‖e_i‖²) for one instance's f embeddings
// laid out contiguously (f·k values).
double fm_interaction(std::span<const double> embeddings, std::size_t k);

double predict(double logit);
// Same definition as metrics::logloss.
double cross_entropy(std::span<const double> predictions, std::span<const double> labels);

}  // namespace gatenet
