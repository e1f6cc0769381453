#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gatenet/model.hpp"

namespace gatenet::gradcheck {

using LossFn = std::function<double(const ParamStore&)>;

// Central differences (L(θ+h) − L(θ−h)) / 2h for every coordinate of one
// tensor. The parameter is restored bitwise after each probe.
Tensor finite_diff(const LossFn& loss, ParamStore& params, const std::string& name,
                   double step = 1e-5);

// |a − n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

struct TensorReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t argmax = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool passed = true;
};

struct GradReport {
  std::vector<TensorReport> tensors;
  double tolerance = 1e-4;

  bool passed() const;
  const TensorReport* find(const std::string& name) const;
  // Aligned text table: tensor, max rel error, coordinate, analytic, numeric, status.
  std::string table() const;
};

// Compares an analytic gradient tensor with finite differences of `loss`.
TensorReport compare(const std::string& name, const Tensor& analytic, const Tensor& numeric,
                     double tolerance);

struct CheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Dropout masks are reproduced on every loss evaluation from this seed.
  bool training = true;
  std::uint64_t dropout_seed = 7;
  // Test hook: scales the analytic gradient of this tensor to emulate a
  // broken backward rule.
  std::string corrupt_tensor;
};

// Gradient report for every registered tensor of the model on one batch.
GradReport check_model(Model& model, const EncodedBatch& batch, const CheckOptions& options);

// Smallest |pre-activation| across every ReLU stage of a forward pass; +inf
// when the model has no ReLU stage.
double min_relu_margin(const Model& model, const ForwardPass& pass);

struct TinySetup {
  Model model;
  EncodedBatch batch;
  std::uint64_t seed = 0;  // the model seed that was accepted
};

// Smallest nonzero |grad| over every registered tensor; +inf if all are 0.
double min_nonzero_gradient(const ParamStore& params);

// The f=3, k=4, widths [8,8] model on a small random batch. Seeds are tried in
// turn until every ReLU pre-activation sits at least `kink_margin` from 0 and
// every nonzero gradient coordinate is at least `gradient_floor` in size.
TinySetup tiny_setup(ModelSpec spec, std::uint64_t seed, double kink_margin = 1e-3,
                     std::size_t batch_size = 6, double gradient_floor = 1e-6);

ModelSpec tiny_spec(Family family, std::optional<GateConfig> embed_gate,
                    std::optional<HiddenGateConfig> hidden_gate);

}  // namespace gatenet::gradcheck
