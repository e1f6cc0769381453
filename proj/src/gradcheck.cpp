#include "gatenet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "gatenet/error.hpp"

namespace gatenet::gradcheck {

Tensor finite_diff(const LossFn& loss, ParamStore& params, const std::string& name,
                   double step) {
  if (!(step > 0.0)) throw ConfigError("finite difference step must be positive");
  Tensor& theta = params.at(name).value;
  Tensor numeric(theta.shape());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double original = theta[i];
    theta[i] = original + step;
    const double plus = loss(params);
    theta[i] = original - step;
    const double minus = loss(params);
    theta[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("non-finite loss while probing " + name + "[" + std::to_string(i) + "]");
    }
    numeric[i] = (plus - minus) / (2.0 * step);
  }
  return numeric;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

TensorReport compare(const std::string& name, const Tensor& analytic, const Tensor& numeric,
                     double tolerance) {
  if (analytic.shape() != numeric.shape()) {
    throw ShapeError("gradient shapes differ for " + name);
  }
  TensorReport r;
  r.name = name;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double err = relative_error(analytic[i], numeric[i]);
    if (err > r.max_rel_error || i == 0) {
      r.max_rel_error = err;
      r.argmax = i;
      r.analytic = analytic[i];
      r.numeric = numeric[i];
    }
  }
  r.passed = r.max_rel_error <= tolerance;
  return r;
}

bool GradReport::passed() const {
  return std::all_of(tensors.begin(), tensors.end(), [](const auto& t) { return t.passed; });
}

const TensorReport* GradReport::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string GradReport::table() const {
  std::size_t width = 6;
  for (const auto& t : tensors) width = std::max(width, t.name.size());
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s  %12s  %6s  %14s  %14s  %s\n", static_cast<int>(width),
                "tensor", "max_rel_err", "coord", "analytic", "numeric", "status");
  out << buf;
  for (const auto& t : tensors) {
    std::snprintf(buf, sizeof buf, "%-*s  %12.3e  %6zu  %14.6e  %14.6e  %s\n",
                  static_cast<int>(width), t.name.c_str(), t.max_rel_error, t.argmax,
                  t.analytic, t.numeric, t.passed ? "PASS" : "FAIL");
    out << buf;
  }
  return out.str();
}

GradReport check_model(Model& model, const EncodedBatch& batch, const CheckOptions& options) {
  auto& params = model.params();
  params.zero_grad();
  {
    Rng rng(options.dropout_seed);
    model.loss_and_grad(batch, &rng, options.training);
  }
  const LossFn loss = [&](const ParamStore&) {
    Rng rng(options.dropout_seed);
    return model.loss(batch, &rng, options.training);
  };

  GradReport report;
  report.tolerance = options.tolerance;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor analytic = params[i].grad;
    if (params[i].name == options.corrupt_tensor) {
      for (std::size_t j = 0; j < analytic.size(); ++j) analytic[j] = 1.5 * analytic[j] + 1e-3;
    }
    const Tensor numeric = finite_diff(loss, params, params[i].name, options.step);
    report.tensors.push_back(compare(params[i].name, analytic, numeric, options.tolerance));
  }
  params.zero_grad();
  return report;
}

double min_relu_margin(const Model& model, const ForwardPass& pass) {
  double margin = std::numeric_limits<double>::infinity();
  auto scan = [&](const Tensor& t) {
    for (double v : t.data()) margin = std::min(margin, std::abs(v));
  };
  const auto& spec = model.spec();
  if (spec.embed_gate && spec.embed_gate->activation == ops::Activation::kRelu) {
    scan(pass.embed_gate.pre);
  }
  for (const auto& layer : pass.layers) {
    if (spec.hidden_activation == ops::Activation::kRelu) scan(layer.dense.pre);
    if (spec.hidden_gate && spec.hidden_gate->activation == ops::Activation::kRelu) {
      scan(layer.gate.pre);
    }
  }
  return margin;
}

ModelSpec tiny_spec(Family family, std::optional<GateConfig> embed_gate,
                    std::optional<HiddenGateConfig> hidden_gate) {
  ModelSpec spec;
  spec.family = family;
  spec.k = 4;
  spec.hidden_widths = {8, 8};
  spec.embed_gate = embed_gate;
  spec.hidden_gate = hidden_gate;
  return spec;
}

double min_nonzero_gradient(const ParamStore& params) {
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : params[i].grad.data()) {
      if (g != 0.0) smallest = std::min(smallest, std::abs(g));
    }
  }
  return smallest;
}

TinySetup tiny_setup(ModelSpec spec, std::uint64_t seed, double kink_margin,
                     std::size_t batch_size, double gradient_floor) {
  const std::vector<std::size_t> cardinalities{5, 6, 7};
  Rng data_rng = Rng(seed).derive("gradcheck.batch");
  Dataset data(cardinalities.size());
  std::vector<std::uint32_t> row(cardinalities.size());
  for (std::size_t b = 0; b < batch_size; ++b) {
    for (std::size_t f = 0; f < cardinalities.size(); ++f) {
      row[f] = static_cast<std::uint32_t>(data_rng.uniform_int(cardinalities[f]));
    }
    data.push_back(row.data(), static_cast<int>(b % 2));
  }
  const EncodedBatch batch = make_batch(data);

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Model model(spec, cardinalities, seed + attempt);
    Rng rng(CheckOptions{}.dropout_seed);
    const ForwardPass pass = model.forward(batch, &rng, true);
    if (min_relu_margin(model, pass) < kink_margin) continue;
    model.params().zero_grad();
    Rng grad_rng(CheckOptions{}.dropout_seed);
    model.loss_and_grad(batch, &grad_rng, true);
    if (min_nonzero_gradient(model.params()) >= gradient_floor) {
      model.params().zero_grad();
      return TinySetup{std::move(model), batch, seed + attempt};
    }
  }
  throw NumericError("could not find a well-conditioned parameter point for the gradient check");
}

}  // namespace gatenet::gradcheck
