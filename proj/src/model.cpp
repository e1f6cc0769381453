#include "gatenet/model.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "gatenet/error.hpp"
#include "gatenet/metrics.hpp"

namespace gatenet {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string_view to_string(ops::InitScheme s) {
  return s == ops::InitScheme::kZeros ? "zeros" : "glorot";
}

ops::InitScheme parse_init(std::string_view text) {
  if (text == "zeros") return ops::InitScheme::kZeros;
  if (text == "glorot") return ops::InitScheme::kGlorotUniform;
  throw ConfigError("unknown init scheme '" + std::string(text) + "' (valid: glorot, zeros)");
}

// Like ops::parse_activation but also admits the internal constant-one kind.
ops::Activation parse_any_activation(std::string_view text) {
  if (text == "one") return ops::Activation::kConstantOne;
  return ops::parse_activation(text);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("key '" + std::string(key) + "' expects on/off, got '" +
                    std::string(text) + "'");
}

std::vector<std::size_t> parse_widths(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto part = text.substr(start, end - start);
    if (!part.empty()) {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (ec != std::errc() || ptr != part.data() + part.size() || v == 0) {
        throw ConfigError("hidden widths must be positive integers, got '" +
                          std::string(text) + "'");
      }
      out.push_back(v);
    }
    start = end + 1;
  }
  return out;
}

std::string join_widths(const std::vector<std::size_t>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kFM:
      return "fm";
    case Family::kDNN:
      return "dnn";
    case Family::kDeepFM:
      return "deepfm";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  if (text == "fm" || text == "FM") return Family::kFM;
  if (text == "dnn" || text == "DNN") return Family::kDNN;
  if (text == "deepfm" || text == "DeepFM") return Family::kDeepFM;
  throw ConfigError("unknown model family '" + std::string(text) +
                    "' (valid: fm, dnn, deepfm)");
}

void ModelSpec::validate() const {
  std::vector<std::string> problems;
  if (k == 0) problems.push_back("embedding dimension k must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) problems.push_back("dropout must lie in [0, 1)");
  if (hidden_gate && has_deep_part() && hidden_widths.empty()) {
    problems.push_back("hidden gate requires at least one hidden layer");
  }
  if (hidden_gate && !has_deep_part()) {
    problems.push_back("hidden gate requires a deep part (family dnn or deepfm)");
  }
  if (!problems.empty()) {
    std::string msg = "invalid model spec:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

std::string ModelSpec::to_text() const {
  std::ostringstream out;
  out << "family=" << to_string(family) << '\n';
  out << "k=" << k << '\n';
  out << "hidden_widths=" << join_widths(hidden_widths) << '\n';
  out << "hidden_activation=" << ops::to_string(hidden_activation) << '\n';
  out << "dropout=" << format_double(dropout) << '\n';
  out << "embed_gate=" << (embed_gate ? "on" : "off") << '\n';
  if (embed_gate) {
    out << "embed_gate.granularity=" << to_string(embed_gate->granularity) << '\n';
    out << "embed_gate.sharing=" << to_string(embed_gate->sharing) << '\n';
    out << "embed_gate.activation=" << ops::to_string(embed_gate->activation) << '\n';
    out << "embed_gate.bias=" << (embed_gate->bias ? "on" : "off") << '\n';
    out << "embed_gate.init=" << to_string(embed_gate->init) << '\n';
  }
  out << "hidden_gate=" << (hidden_gate ? "on" : "off") << '\n';
  if (hidden_gate) {
    out << "hidden_gate.activation=" << ops::to_string(hidden_gate->activation) << '\n';
    out << "hidden_gate.init=" << to_string(hidden_gate->init) << '\n';
  }
  return out.str();
}

ModelSpec ModelSpec::parse(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed spec line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&](std::string_view key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  ModelSpec spec;
  if (auto v = take("family")) spec.family = parse_family(*v);
  if (auto v = take("k")) spec.k = parse_widths(*v).at(0);
  if (auto v = take("hidden_widths")) spec.hidden_widths = parse_widths(*v);
  if (auto v = take("hidden_activation")) spec.hidden_activation = parse_any_activation(*v);
  if (auto v = take("dropout")) spec.dropout = std::stod(*v);
  const bool egate = parse_bool("embed_gate", take("embed_gate").value_or("off"));
  GateConfig g;
  if (auto v = take("embed_gate.granularity")) g.granularity = parse_granularity(*v);
  if (auto v = take("embed_gate.sharing")) g.sharing = parse_sharing(*v);
  if (auto v = take("embed_gate.activation")) g.activation = parse_any_activation(*v);
  if (auto v = take("embed_gate.bias")) g.bias = parse_bool("embed_gate.bias", *v);
  if (auto v = take("embed_gate.init")) g.init = parse_init(*v);
  if (egate) spec.embed_gate = g;
  const bool hgate = parse_bool("hidden_gate", take("hidden_gate").value_or("off"));
  HiddenGateConfig h;
  if (auto v = take("hidden_gate.activation")) h.activation = parse_any_activation(*v);
  if (auto v = take("hidden_gate.init")) h.init = parse_init(*v);
  if (hgate) spec.hidden_gate = h;
  if (!kv.empty()) {
    std::string msg = "unknown model spec keys:";
    for (const auto& [key, _] : kv) msg += " " + key;
    throw ConfigError(msg);
  }
  spec.validate();
  return spec;
}

std::string ModelSpec::label() const {
  std::string out(family == Family::kFM      ? "FM"
                  : family == Family::kDNN ? "DNN"
                                           : "DeepFM");
  if (embed_gate && hidden_gate) return out + "_e+h";
  if (embed_gate) return out + "_e";
  if (hidden_gate) return out + "_h";
  return out;
}

std::vector<std::string> spec_diff(const ModelSpec& expected, const ModelSpec& actual) {
  auto lines = [](const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
  };
  const auto a = lines(expected.to_text());
  const auto b = lines(actual.to_text());
  std::vector<std::string> diff;
  for (const auto& [key, value] : a) {
    auto it = b.find(key);
    const std::string other = it == b.end() ? "<absent>" : it->second;
    if (other != value) diff.push_back(key + ": expected " + value + ", found " + other);
  }
  for (const auto& [key, value] : b) {
    if (!a.count(key)) diff.push_back(key + ": expected <absent>, found " + value);
  }
  return diff;
}

Param& ParamStore::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ConfigError("parameter '" + name + "' registered twice");
  index_.emplace(name, params_.size());
  Tensor grad(value.shape());
  params_.push_back(Param{std::move(name), std::move(value), std::move(grad)});
  return params_.back();
}

Param& ParamStore::at(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ConfigError("no parameter named '" + std::string(name) + "'");
  return params_[it->second];
}

const Param& ParamStore::at(std::string_view name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

bool ParamStore::contains(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

Model::Model(ModelSpec spec, std::vector<std::size_t> cardinalities, std::uint64_t seed)
    : spec_(std::move(spec)), cardinalities_(std::move(cardinalities)) {
  spec_.validate();
  if (cardinalities_.empty()) throw ConfigError("model needs at least one field");
  const Rng root(seed);
  auto add = [&](const std::string& name, const Shape& shape, ops::InitScheme scheme) {
    Rng rng = root.derive(name);
    params_.add(name, ops::init_tensor(shape, scheme, rng));
    return params_.size() - 1;
  };
  const std::size_t f = cardinalities_.size();
  const std::size_t k = spec_.k;

  for (std::size_t i = 0; i < f; ++i) {
    embed_ids_.push_back(add("embed.field" + std::to_string(i + 1), {cardinalities_[i], k},
                             ops::InitScheme::kGlorotUniform));
  }
  if (spec_.has_fm_part()) {
    for (std::size_t i = 0; i < f; ++i) {
      linear_ids_.push_back(add("linear.field" + std::to_string(i + 1),
                                {cardinalities_[i], 1}, ops::InitScheme::kZeros));
    }
    fm_bias_id_ = add("fm.bias", {1}, ops::InitScheme::kZeros);
  }
  if (spec_.embed_gate) {
    const auto& g = *spec_.embed_gate;
    const std::size_t count = gate_tensor_count(g, f);
    const Shape shape = gate_weight_shape(g, k);
    for (std::size_t i = 0; i < count; ++i) {
      const std::string suffix =
          g.sharing == GateSharing::kFieldShared ? "" : std::to_string(i + 1);
      egate_w_ids_.push_back(add("egate.W" + suffix, shape, g.init));
      if (g.bias) egate_b_ids_.push_back(add("egate.b" + suffix, {shape[1]}, ops::InitScheme::kZeros));
    }
  }
  if (spec_.has_deep_part()) {
    std::size_t width = f * k;
    for (std::size_t l = 0; l < spec_.hidden_widths.size(); ++l) {
      const std::size_t next = spec_.hidden_widths[l];
      const std::string prefix = "mlp.l" + std::to_string(l + 1);
      mlp_w_ids_.push_back(add(prefix + ".W", {next, width}, ops::InitScheme::kGlorotUniform));
      mlp_b_ids_.push_back(add(prefix + ".b", {next}, ops::InitScheme::kZeros));
      if (spec_.hidden_gate) {
        hgate_ids_.push_back(add("hgate.l" + std::to_string(l + 1) + ".W", {next, next},
                                 spec_.hidden_gate->init));
      }
      width = next;
    }
    out_w_id_ = add("out.W", {1, width}, ops::InitScheme::kGlorotUniform);
    out_b_id_ = add("out.b", {1}, ops::InitScheme::kZeros);
  }
}

std::vector<const Tensor*> Model::values(const std::vector<std::size_t>& ids) const {
  std::vector<const Tensor*> out;
  for (auto id : ids) out.push_back(&params_[id].value);
  return out;
}

std::vector<Tensor*> Model::grads(const std::vector<std::size_t>& ids) {
  std::vector<Tensor*> out;
  for (auto id : ids) out.push_back(&params_[id].grad);
  return out;
}

ForwardPass Model::forward(const EncodedBatch& batch, Rng* rng, bool training) const {
  const std::size_t f = num_fields();
  const std::size_t k = spec_.k;
  const std::size_t n = batch.size();
  if (batch.num_fields != f) {
    throw DataError("batch has " + std::to_string(batch.num_fields) +
                    " fields, model expects " + std::to_string(f));
  }
  if (n == 0) throw DataError("empty batch");
  if (training && spec_.dropout > 0.0 && spec_.has_deep_part() && rng == nullptr) {
    throw ConfigError("training with dropout requires an rng");
  }

  ForwardPass pass;
  pass.batch = batch;
  const auto tables = values(embed_ids_);
  pass.embeddings = gates::embed_lookup(batch, tables);
  if (spec_.embed_gate) {
    const auto w = values(egate_w_ids_);
    const auto b = values(egate_b_ids_);
    pass.gated = gates::feature_gate_forward(pass.embeddings, {w, b}, *spec_.embed_gate, f,
                                             pass.embed_gate);
  } else {
    pass.gated = pass.embeddings;
  }

  pass.fm_logit = Tensor({n});
  if (spec_.has_fm_part()) {
    pass.fm_sum = Tensor({n, k});
    const double bias = params_[*fm_bias_id_].value[0];
    for (std::size_t r = 0; r < n; ++r) {
      const auto* idx = batch.row(r);
      double linear = 0.0;
      for (std::size_t i = 0; i < f; ++i) linear += params_[linear_ids_[i]].value[idx[i]];
      const double* ge = pass.gated.raw() + r * f * k;
      double* sum = pass.fm_sum.raw() + r * k;
      double sq = 0.0;
      for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
          sum[l] += ge[i * k + l];
          sq += ge[i * k + l] * ge[i * k + l];
        }
      }
      double total = 0.0;
      for (std::size_t l = 0; l < k; ++l) total += sum[l] * sum[l];
      pass.fm_logit[r] = bias + linear + 0.5 * (total - sq);
    }
  }

  pass.deep_logit = Tensor({n});
  if (spec_.has_deep_part()) {
    Tensor a = pass.gated;
    pass.layers.resize(spec_.hidden_widths.size());
    for (std::size_t l = 0; l < spec_.hidden_widths.size(); ++l) {
      auto& cache = pass.layers[l];
      a = gates::mlp_layer_forward(a, params_[mlp_w_ids_[l]].value,
                                   params_[mlp_b_ids_[l]].value, spec_.hidden_activation,
                                   cache.dense);
      if (spec_.hidden_gate) {
        a = gates::hidden_gate_forward(a, params_[hgate_ids_[l]].value,
                                       spec_.hidden_gate->activation, cache.gate);
      }
      if (training && spec_.dropout > 0.0) {
        auto dropped = ops::dropout(a, spec_.dropout, *rng, training);
        a = std::move(dropped.out);
        cache.dropout_mask = std::move(dropped.mask);
      }
    }
    pass.deep_top = a;
    const Tensor out = ops::dense_affine(a, params_[*out_w_id_].value, params_[*out_b_id_].value);
    for (std::size_t r = 0; r < n; ++r) pass.deep_logit[r] = out[r];
  }

  pass.logit = Tensor({n});
  for (std::size_t r = 0; r < n; ++r) pass.logit[r] = pass.fm_logit[r] + pass.deep_logit[r];
  require_finite(pass.logit, "model logits");
  return pass;
}

void Model::backward(const ForwardPass& pass, const Tensor& dlogit) {
  const std::size_t f = num_fields();
  const std::size_t k = spec_.k;
  const std::size_t n = pass.batch.size();
  if (dlogit.size() != n) {
    throw ShapeError("backward: upstream gradient " + shape_string(dlogit.shape()) +
                     " does not match batch of " + std::to_string(n));
  }
  Tensor dgated({n, f * k});

  if (spec_.has_fm_part()) {
    Tensor& dbias = params_[*fm_bias_id_].grad;
    for (std::size_t r = 0; r < n; ++r) {
      const double g = dlogit[r];
      dbias[0] += g;
      const auto* idx = pass.batch.row(r);
      for (std::size_t i = 0; i < f; ++i) params_[linear_ids_[i]].grad[idx[i]] += g;
      // d/d ge_i of ½(‖S‖² − Σ‖ge‖²) is S − ge_i.
      const double* ge = pass.gated.raw() + r * f * k;
      const double* sum = pass.fm_sum.raw() + r * k;
      double* d = dgated.raw() + r * f * k;
      for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t l = 0; l < k; ++l) d[i * k + l] += g * (sum[l] - ge[i * k + l]);
      }
    }
  }

  if (spec_.has_deep_part()) {
    const Tensor dy = dlogit.reshaped({n, 1});
    Tensor da = ops::dense_affine_backward(dy, pass.deep_top, params_[*out_w_id_].value,
                                           params_[*out_w_id_].grad, params_[*out_b_id_].grad);
    for (std::size_t l = spec_.hidden_widths.size(); l-- > 0;) {
      const auto& cache = pass.layers[l];
      da = ops::dropout_backward(da, cache.dropout_mask);
      if (spec_.hidden_gate) {
        da = gates::hidden_gate_backward(da, params_[hgate_ids_[l]].value,
                                         params_[hgate_ids_[l]].grad,
                                         spec_.hidden_gate->activation, cache.gate);
      }
      da = gates::mlp_layer_backward(da, params_[mlp_w_ids_[l]].value, params_[mlp_w_ids_[l]].grad,
                                     params_[mlp_b_ids_[l]].grad, spec_.hidden_activation,
                                     cache.dense);
    }
    for (std::size_t i = 0; i < dgated.size(); ++i) dgated[i] += da[i];
  }

  Tensor dE;
  if (spec_.embed_gate) {
    const auto w = values(egate_w_ids_);
    const auto b = values(egate_b_ids_);
    const auto dw = grads(egate_w_ids_);
    const auto db = grads(egate_b_ids_);
    dE = gates::feature_gate_backward(dgated, pass.embeddings, {w, b}, {dw, db},
                                      *spec_.embed_gate, f, pass.embed_gate);
  } else {
    dE = std::move(dgated);
  }
  const auto table_grads = grads(embed_ids_);
  gates::embed_lookup_backward(pass.batch, dE, table_grads);
}

double Model::loss_and_grad(const EncodedBatch& batch, Rng* rng, bool training) {
  const ForwardPass pass = forward(batch, rng, training);
  const std::size_t n = batch.size();
  std::vector<double> probs(n);
  Tensor dlogit({n});
  for (std::size_t r = 0; r < n; ++r) {
    probs[r] = gatenet::predict(pass.logit[r]);
    dlogit[r] = (probs[r] - batch.labels[r]) / static_cast<double>(n);
  }
  const double loss = cross_entropy(probs, batch.labels);
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
  backward(pass, dlogit);
  return loss;
}

double Model::loss(const EncodedBatch& batch, Rng* rng, bool training) const {
  const ForwardPass pass = forward(batch, rng, training);
  std::vector<double> probs(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) probs[r] = gatenet::predict(pass.logit[r]);
  return cross_entropy(probs, batch.labels);
}

std::vector<double> Model::predict(const EncodedBatch& batch) const {
  const ForwardPass pass = forward(batch, nullptr, false);
  std::vector<double> probs(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) probs[r] = gatenet::predict(pass.logit[r]);
  return probs;
}

std::vector<std::string> Model::gate_param_names() const {
  std::vector<std::string> names;
  for (auto id : egate_w_ids_) names.push_back(params_[id].name);
  for (auto id : egate_b_ids_) names.push_back(params_[id].name);
  for (auto id : hgate_ids_) names.push_back(params_[id].name);
  return names;
}

double fm_interaction(std::span<const double> embeddings, std::size_t k) {
  if (k == 0 || embeddings.size() % k != 0) {
    throw ShapeError("fm_interaction: " + std::to_string(embeddings.size()) +
                     " values are not a multiple of k=" + std::to_string(k));
  }
  const std::size_t f = embeddings.size() / k;
  double total = 0.0;
  double squares = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
      const double v = embeddings[i * k + l];
      sum += v;
      squares += v * v;
    }
    total += sum * sum;
  }
  return 0.5 * (total - squares);
}

double predict(double logit) { return ops::activate(logit, ops::Activation::kSigmoid); }

double cross_entropy(std::span<const double> predictions, std::span<const double> labels) {
  return metrics::logloss(predictions, labels);
}

}  // namespace gatenet
