#include "gatenet/trainer.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "gatenet/error.hpp"

namespace gatenet {

AdamState AdamState::for_params(const ParamStore& params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params.all()) {
    state.m.emplace_back(p.value.shape());
    state.v.emplace_back(p.value.shape());
  }
  return state;
}

void adam_step(ParamStore& params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam state tracks " + std::to_string(state.m.size()) +
                     " tensors, store has " + std::to_string(params.size()));
  }
  for (const auto& p : params.all()) require_finite(p.grad, "gradient of " + p.name);

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p.value[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
    p.grad.fill(0.0);
  }
}

void TrainReport::write_csv(std::ostream& out, bool include_time) const {
  out << "epoch,train_loss,test_auc,test_logloss,seconds\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return std::string(buf);
  };
  for (const auto& e : epochs) {
    out << e.epoch << ',' << fmt(e.train_loss) << ',';
    if (e.test_auc) out << fmt(*e.test_auc);
    out << ',';
    if (std::isfinite(e.test_logloss)) out << fmt(e.test_logloss);
    out << ',';
    if (include_time) {
      std::snprintf(buf, sizeof buf, "%.3f", e.seconds);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<double> predict_all(const Model& model, const Dataset& data,
                                std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& batch : batches(data, batch_size, std::nullopt)) {
    const auto probs = model.predict(batch);
    out.insert(out.end(), probs.begin(), probs.end());
  }
  return out;
}

EvalResult evaluate(const Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw DataError("cannot evaluate on an empty dataset");
  const auto probs = predict_all(model, data, batch_size);
  std::vector<double> labels(data.labels().begin(), data.labels().end());
  return metrics::evaluate(probs, labels);
}

TrainResult train(const ModelSpec& spec, const std::vector<std::size_t>& cardinalities,
                  const Dataset& train_data, const Dataset& test_data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.epochs > 0 && train_data.empty()) {
    throw DataError("training set is empty");
  }
  train_data.validate(cardinalities);
  if (!test_data.empty()) test_data.validate(cardinalities);

  TrainResult result{Model(spec, cardinalities, config.seed), AdamState{}, TrainReport{}};
  result.adam = AdamState::for_params(result.model.params(), config.adam);
  const Rng root(config.seed);
  Rng dropout_rng = root.derive("dropout");
  double best_logloss = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t shuffle_seed =
        root.derive("shuffle.epoch" + std::to_string(epoch)).next_u64();
    double loss_sum = 0.0;
    for (const auto& batch : batches(train_data, config.batch_size, shuffle_seed)) {
      const double loss = result.model.loss_and_grad(batch, &dropout_rng, true);
      loss_sum += loss * static_cast<double>(batch.size());
      adam_step(result.model.params(), result.adam);
    }

    EpochReport row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train_data.size());
    row.test_logloss = std::numeric_limits<double>::quiet_NaN();
    if (!test_data.empty()) {
      const EvalResult eval = evaluate(result.model, test_data, config.eval_batch_size);
      row.test_auc = eval.auc;
      row.test_logloss = eval.logloss;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report.epochs.push_back(row);
    if (on_epoch) on_epoch(row);

    if (config.early_stop && std::isfinite(row.test_logloss)) {
      if (row.test_logloss >= best_logloss) break;
      best_logloss = row.test_logloss;
    }
  }
  return result;
}

namespace {

constexpr char kMagic[8] = {'G', 'A', 'T', 'E', 'C', 'K', 'P', 'T'};

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_ += s;
  }
  void tensor(const Tensor& t) {
    u64(t.rank());
    for (auto d : t.shape()) u64(d);
    for (double v : t.data()) f64(v);
  }
  void raw(const char* data, std::size_t n) { out_.append(data, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : in_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    const auto rank = u64();
    if (rank > 8) throw CheckpointError("checkpoint tensor has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = u64();
    const std::size_t n = shape_size(shape);
    need(n * 8);
    std::vector<double> data(n);
    for (auto& v : data) v = f64();
    return Tensor(std::move(shape), std::move(data));
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw CheckpointError("checkpoint ends unexpectedly");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Model& model, const AdamState& adam,
                              const std::string& schema) {
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(model.spec().to_text());
  w.str(schema);
  w.u64(model.cardinalities().size());
  for (auto c : model.cardinalities()) w.u64(c);
  const auto& params = model.params();
  w.u64(params.size());
  for (const auto& p : params.all()) {
    w.str(p.name);
    w.tensor(p.value);
  }
  w.f64(adam.config.learning_rate);
  w.f64(adam.config.beta1);
  w.f64(adam.config.beta2);
  w.f64(adam.config.epsilon);
  w.u64(adam.step);
  w.u64(adam.m.size());
  for (std::size_t i = 0; i < adam.m.size(); ++i) {
    w.tensor(adam.m[i]);
    w.tensor(adam.v[i]);
  }
  const std::uint64_t checksum = fnv1a64(w.bytes());
  w.u64(checksum);
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 + 8) throw CheckpointError("checkpoint is truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::string_view body(bytes.data(), bytes.size() - 8);
  ByteReader tail(std::string_view(bytes).substr(bytes.size() - 8));
  if (tail.u64() != fnv1a64(body)) {
    throw CheckpointError("checkpoint checksum mismatch (file is corrupt or truncated)");
  }
  ByteReader r(body);
  r.take(sizeof kMagic);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.spec = ModelSpec::parse(r.str());
  ckpt.schema = r.str();
  ckpt.cardinalities.resize(r.u64());
  for (auto& c : ckpt.cardinalities) c = r.u64();
  const auto n_tensors = r.u64();
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    ckpt.tensors.emplace_back(std::move(name), r.tensor());
  }
  ckpt.adam.config.learning_rate = r.f64();
  ckpt.adam.config.beta1 = r.f64();
  ckpt.adam.config.beta2 = r.f64();
  ckpt.adam.config.epsilon = r.f64();
  ckpt.adam.step = r.u64();
  const auto n_moments = r.u64();
  for (std::uint64_t i = 0; i < n_moments; ++i) {
    ckpt.adam.m.push_back(r.tensor());
    ckpt.adam.v.push_back(r.tensor());
  }
  if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");
  return ckpt;
}

void save_checkpoint(const Model& model, const AdamState& adam, const std::string& schema,
                     const std::string& path) {
  const std::string bytes = encode_checkpoint(model, adam, schema);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

Checkpoint load_checkpoint(const std::string& path, const ModelSpec& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  const auto diff = spec_diff(expected, ckpt.spec);
  if (!diff.empty()) {
    std::string msg = "checkpoint was trained with a different model spec:";
    for (const auto& d : diff) msg += "\n  " + d;
    throw CheckpointError(msg);
  }
  return ckpt;
}

Model restore_model(const Checkpoint& checkpoint) {
  Model model(checkpoint.spec, checkpoint.cardinalities, 0);
  auto& params = model.params();
  if (params.size() != checkpoint.tensors.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, tensor] = checkpoint.tensors[i];
    if (params[i].name != name || params[i].value.shape() != tensor.shape()) {
      throw CheckpointError("checkpoint tensor '" + name + "' " + shape_string(tensor.shape()) +
                            " does not match model tensor '" + params[i].name + "' " +
                            shape_string(params[i].value.shape()));
    }
    params[i].value = tensor;
  }
  return model;
}

}  // namespace gatenet
