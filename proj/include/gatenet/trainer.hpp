#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gatenet/data.hpp"
#include "gatenet/metrics.hpp"
#include "gatenet/model.hpp"

namespace gatenet {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments, one pair per parameter in store order.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState for_params(const ParamStore& params, AdamConfig config);
};

// One bias-corrected Adam update from the accumulated gradients, which are
// zeroed afterwards. A non-finite gradient throws NumericError naming the
// parameter before anything is modified.
void adam_step(ParamStore& params, AdamState& state);

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 1000;
  AdamConfig adam;
  std::uint64_t seed = 1;
  // Non-paper behavior: stop once test logloss fails to improve.
  bool early_stop = false;
  std::size_t eval_batch_size = 4096;
};

struct EpochReport {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> test_auc;
  double test_logloss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochReport> epochs;

  // `epoch,train_loss,test_auc,test_logloss,seconds`. Wall time is excluded
  // when include_time is false so that reports compare byte for byte.
  void write_csv(std::ostream& out, bool include_time = true) const;
};

struct TrainResult {
  Model model;
  AdamState adam;
  TrainReport report;
};

// Called after every epoch with the report row just appended.
using EpochCallback = std::function<void(const EpochReport&)>;

TrainResult train(const ModelSpec& spec, const std::vector<std::size_t>& cardinalities,
                  const Dataset& train_data, const Dataset& test_data,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

EvalResult evaluate(const Model& model, const Dataset& data, std::size_t batch_size = 4096);
std::vector<double> predict_all(const Model& model, const Dataset& data,
                                std::size_t batch_size = 4096);

// Binary checkpoint: magic, version, spec text, cardinalities, named tensors,
// Adam state, trailing FNV-1a checksum. All integers and doubles little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelSpec spec;
  std::string schema;  // FieldSchema::to_string() of the training data
  std::vector<std::size_t> cardinalities;
  std::vector<std::pair<std::string, Tensor>> tensors;
  AdamState adam;
};

std::string encode_checkpoint(const Model& model, const AdamState& adam,
                              const std::string& schema);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Model& model, const AdamState& adam, const std::string& schema,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
// Refuses with the spec differences listed when the stored spec differs.
Checkpoint load_checkpoint(const std::string& path, const ModelSpec& expected);

// Rebuilds a model from checkpoint tensors.
Model restore_model(const Checkpoint& checkpoint);

}  // namespace gatenet
