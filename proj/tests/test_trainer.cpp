#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gatenet/error.hpp"
#include "gatenet/trainer.hpp"

using namespace gatenet;
namespace fs = std::filesystem;

namespace {

ModelSpec small(Family family) {
  ModelSpec s;
  s.family = family;
  s.k = 4;
  s.hidden_widths = {8, 8};
  s.dropout = 0.2;
  return s;
}

// Two fields; the label is 1 exactly when the first field's token is odd.
Dataset separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d(2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t row[2] = {static_cast<std::uint32_t>(1 + rng.uniform_int(6)),
                                  static_cast<std::uint32_t>(1 + rng.uniform_int(6))};
    d.push_back(row, static_cast<int>(row[0] % 2));
  }
  return d;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gatenet_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("adam first step moves every parameter by about the learning rate") {
  ParamStore params;
  params.add("w", Tensor({3}, std::vector<double>{0.5, -1.0, 2.0}));
  AdamConfig config;
  config.learning_rate = 1e-3;
  AdamState state = AdamState::for_params(params, config);
  params.at("w").grad.fill(1.0);
  adam_step(params, state);
  const std::vector<double> before{0.5, -1.0, 2.0};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs((before[i] - params.at("w").value[i]) - 1e-3) < 1e-6 * 1e-3 + 1e-12);
    CHECK(params.at("w").grad[i] == 0.0);
  }
  CHECK(state.step == 1);
}

TEST_CASE("adam with zero gradient or zero learning rate is a no-op") {
  ParamStore params;
  params.add("w", Tensor({2}, std::vector<double>{1.0, 2.0}));
  const Tensor start = params.at("w").value;
  AdamState state = AdamState::for_params(params, AdamConfig{});
  adam_step(params, state);
  CHECK(params.at("w").value == start);

  AdamConfig frozen;
  frozen.learning_rate = 0.0;
  AdamState s2 = AdamState::for_params(params, frozen);
  params.at("w").grad.fill(3.0);
  adam_step(params, s2);
  CHECK(params.at("w").value == start);
}

TEST_CASE("adam rejects non-finite gradients by name") {
  ParamStore params;
  params.add("layer.W", Tensor({2}, 0.0));
  AdamState state = AdamState::for_params(params, AdamConfig{});
  params.at("layer.W").grad[1] = INFINITY;
  try {
    adam_step(params, state);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer.W") != std::string::npos);
  }
  CHECK(params.at("layer.W").value[0] == 0.0);
}

TEST_CASE("training loss decreases on separable data") {
  const Dataset data = separable(2000, 1);
  TrainConfig config;
  config.epochs = 5;
  config.batch_size = 100;
  config.adam.learning_rate = 3e-3;
  const auto result = train(small(Family::kDNN), {7, 7}, data, data, config);
  REQUIRE(result.report.epochs.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) {
    CHECK(result.report.epochs[e].train_loss < result.report.epochs[e - 1].train_loss);
  }
  CHECK(*result.report.epochs.back().test_auc > 0.95);
}

TEST_CASE("zero epochs leaves the initialization") {
  const Dataset data = separable(50, 2);
  TrainConfig config;
  config.epochs = 0;
  const auto result = train(small(Family::kFM), {7, 7}, data, data, config);
  CHECK(result.report.epochs.empty());
  const Model init(small(Family::kFM), {7, 7}, config.seed);
  for (const auto& p : init.params().all()) CHECK(result.model.params().at(p.name).value == p.value);
}

TEST_CASE("training is deterministic") {
  const Dataset data = separable(600, 3);
  TrainConfig config;
  config.epochs = 2;
  config.batch_size = 64;
  ModelSpec spec = small(Family::kDeepFM);
  spec.embed_gate = GateConfig{};
  spec.hidden_gate = HiddenGateConfig{};
  const auto a = train(spec, {7, 7}, data, data, config);
  const auto b = train(spec, {7, 7}, data, data, config);
  for (const auto& p : a.model.params().all()) CHECK(b.model.params().at(p.name).value == p.value);
  std::ostringstream ra;
  std::ostringstream rb;
  a.report.write_csv(ra, false);
  b.report.write_csv(rb, false);
  CHECK(ra.str() == rb.str());
  CHECK(ra.str().rfind("epoch,train_loss,test_auc,test_logloss,seconds\n", 0) == 0);
}

TEST_CASE("planted signal is learnable") {
  const PlantedData planted = synthesize_planted(5, 2, 8000, 4);
  auto [tr, te] = split(planted.data, 0.9, 4);
  TrainConfig config;
  config.epochs = 3;
  config.batch_size = 128;
  config.adam.learning_rate = 1e-3;
  const auto result = train(small(Family::kDNN), planted.cardinalities, tr, te, config);
  CHECK(*result.report.epochs.back().test_auc > 0.55);
}

TEST_CASE("checkpoint round trip is bitwise") {
  const Dataset data = separable(300, 5);
  TrainConfig config;
  config.epochs = 1;
  config.batch_size = 50;
  ModelSpec spec = small(Family::kDeepFM);
  spec.embed_gate = GateConfig{};
  const auto result = train(spec, {7, 7}, data, data, config);
  const fs::path dir = scratch("ckpt");
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(result.model, result.adam, "c1:cat,c2:cat", path);

  const Checkpoint ck = load_checkpoint(path, spec);
  CHECK(ck.spec == spec);
  CHECK(ck.schema == "c1:cat,c2:cat");
  CHECK(ck.adam.step == result.adam.step);
  const Model restored = restore_model(ck);
  for (const auto& p : result.model.params().all()) CHECK(restored.params().at(p.name).value == p.value);
  for (std::size_t i = 0; i < ck.adam.m.size(); ++i) {
    CHECK(ck.adam.m[i] == result.adam.m[i]);
    CHECK(ck.adam.v[i] == result.adam.v[i]);
  }
  CHECK(encode_checkpoint(restored, ck.adam, ck.schema) == encode_checkpoint(result.model, result.adam, ck.schema));
}

TEST_CASE("damaged checkpoints are refused") {
  const Model m(small(Family::kFM), {3, 3}, 1);
  const AdamState adam = AdamState::for_params(m.params(), AdamConfig{});
  const std::string bytes = encode_checkpoint(m, adam, "c1:cat,c2:cat");
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 9)), CheckpointError);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(decode_checkpoint(flipped), CheckpointError);
  std::string version = bytes;
  version[8] = 7;
  CHECK_THROWS_AS(decode_checkpoint(version), CheckpointError);
}

TEST_CASE("checkpoint from a different spec is refused with the difference") {
  const Model m(small(Family::kFM), {3, 3}, 1);
  const fs::path dir = scratch("spec");
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(m, AdamState::for_params(m.params(), AdamConfig{}), "c1:cat,c2:cat", path);
  ModelSpec other = small(Family::kFM);
  other.k = 6;
  try {
    load_checkpoint(path, other);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("k: expected 6, found 4") != std::string::npos);
  }
}
