#include <doctest.h>

#include <cmath>
#include <vector>

#include "gatenet/error.hpp"
#include "gatenet/gates.hpp"

using namespace gatenet;
using ops::Activation;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

GateConfig gate(GateSharing sharing, GateGranularity gran, Activation act = Activation::kSigmoid) {
  GateConfig g;
  g.sharing = sharing;
  g.granularity = gran;
  g.activation = act;
  return g;
}

Tensor gate_forward(const Tensor& E, const std::vector<Tensor>& W, const GateConfig& config,
                    std::size_t f) {
  std::vector<const Tensor*> ws;
  for (const auto& w : W) ws.push_back(&w);
  gates::FeatureGateCache cache;
  return gates::feature_gate_forward(E, {ws, {}}, config, f, cache);
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("gate shapes and parameter counts") {
  using G = GateGranularity;
  using S = GateSharing;
  CHECK(gate_weight_shape(gate(S::kFieldPrivate, G::kVectorWise), 10) == Shape{10, 1});
  CHECK(gate_weight_shape(gate(S::kFieldPrivate, G::kBitWise), 10) == Shape{10, 10});
  CHECK(gate_tensor_count(gate(S::kFieldPrivate, G::kBitWise), 26) == 26);
  CHECK(gate_tensor_count(gate(S::kFieldShared, G::kBitWise), 26) == 1);
  CHECK(gate_param_count(gate(S::kFieldPrivate, G::kVectorWise), 26, 10) == 260);
  CHECK(gate_param_count(gate(S::kFieldPrivate, G::kBitWise), 26, 10) == 2600);
  CHECK(gate_param_count(gate(S::kFieldShared, G::kVectorWise), 26, 10) == 10);
  CHECK(gate_param_count(gate(S::kFieldShared, G::kBitWise), 26, 10) == 100);
}

TEST_CASE("gate mode names parse") {
  CHECK(parse_sharing("shared") == GateSharing::kFieldShared);
  CHECK(parse_sharing("field_private") == GateSharing::kFieldPrivate);
  CHECK(parse_granularity("bit_wise") == GateGranularity::kBitWise);
  CHECK(parse_granularity("vector") == GateGranularity::kVectorWise);
  CHECK_THROWS_AS(parse_granularity("row"), ConfigError);
}

TEST_CASE("gate_value examples") {
  const Tensor e = Tensor::vec({1, -1});
  const Tensor zv({2, 1}, 0.0);
  const Tensor zb({2, 2}, 0.0);
  const Tensor gv = gates::gate_value(e, zv, nullptr, Activation::kSigmoid);
  REQUIRE(gv.size() == 1);
  CHECK(gv[0] == 0.5);
  const Tensor gb = gates::gate_value(e, zb, nullptr, Activation::kSigmoid);
  CHECK(gb == Tensor({2}, 0.5));
  const Tensor w({2, 1}, std::vector<double>{0.5, 0.5});
  CHECK(gates::gate_value(e, w, nullptr, Activation::kLinear)[0] == 0.0);
  CHECK_THROWS_AS(gates::gate_value(e, Tensor({3, 1}), nullptr, Activation::kLinear), ShapeError);
}

TEST_CASE("embedding lookup") {
  const Tensor zero({4, 3}, 0.0);
  Rng rng(1);
  const Tensor t1 = random_tensor({5, 3}, rng);
  Dataset d(2);
  const std::uint32_t r1[2] = {0, 2};
  const std::uint32_t r2[2] = {3, 2};
  d.push_back(r1, 0);
  d.push_back(r2, 1);
  const EncodedBatch batch = make_batch(d);
  const Tensor* tables[2] = {&zero, &t1};
  const Tensor E = gates::embed_lookup(batch, tables);
  REQUIRE(E.shape() == Shape{2, 6});
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(E.at(0, c) == 0.0);
    CHECK(E.at(0, 3 + c) == E.at(1, 3 + c));
    CHECK(E.at(0, 3 + c) == t1.at(2, c));
  }

  Tensor g0({4, 3});
  Tensor g1({5, 3});
  Tensor* grads[2] = {&g0, &g1};
  gates::embed_lookup_backward(batch, Tensor({2, 6}, 1.0), grads);
  CHECK(g1.at(2, 0) == 2.0);
  CHECK(g1.at(1, 0) == 0.0);
  CHECK(g0.at(3, 1) == 1.0);

  Dataset bad(2);
  const std::uint32_t r3[2] = {4, 0};
  bad.push_back(r3, 0);
  CHECK_THROWS_AS(gates::embed_lookup(make_batch(bad), tables), DataError);
}

TEST_CASE("feature gate forward examples") {
  Rng rng(2);
  const std::size_t f = 3;
  const std::size_t k = 4;
  const Tensor E = random_tensor({5, f * k}, rng);
  for (auto sharing : {GateSharing::kFieldPrivate, GateSharing::kFieldShared}) {
    for (auto gran : {GateGranularity::kVectorWise, GateGranularity::kBitWise}) {
      const GateConfig sig = gate(sharing, gran);
      std::vector<Tensor> zeros(gate_tensor_count(sig, f), Tensor(gate_weight_shape(sig, k), 0.0));
      const Tensor half = gate_forward(E, zeros, sig, f);
      for (std::size_t i = 0; i < E.size(); ++i) CHECK(half[i] == 0.5 * E[i]);

      const GateConfig one = gate(sharing, gran, Activation::kConstantOne);
      std::vector<Tensor> ws;
      for (std::size_t i = 0; i < gate_tensor_count(one, f); ++i) ws.push_back(random_tensor(gate_weight_shape(one, k), rng));
      CHECK(gate_forward(E, ws, one, f) == E);
    }
  }
}

TEST_CASE("vector-wise gating equals bit-wise gating with a constant gate vector") {
  Rng rng(3);
  const std::size_t f = 2;
  const std::size_t k = 3;
  const Tensor E = random_tensor({4, f * k}, rng);
  std::vector<Tensor> vec;
  std::vector<Tensor> bit;
  for (std::size_t i = 0; i < f; ++i) {
    vec.push_back(random_tensor({k, 1}, rng));
    Tensor b({k, k});
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) b.at(r, c) = vec.back()[r];
    }
    bit.push_back(b);
  }
  const Tensor a = gate_forward(E, vec, gate(GateSharing::kFieldPrivate, GateGranularity::kVectorWise), f);
  const Tensor b = gate_forward(E, bit, gate(GateSharing::kFieldPrivate, GateGranularity::kBitWise), f);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("shared gate with one field equals private gate") {
  Rng rng(4);
  const Tensor E = random_tensor({3, 5}, rng);
  const std::vector<Tensor> w{random_tensor({5, 5}, rng)};
  CHECK(gate_forward(E, w, gate(GateSharing::kFieldShared, GateGranularity::kBitWise), 1) ==
        gate_forward(E, w, gate(GateSharing::kFieldPrivate, GateGranularity::kBitWise), 1));
}

TEST_CASE("feature gate backward matches finite differences") {
  Rng rng(6);
  const std::size_t f = 3;
  const std::size_t k = 2;
  for (auto act : {Activation::kSigmoid, Activation::kTanh, Activation::kLinear}) {
    for (auto gran : {GateGranularity::kVectorWise, GateGranularity::kBitWise}) {
      for (auto sharing : {GateSharing::kFieldPrivate, GateSharing::kFieldShared}) {
        GateConfig config = gate(sharing, gran, act);
        config.bias = true;
        const std::size_t n = gate_tensor_count(config, f);
        const std::size_t out = gran == GateGranularity::kBitWise ? k : 1;
        Tensor E = random_tensor({4, f * k}, rng);
        const Tensor C = random_tensor({4, f * k}, rng);
        std::vector<Tensor> W;
        std::vector<Tensor> B;
        for (std::size_t i = 0; i < n; ++i) {
          W.push_back(random_tensor(gate_weight_shape(config, k), rng));
          B.push_back(random_tensor({out}, rng));
        }
        auto loss = [&]() {
          std::vector<const Tensor*> ws;
          std::vector<const Tensor*> bs;
          for (std::size_t i = 0; i < n; ++i) {
            ws.push_back(&W[i]);
            bs.push_back(&B[i]);
          }
          gates::FeatureGateCache cache;
          return dot(gates::feature_gate_forward(E, {ws, bs}, config, f, cache), C);
        };
        std::vector<const Tensor*> ws;
        std::vector<const Tensor*> bs;
        std::vector<Tensor> dW;
        std::vector<Tensor> dB;
        for (std::size_t i = 0; i < n; ++i) {
          ws.push_back(&W[i]);
          bs.push_back(&B[i]);
          dW.emplace_back(W[i].shape());
          dB.emplace_back(B[i].shape());
        }
        std::vector<Tensor*> dws;
        std::vector<Tensor*> dbs;
        for (std::size_t i = 0; i < n; ++i) {
          dws.push_back(&dW[i]);
          dbs.push_back(&dB[i]);
        }
        gates::FeatureGateCache cache;
        gates::feature_gate_forward(E, {ws, bs}, config, f, cache);
        const Tensor dE = gates::feature_gate_backward(C, E, {ws, bs}, {dws, dbs}, config, f, cache);

        auto probe = [&](Tensor& t, const Tensor& analytic) {
          for (std::size_t i = 0; i < t.size(); ++i) {
            const double keep = t[i];
            t[i] = keep + 1e-5;
            const double up = loss();
            t[i] = keep - 1e-5;
            const double down = loss();
            t[i] = keep;
            const double num = (up - down) / 2e-5;
            CHECK(std::abs(num - analytic[i]) / std::max({std::abs(num), std::abs(analytic[i]), 1e-8}) < 1e-4);
          }
        };
        probe(E, dE);
        for (std::size_t i = 0; i < n; ++i) {
          probe(W[i], dW[i]);
          probe(B[i], dB[i]);
        }
      }
    }
  }
}

TEST_CASE("mlp layer examples") {
  gates::DenseLayerCache cache;
  const Tensor x = Tensor::vec({3, -4});
  const Tensor id = Tensor::mat(2, 2, {1, 0, 0, 1});
  CHECK(gates::mlp_layer_forward(x, id, Tensor({2}, 0.0), Activation::kLinear, cache) == x);
  CHECK(gates::mlp_layer_forward(x, id, Tensor({2}, 0.0), Activation::kRelu, cache) == Tensor::vec({3, 0}));
}

TEST_CASE("hidden gate examples") {
  gates::HiddenGateCache cache;
  const Tensor a = Tensor::vec({1, 2});
  const Tensor zero({2, 2}, 0.0);
  CHECK(gates::hidden_gate_forward(a, zero, Activation::kTanh, cache) == Tensor::vec({0, 0}));
  CHECK(gates::hidden_gate_forward(a, zero, Activation::kSigmoid, cache) == Tensor::vec({0.5, 1.0}));
  Rng rng(1);
  const Tensor w = random_tensor({2, 2}, rng);
  CHECK(gates::hidden_gate_forward(a, w, Activation::kConstantOne, cache) == a);
  CHECK_THROWS_AS(gates::hidden_gate_forward(a, Tensor({2, 3}), Activation::kTanh, cache), ShapeError);
}

TEST_CASE("hidden gate backward matches finite differences") {
  Rng rng(12);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor W = random_tensor({4, 4}, rng);
  const Tensor C = random_tensor({3, 4}, rng);
  for (auto act : {Activation::kTanh, Activation::kSigmoid, Activation::kLinear}) {
    auto loss = [&]() {
      gates::HiddenGateCache c;
      return dot(gates::hidden_gate_forward(a, W, act, c), C);
    };
    gates::HiddenGateCache cache;
    gates::hidden_gate_forward(a, W, act, cache);
    Tensor dW(W.shape());
    const Tensor da = gates::hidden_gate_backward(C, W, dW, act, cache);
    auto probe = [&](Tensor& t, const Tensor& analytic) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double keep = t[i];
        t[i] = keep + 1e-5;
        const double up = loss();
        t[i] = keep - 1e-5;
        const double down = loss();
        t[i] = keep;
        const double num = (up - down) / 2e-5;
        CHECK(std::abs(num - analytic[i]) / std::max({std::abs(num), std::abs(analytic[i]), 1e-8}) < 1e-4);
      }
    };
    probe(a, da);
    probe(W, dW);
  }
}
