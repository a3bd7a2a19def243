// Copyright 2026 The HHF Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hhf/training.h"

#include <cmath>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "hhf/code_bounds.h"
#include "hhf/datasets.h"
#include "hhf/error.h"
#include "hhf/gradcheck.h"
#include "hhf/metrics.h"
#include "test_util.h"

namespace hhf {
namespace {

using testing::random_matrix;

EncoderConfig small_encoder(std::uint64_t seed = 7) {
  EncoderConfig e;
  e.input_dim = 6;
  e.hidden_dims = {10};
  e.hash_bits = 8;
  e.seed = seed;
  return e;
}

TrainConfig small_train() {
  TrainConfig t;
  t.epochs = 3;
  t.batch_size = 16;
  t.lr_encoder = 0.01;
  return t;
}

void expect_same_parameters(const TrainState& a, const TrainState& b) {
  ASSERT_EQ(a.layers.size(), b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    EXPECT_EQ(a.layers[i].weight.value, b.layers[i].weight.value);
    EXPECT_EQ(a.layers[i].bias.value, b.layers[i].bias.value);
    EXPECT_EQ(a.layers[i].weight.velocity, b.layers[i].weight.velocity);
    EXPECT_EQ(a.layers[i].bias.velocity, b.layers[i].bias.velocity);
  }
  EXPECT_EQ(a.proxies.proxies.value, b.proxies.proxies.value);
  EXPECT_EQ(a.proxies.proxies.velocity, b.proxies.proxies.velocity);
}

TEST(Config, Validation) {
  EncoderConfig e = small_encoder();
  EXPECT_NO_THROW(e.validate());
  e.hash_bits = 0;
  EXPECT_THROW(e.validate(), ArgumentError);
  e = small_encoder();
  e.hidden_dims = {0};
  EXPECT_THROW(e.validate(), ArgumentError);
  TrainConfig t;
  EXPECT_NO_THROW(t.validate());
  t.lr_decay_factor = 1.5;
  EXPECT_THROW(t.validate(), ArgumentError);
  t = TrainConfig{};
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), ArgumentError);
  t = TrainConfig{};
  t.lr_encoder = -1.0;
  EXPECT_THROW(t.validate(), ArgumentError);
}

TEST(Config, LossKindNames) {
  for (LossKind k : {LossKind::kProxyAnchor, LossKind::kProxyNca,
                     LossKind::kDhn, LossKind::kQuantization}) {
    EXPECT_EQ(parse_loss_kind(loss_kind_name(k)), k);
  }
  EXPECT_EQ(parse_loss_kind("pa"), LossKind::kProxyAnchor);
  EXPECT_EQ(parse_loss_kind("nca"), LossKind::kProxyNca);
  EXPECT_THROW(parse_loss_kind("triplet"), ArgumentError);
}

TEST(InitState, DeterministicPerSeed) {
  const TrainState a = init_state(small_encoder(), small_train(), 4);
  const TrainState b = init_state(small_encoder(), small_train(), 4);
  expect_same_parameters(a, b);
  const TrainState c = init_state(small_encoder(8), small_train(), 4);
  EXPECT_NE(a.layers[0].weight.value, c.layers[0].weight.value);
}

TEST(InitState, XavierRangeAndProxyNorms) {
  const TrainState s = init_state(small_encoder(), small_train(), 5);
  ASSERT_EQ(s.layers.size(), 2u);
  for (const DenseLayer& l : s.layers) {
    const double fan =
        static_cast<double>(l.weight.value.rows() + l.weight.value.cols());
    const double limit = std::sqrt(6.0 / fan);
    for (double w : l.weight.value.values()) EXPECT_LE(std::abs(w), limit);
    for (double b : l.bias.value.values()) EXPECT_EQ(b, 0.0);
  }
  ASSERT_EQ(s.proxies.num_classes(), 5u);
  for (std::size_t c = 0; c < 5; ++c) {
    double sq = 0.0;
    for (double v : s.proxies.proxies.value.row(c)) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq), std::sqrt(8.0), 1e-9);
  }
}

TEST(InitState, ResolvesZeta) {
  const TrainState s = init_state(small_encoder(), small_train(), 4);
  EXPECT_EQ(s.zeta, zeta(8, 4));
  TrainConfig t = small_train();
  t.loss.zeta = 0.25;
  EXPECT_EQ(init_state(small_encoder(), t, 4).zeta, 0.25);
}

TEST(Forward, ZeroWeightsGiveZeroLatents) {
  TrainState s = init_state(small_encoder(), small_train(), 3);
  for (DenseLayer& l : s.layers) l.weight.value.fill(0.0);
  std::mt19937_64 rng(1);
  const Matrix out = forward(s, random_matrix(5, 6, rng));
  ASSERT_EQ(out.rows(), 5u);
  ASSERT_EQ(out.cols(), 8u);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, RowIndependentAndFinite) {
  const TrainState s = init_state(small_encoder(), small_train(), 3);
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(2, 6, rng);
  Matrix first(1, 6);
  std::copy(x.row(0).begin(), x.row(0).end(), first.row(0).begin());
  const Matrix both = forward(s, x);
  const Matrix one = forward(s, first);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(both(0, k), one(0, k));
  for (int t = 0; t < 1000; ++t) {
    EXPECT_TRUE(forward(s, random_matrix(1, 6, rng, 10.0)).all_finite());
  }
  EXPECT_THROW(forward(s, Matrix(2, 5)), ShapeError);
}

TEST(LearningRate, ExactHalvingSchedule) {
  const TrainConfig t;
  for (int e = 0; e < 60; ++e) {
    EXPECT_EQ(learning_rate_at(0.001, t, e), 0.001 * std::ldexp(1.0, -(e / 10)))
        << "epoch " << e;
  }
}

TEST(SgdStep, UsesScheduledRateAndMomentum) {
  TrainConfig t = small_train();
  t.momentum = 0.9;
  t.weight_decay = 0.0;
  TrainState s = init_state(small_encoder(), t, 3);
  Parameter& b = s.layers[1].bias;
  const Matrix before = b.value;
  b.zero_grad();
  b.grad.fill(1.0);
  for (DenseLayer& l : s.layers) l.weight.zero_grad();
  s.layers[0].bias.zero_grad();
  s.proxies.proxies.zero_grad();
  sgd_step(s, 25);
  const double lr = learning_rate_at(t.lr_encoder, t, 25);
  EXPECT_EQ(lr, t.lr_encoder * 0.25);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(b.value.values()[i], before.values()[i] - lr * 1.0);
    EXPECT_EQ(b.velocity.values()[i], 1.0);
  }
  // Second step with the same gradient: v = 0.9 * 1 + 1.
  const Matrix mid = b.value;
  sgd_step(s, 25);
  for (std::size_t i = 0; i < mid.size(); ++i) {
    EXPECT_EQ(b.value.values()[i], mid.values()[i] - lr * 1.9);
  }
}

TEST(SgdStep, WeightDecayOnWeightsOnly) {
  TrainConfig t = small_train();
  t.weight_decay = 0.1;
  t.momentum = 0.0;
  TrainState s = init_state(small_encoder(), t, 3);
  s.layers[0].bias.value.fill(2.0);
  const TrainState before = s;
  for (DenseLayer& l : s.layers) {
    l.weight.zero_grad();
    l.bias.zero_grad();
  }
  s.proxies.proxies.zero_grad();
  sgd_step(s, 0);
  EXPECT_NE(s.layers[0].weight.value, before.layers[0].weight.value);
  EXPECT_EQ(s.layers[0].bias.value, before.layers[0].bias.value);
  EXPECT_EQ(s.proxies.proxies.value, before.proxies.proxies.value);
}

struct Data {
  Matrix x;
  std::vector<LabelSet> y;
};

Data small_data(std::uint64_t seed, std::size_t classes = 3) {
  const FeatureDataset d = synth_gaussian(classes, 20, 6, 5.0, 1.0, seed);
  return {d.features, d.labels};
}

TEST(Train, ZeroLearningRateFreezesParameters) {
  TrainConfig t = small_train();
  t.lr_encoder = 0.0;
  t.lr_proxy = 0.0;
  const TrainState init = init_state(small_encoder(), t, 3);
  const Data d = small_data(1);
  const TrainState out = train(init, d.x, d.y);
  for (std::size_t i = 0; i < init.layers.size(); ++i) {
    EXPECT_EQ(out.layers[i].weight.value, init.layers[i].weight.value);
    EXPECT_EQ(out.layers[i].bias.value, init.layers[i].bias.value);
  }
  EXPECT_EQ(out.proxies.proxies.value, init.proxies.proxies.value);
  EXPECT_EQ(out.history.size(), 3u);
}

TEST(Train, ProxyAndEncoderRatesAreSeparate) {
  const Data d = small_data(2);
  TrainConfig frozen_proxy = small_train();
  frozen_proxy.lr_proxy = 0.0;
  const TrainState init = init_state(small_encoder(), frozen_proxy, 3);
  const TrainState a = train(init, d.x, d.y);
  EXPECT_EQ(a.proxies.proxies.value, init.proxies.proxies.value);
  EXPECT_NE(a.layers[0].weight.value, init.layers[0].weight.value);

  TrainConfig frozen_encoder = small_train();
  frozen_encoder.lr_encoder = 0.0;
  const TrainState init2 = init_state(small_encoder(), frozen_encoder, 3);
  const TrainState b = train(init2, d.x, d.y);
  EXPECT_NE(b.proxies.proxies.value, init2.proxies.proxies.value);
  for (std::size_t i = 0; i < init2.layers.size(); ++i) {
    EXPECT_EQ(b.layers[i].weight.value, init2.layers[i].weight.value);
    EXPECT_EQ(b.layers[i].bias.value, init2.layers[i].bias.value);
  }
}

TEST(Train, BitIdenticalRuns) {
  const Data d = small_data(3);
  const TrainState init = init_state(small_encoder(), small_train(), 3);
  const TrainState a = train(init, d.x, d.y);
  const TrainState b = train(init, d.x, d.y);
  expect_same_parameters(a, b);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(encode_database(a, d.x).codes, encode_database(b, d.x).codes);
}

TEST(Train, ResumingMatchesUninterruptedRun) {
  const Data d = small_data(4);
  TrainConfig t = small_train();
  t.epochs = 4;
  const TrainState full = train(init_state(small_encoder(), t, 3), d.x, d.y);
  TrainConfig half = t;
  half.epochs = 2;
  TrainState partial = train(init_state(small_encoder(), half, 3), d.x, d.y);
  std::stringstream buf;
  save_checkpoint(buf, partial);
  TrainState resumed = load_checkpoint(buf);
  resumed.train.epochs = 4;
  resumed = train(std::move(resumed), d.x, d.y);
  expect_same_parameters(full, resumed);
  EXPECT_EQ(full.history, resumed.history);
}

TEST(Train, AllLossKindsRun) {
  const Data d = small_data(5);
  for (LossKind k : {LossKind::kProxyAnchor, LossKind::kProxyNca,
                     LossKind::kDhn, LossKind::kQuantization}) {
    for (bool hhf : {false, true}) {
      TrainConfig t = small_train();
      t.loss.kind = k;
      t.loss.hhf = hhf;
      const TrainState s = train(init_state(small_encoder(), t, 3), d.x, d.y);
      ASSERT_EQ(s.history.size(), 3u);
      for (const EpochLoss& e : s.history) {
        EXPECT_TRUE(std::isfinite(e.total));
        EXPECT_NEAR(e.total, e.metric + t.loss.beta * e.quan, 1e-12);
      }
      if (k == LossKind::kQuantization) {
        EXPECT_EQ(s.history[0].metric, 0.0);
      }
    }
  }
}

TEST(Train, HhfChangesTheTrajectory) {
  const Data d = small_data(6);
  TrainConfig on = small_train();
  TrainConfig off = small_train();
  off.loss.hhf = false;
  const TrainState a = train(init_state(small_encoder(), on, 3), d.x, d.y);
  const TrainState b = train(init_state(small_encoder(), off, 3), d.x, d.y);
  EXPECT_NE(a.history, b.history);
}

TEST(Train, NonFiniteLossReportsEpochAndStep) {
  Data d = small_data(7);
  d.x(30, 2) = std::nan("");
  TrainConfig t = small_train();
  try {
    train(init_state(small_encoder(), t, 3), d.x, d.y);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 0);
    EXPECT_GE(e.step(), 0);
    EXPECT_LT(e.step(), 4);
  }
}

TEST(Train, Errors) {
  const TrainState s = init_state(small_encoder(), small_train(), 3);
  EXPECT_THROW(train(s, Matrix(0, 6), {}), ArgumentError);
  EXPECT_THROW(train(s, Matrix(2, 6), {{0}}), ShapeError);
}

TEST(Train, QuantizationOnlyDrivesHpeDown) {
  // One class; only the quantization term is optimized.
  const FeatureDataset ds = synth_gaussian(2, 100, 6, 5.0, 1.0, 11);
  const FeatureDataset one = ds.subset([] {
    std::vector<std::size_t> rows(100);
    for (std::size_t i = 0; i < 100; ++i) rows[i] = i;
    return rows;
  }());
  TrainConfig t;
  t.loss.kind = LossKind::kQuantization;
  t.loss.beta = 1.0;
  t.batch_size = 20;
  t.lr_encoder = 0.001;
  t.epochs = 0;
  TrainState s = init_state(small_encoder(), t, 1);
  double prev = hpe(forward(s, one.features));
  int decreases = 0;
  for (int e = 1; e <= 50; ++e) {
    s.train.epochs = e;
    s = train(std::move(s), one.features, one.labels);
    const double now = hpe(forward(s, one.features));
    if (now < prev) ++decreases;
    prev = now;
  }
  EXPECT_GE(decreases, 45);
}

TEST(Gradients, EndToEndMatchesFiniteDifferences) {
  EncoderConfig e;
  e.input_dim = 5;
  e.hidden_dims = {7};
  e.hash_bits = 6;
  e.seed = 3;
  std::mt19937_64 rng(9);
  for (LossKind k :
       {LossKind::kProxyAnchor, LossKind::kProxyNca, LossKind::kDhn}) {
    for (bool hhf : {false, true}) {
      TrainConfig t = small_train();
      t.loss.kind = k;
      t.loss.hhf = hhf;
      t.loss.beta = 0.5;
      TrainState s = init_state(e, t, 3);
      const Matrix x = random_matrix(4, 5, rng);
      const std::vector<LabelSet> y{{0}, {1}, {2}, {0, 1}};
      accumulate_gradients(s, x, y);
      for (std::size_t layer = 0; layer < 2; ++layer) {
        const Matrix analytic = s.layers[layer].weight.grad;
        const Matrix numeric = numeric_gradient(
            [&](const Matrix& w) {
              TrainState probe = s;
              probe.layers[layer].weight.value = w;
              return evaluate_loss(probe, x, y).total;
            },
            s.layers[layer].weight.value, 1e-5);
        EXPECT_LT(relative_error(analytic, numeric), 1e-3)
            << loss_kind_name(k) << " hhf=" << hhf << " layer " << layer;
      }
    }
  }
}

TEST(Encode, SignCodes) {
  TrainState s = init_state(small_encoder(), small_train(), 3);
  for (DenseLayer& l : s.layers) l.weight.value.fill(0.0);
  s.layers[1].bias.value.fill(0.5);
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(3, 6, rng);
  const EncodedSet out = encode_database(s, x);
  for (const BinaryCode& c : out.codes) {
    EXPECT_EQ(c.to_bit_string(), "11111111");
  }
  const TrainState r = init_state(small_encoder(), small_train(), 3);
  const EncodedSet a = encode_database(r, x);
  EXPECT_EQ(a.codes, encode_database(r, x).codes);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::vector<int> signs = a.codes[i].unpack();
    for (std::size_t k = 0; k < 8; ++k) {
      EXPECT_EQ(signs[k], a.latents(i, k) >= 0.0 ? 1 : -1);
    }
  }
}

TEST(History, CsvFormat) {
  std::ostringstream out;
  write_history_csv(out, {{0, 1.5, 0.25, 1.75}, {1, 1.0, 0.5, 1.5}});
  EXPECT_EQ(
      out.str(),
      "epoch,metric_loss,quan_loss,total\n0,1.5,0.25,1.75\n1,1,0.5,1.5\n");
}

TEST(Checkpoint, ExactRoundTrip) {
  const Data d = small_data(8);
  TrainConfig t = small_train();
  t.loss.zeta = -0.125;
  const TrainState s = train(init_state(small_encoder(), t, 3), d.x, d.y);
  std::stringstream buf;
  save_checkpoint(buf, s);
  const TrainState r = load_checkpoint(buf);
  EXPECT_EQ(r.encoder, s.encoder);
  EXPECT_EQ(r.train, s.train);
  EXPECT_EQ(r.num_classes, s.num_classes);
  EXPECT_EQ(r.zeta, s.zeta);
  EXPECT_EQ(r.epoch, s.epoch);
  EXPECT_EQ(r.rng, s.rng);
  EXPECT_EQ(r.history, s.history);
  expect_same_parameters(r, s);
  std::stringstream again;
  save_checkpoint(again, r);
  EXPECT_EQ(again.str(), buf.str());
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream bad("HHFX....");
  EXPECT_THROW(load_checkpoint(bad), ParseError);
  const TrainState s = init_state(small_encoder(), small_train(), 3);
  std::stringstream buf;
  save_checkpoint(buf, s);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(truncated), ParseError);
}

}  // namespace
}  // namespace hhf
