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

#pragma once

// Feed-forward encoder from feature vectors to K-dimensional latent codes,
// trained with mini-batch SGD (momentum, weight decay, step learning-rate
// decay) against any of the losses in losses.h, with learnable class proxies.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hhf/hamming_index.h"
#include "hhf/labels.h"
#include "hhf/losses.h"
#include "hhf/matrix.h"

namespace hhf {

struct EncoderConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  int hash_bits = 0;
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

enum class LossKind { kProxyAnchor, kProxyNca, kDhn, kQuantization };

const char* loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& name);
inline bool uses_proxies(LossKind kind) {
  return kind == LossKind::kProxyAnchor || kind == LossKind::kProxyNca;
}

struct LossConfig {
  LossKind kind = LossKind::kProxyAnchor;
  bool hhf = true;
  double alpha = 32.0;
  double gamma = 0.1;
  double delta = 0.2;
  double beta = 0.01;
  double temperature = 0.1;  // Proxy-NCA only
  int quant_norm = 2;
  // Inflection point; computed from (hash_bits, classes) when unset.
  std::optional<double> zeta;

  bool operator==(const LossConfig&) const = default;
};

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 64;
  double lr_encoder = 0.001;
  double lr_proxy = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lr_decay_factor = 0.5;
  int lr_decay_every = 10;
  LossConfig loss;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// base * decay_factor^floor(epoch / decay_every), epoch counted from 0.
double learning_rate_at(double base, const TrainConfig& cfg, int epoch);

struct DenseLayer {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out
};

struct ProxyBank {
  Parameter proxies;  // C x K

  std::size_t num_classes() const { return proxies.value.rows(); }
};

struct EpochLoss {
  int epoch = 0;
  double metric = 0.0;
  double quan = 0.0;
  double total = 0.0;

  bool operator==(const EpochLoss&) const = default;
};

struct TrainState {
  EncoderConfig encoder;
  TrainConfig train;
  std::size_t num_classes = 0;
  double zeta = 0.0;  // resolved inflection point
  std::vector<DenseLayer> layers;
  ProxyBank proxies;
  int epoch = 0;
  std::mt19937_64 rng;
  std::vector<EpochLoss> history;
};

// Xavier-uniform weights, zero biases, proxies with i.i.d. N(0, 1) entries
// and rows rescaled to norm sqrt(K). Resolves zeta for hashing-guided losses.
TrainState init_state(const EncoderConfig& encoder, const TrainConfig& train,
                      std::size_t num_classes);

// B x K latent codes. Throws ShapeError if features.cols() != input_dim.
Matrix forward(const TrainState& state, const Matrix& features);

struct LossBreakdown {
  double metric = 0.0;
  double quan = 0.0;
  double total = 0.0;
};

// Loss of the configured objective on one batch, without gradients.
LossBreakdown evaluate_loss(const TrainState& state, const Matrix& features,
                            const std::vector<LabelSet>& labels);

// Zeroes every gradient accumulator, then fills them with d(total)/d(param)
// for one batch. Returns the loss values.
LossBreakdown accumulate_gradients(TrainState& state, const Matrix& features,
                                   const std::vector<LabelSet>& labels);

// One SGD-with-momentum update from the accumulated gradients. Weight decay
// applies to encoder weights only.
void sgd_step(TrainState& state, int epoch);

// Runs epochs state.epoch .. train.epochs - 1 over per-epoch random
// permutations. Throws DivergenceError on a non-finite loss.
TrainState train(TrainState state, const Matrix& features,
                 const std::vector<LabelSet>& labels);

struct EncodedSet {
  Matrix latents;
  std::vector<BinaryCode> codes;
};

EncodedSet encode_database(const TrainState& state, const Matrix& features);

// Loss history as "epoch,metric_loss,quan_loss,total".
void write_history_csv(std::ostream& out, const std::vector<EpochLoss>& h);
void write_history_csv(const std::string& path,
                       const std::vector<EpochLoss>& h);

// "HHFK" checkpoints: configs, parameters with momentum buffers, proxies,
// RNG state and history. Round-trips exactly.
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const TrainState& state);
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(std::istream& in);
TrainState load_checkpoint(const std::string& path);

}  // namespace hhf
