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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "binary_io.h"
#include "hhf/code_bounds.h"
#include "hhf/error.h"

namespace hhf {

void EncoderConfig::validate() const {
  if (input_dim == 0) throw ArgumentError("encoder input_dim must be > 0");
  if (hash_bits < 1) throw ArgumentError("hash_bits must be >= 1");
  for (auto d : hidden_dims) {
    if (d == 0) throw ArgumentError("hidden layer widths must be > 0");
  }
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kProxyAnchor:
      return "proxy_anchor";
    case LossKind::kProxyNca:
      return "proxy_nca";
    case LossKind::kDhn:
      return "dhn";
    case LossKind::kQuantization:
      return "quantization";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "proxy_anchor" || name == "pa") return LossKind::kProxyAnchor;
  if (name == "proxy_nca" || name == "nca") return LossKind::kProxyNca;
  if (name == "dhn") return LossKind::kDhn;
  if (name == "quantization" || name == "quan") return LossKind::kQuantization;
  throw ArgumentError("unknown loss kind '" + name +
                      "' (proxy_anchor|proxy_nca|dhn|quantization)");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  // Zero rates are accepted: they freeze the corresponding parameters.
  if (!(lr_encoder >= 0.0) || !(lr_proxy >= 0.0)) {
    throw ArgumentError("learning rates must be >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ArgumentError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) {
    throw ArgumentError("lr_decay_factor must lie in (0, 1]");
  }
  if (lr_decay_every < 1) throw ArgumentError("lr_decay_every must be >= 1");
  if (!(loss.beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  if (loss.quant_norm != 1 && loss.quant_norm != 2) {
    throw ArgumentError("quant_norm must be 1 or 2");
  }
  if (loss.zeta && !(*loss.zeta >= -1.0 && *loss.zeta < 1.0)) {
    throw ArgumentError("zeta override must lie in [-1, 1)");
  }
}

double learning_rate_at(double base, const TrainConfig& cfg, int epoch) {
  return base * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_every);
}

TrainState init_state(const EncoderConfig& encoder, const TrainConfig& train,
                      std::size_t num_classes) {
  encoder.validate();
  train.validate();
  if (num_classes < 1) throw ArgumentError("num_classes must be >= 1");
  TrainState s;
  s.encoder = encoder;
  s.train = train;
  s.num_classes = num_classes;
  s.rng.seed(encoder.seed);

  if (train.loss.zeta) {
    s.zeta = *train.loss.zeta;
  } else if (train.loss.hhf && train.loss.kind != LossKind::kQuantization) {
    s.zeta = zeta(encoder.hash_bits, static_cast<long>(num_classes));
  }

  std::vector<std::size_t> dims{encoder.input_dim};
  dims.insert(dims.end(), encoder.hidden_dims.begin(),
              encoder.hidden_dims.end());
  dims.push_back(static_cast<std::size_t>(encoder.hash_bits));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(dims[l], dims[l + 1]);
    for (double& v : w.values()) v = u(s.rng);
    s.layers.push_back(
        {Parameter(std::move(w)), Parameter(Matrix(1, dims[l + 1]))});
  }

  const auto k = static_cast<std::size_t>(encoder.hash_bits);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix p(num_classes, k);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : p.row(c)) {
        v = normal(s.rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    const double scale = std::sqrt(static_cast<double>(k) / norm);
    for (double& v : p.row(c)) v *= scale;
  }
  s.proxies.proxies = Parameter(std::move(p));
  return s;
}

namespace {

struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
  Matrix output;
};

Matrix affine(const Matrix& x, const DenseLayer& layer) {
  Matrix y = matmul(x, layer.weight.value);
  const auto b = layer.bias.value.row(0);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  return y;
}

ForwardCache run_forward(const TrainState& state, const Matrix& features) {
  if (features.cols() != state.encoder.input_dim) {
    throw ShapeError("features have " + std::to_string(features.cols()) +
                     " columns, encoder expects " +
                     std::to_string(state.encoder.input_dim));
  }
  ForwardCache cache;
  Matrix x = features;
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    cache.inputs.push_back(x);
    Matrix y = affine(x, state.layers[l]);
    if (l + 1 < state.layers.size()) {
      cache.pre.push_back(y);
      x = activate(state.encoder.activation, y);
    } else {
      x = std::move(y);
    }
  }
  cache.output = std::move(x);
  return cache;
}

LossResult metric_loss(const TrainState& state, const LatentBatch& batch) {
  const LossConfig& cfg = state.train.loss;
  HHFParams params;
  params.zeta = state.zeta;
  params.delta = cfg.delta;
  params.alpha = cfg.alpha;
  params.gamma = cfg.gamma;
  const Matrix& p = state.proxies.proxies.value;
  switch (cfg.kind) {
    case LossKind::kProxyAnchor:
      return cfg.hhf ? hhf_proxy_anchor_loss(batch, p, params)
                     : proxy_anchor_loss(batch, p, params);
    case LossKind::kProxyNca:
      return cfg.hhf ? hhf_proxy_nca_loss(batch, p, cfg.temperature, params)
                     : proxy_nca_loss(batch, p, cfg.temperature);
    case LossKind::kDhn:
      return cfg.hhf ? hhf_dhn_pairwise_loss(batch, params)
                     : dhn_pairwise_loss(batch, params);
    case LossKind::kQuantization:
      break;
  }
  batch.validate(state.num_classes);
  return {0.0, Matrix(batch.h.rows(), batch.h.cols()), Matrix()};
}

LossResult full_loss(const TrainState& state, const Matrix& latents,
                     const std::vector<LabelSet>& labels,
                     LossBreakdown* breakdown) {
  const LatentBatch batch{latents, labels};
  const LossResult metric = metric_loss(state, batch);
  const LossResult quan =
      quantization_loss(latents, state.train.loss.quant_norm);
  LossResult total = total_loss(metric, quan, state.train.loss.beta);
  if (breakdown) *breakdown = {metric.value, quan.value, total.value};
  return total;
}

}  // namespace

Matrix forward(const TrainState& state, const Matrix& features) {
  return run_forward(state, features).output;
}

LossBreakdown evaluate_loss(const TrainState& state, const Matrix& features,
                            const std::vector<LabelSet>& labels) {
  LossBreakdown out;
  full_loss(state, forward(state, features), labels, &out);
  return out;
}

LossBreakdown accumulate_gradients(TrainState& state, const Matrix& features,
                                   const std::vector<LabelSet>& labels) {
  for (auto& layer : state.layers) {
    layer.weight.zero_grad();
    layer.bias.zero_grad();
  }
  state.proxies.proxies.zero_grad();

  const ForwardCache cache = run_forward(state, features);
  LossBreakdown out;
  const LossResult loss = full_loss(state, cache.output, labels, &out);
  if (!loss.grad_p.empty()) state.proxies.proxies.grad = loss.grad_p;

  Matrix upstream = loss.grad_h;
  for (std::size_t l = state.layers.size(); l-- > 0;) {
    auto& layer = state.layers[l];
    if (l + 1 < state.layers.size()) {
      upstream =
          activate_backward(state.encoder.activation, upstream, cache.pre[l]);
    }
    auto g = matmul_backward(upstream, cache.inputs[l], layer.weight.value);
    layer.weight.grad = std::move(g.b);
    auto bias_grad = layer.bias.grad.row(0);
    for (std::size_t r = 0; r < upstream.rows(); ++r) {
      const auto row = upstream.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) bias_grad[c] += row[c];
    }
    upstream = std::move(g.a);
  }
  return out;
}

namespace {

void momentum_update(Parameter& p, double lr, double momentum, double decay) {
  auto w = p.value.values();
  auto g = p.grad.values();
  auto v = p.velocity.values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = momentum * v[i] + g[i] + decay * w[i];
    w[i] -= lr * v[i];
  }
}

}  // namespace

void sgd_step(TrainState& state, int epoch) {
  const TrainConfig& cfg = state.train;
  const double lr = learning_rate_at(cfg.lr_encoder, cfg, epoch);
  for (auto& layer : state.layers) {
    momentum_update(layer.weight, lr, cfg.momentum, cfg.weight_decay);
    momentum_update(layer.bias, lr, cfg.momentum, 0.0);
  }
  if (uses_proxies(cfg.loss.kind)) {
    momentum_update(state.proxies.proxies,
                    learning_rate_at(cfg.lr_proxy, cfg, epoch), cfg.momentum,
                    0.0);
  }
}

TrainState train(TrainState state, const Matrix& features,
                 const std::vector<LabelSet>& labels) {
  state.train.validate();
  const std::size_t m = features.rows();
  if (m == 0) throw ArgumentError("cannot train on an empty dataset");
  if (labels.size() != m) {
    throw ShapeError("features have " + std::to_string(m) + " rows but " +
                     std::to_string(labels.size()) + " label sets");
  }
  const std::size_t batch = state.train.batch_size;
  const bool pairwise = state.train.loss.kind == LossKind::kDhn;
  std::vector<std::size_t> order(m);
  Matrix x;
  std::vector<LabelSet> y;
  for (; state.epoch < state.train.epochs; ++state.epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.rng);
    EpochLoss sums{state.epoch, 0.0, 0.0, 0.0};
    long steps = 0;
    for (std::size_t start = 0; start < m; start += batch) {
      const std::size_t end = std::min(m, start + batch);
      // A trailing single sample has no pairs to score.
      if (pairwise && end - start < 2) continue;
      x = Matrix(end - start, features.cols());
      y.assign(end - start, {});
      for (std::size_t r = start; r < end; ++r) {
        const auto src = features.row(order[r]);
        std::copy(src.begin(), src.end(), x.row(r - start).begin());
        y[r - start] = labels[order[r]];
      }
      const LossBreakdown l = accumulate_gradients(state, x, y);
      if (!std::isfinite(l.total)) {
        throw DivergenceError("non-finite loss at epoch " +
                                  std::to_string(state.epoch) + ", step " +
                                  std::to_string(steps),
                              state.epoch, steps);
      }
      sgd_step(state, state.epoch);
      sums.metric += l.metric;
      sums.quan += l.quan;
      sums.total += l.total;
      ++steps;
    }
    if (steps > 0) {
      sums.metric /= steps;
      sums.quan /= steps;
      sums.total /= steps;
    }
    state.history.push_back(sums);
  }
  return state;
}

EncodedSet encode_database(const TrainState& state, const Matrix& features) {
  EncodedSet out{forward(state, features), {}};
  out.codes.reserve(out.latents.rows());
  for (std::size_t r = 0; r < out.latents.rows(); ++r) {
    out.codes.push_back(BinaryCode::from_latent(out.latents.row(r)));
  }
  return out;
}

void write_history_csv(std::ostream& out, const std::vector<EpochLoss>& h) {
  out << "epoch,metric_loss,quan_loss,total\n";
  for (const auto& e : h) {
    out << e.epoch << ',' << format_double(e.metric) << ','
        << format_double(e.quan) << ',' << format_double(e.total) << '\n';
  }
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochLoss>& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_history_csv(out, h);
}

namespace {

constexpr char kCheckpointMagic[5] = "HHFK";

using internal::read_f64;
using internal::read_le;
using internal::write_f64;
using internal::write_le;

void write_matrix(std::ostream& out, const Matrix& m) {
  write_le<std::uint64_t>(out, m.rows());
  write_le<std::uint64_t>(out, m.cols());
  for (double v : m.values()) write_f64(out, v);
}

Matrix read_matrix(std::istream& in) {
  const auto rows = read_le<std::uint64_t>(in, "matrix rows");
  const auto cols = read_le<std::uint64_t>(in, "matrix cols");
  if (rows > (1u << 26) || cols > (1u << 26)) {
    throw ParseError("implausible matrix shape in checkpoint");
  }
  std::vector<double> data(rows * cols);
  for (double& v : data) v = read_f64(in, "matrix data");
  return Matrix(rows, cols, std::move(data));
}

void write_parameter(std::ostream& out, const Parameter& p) {
  write_matrix(out, p.value);
  write_matrix(out, p.velocity);
}

Parameter read_parameter(std::istream& in) {
  Parameter p(read_matrix(in));
  p.velocity = read_matrix(in);
  require_same_shape(p.value, p.velocity, "checkpoint parameter");
  return p;
}

}  // namespace

void save_checkpoint(std::ostream& out, const TrainState& s) {
  out.write(kCheckpointMagic, 4);
  write_le<std::uint16_t>(out, kCheckpointVersion);

  const EncoderConfig& e = s.encoder;
  write_le<std::uint64_t>(out, e.input_dim);
  write_le<std::uint32_t>(out,
                          static_cast<std::uint32_t>(e.hidden_dims.size()));
  for (auto d : e.hidden_dims) write_le<std::uint64_t>(out, d);
  write_le<std::int32_t>(out, e.hash_bits);
  write_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.activation));
  write_le<std::uint64_t>(out, e.seed);

  const TrainConfig& t = s.train;
  write_le<std::int32_t>(out, t.epochs);
  write_le<std::uint64_t>(out, t.batch_size);
  write_f64(out, t.lr_encoder);
  write_f64(out, t.lr_proxy);
  write_f64(out, t.momentum);
  write_f64(out, t.weight_decay);
  write_f64(out, t.lr_decay_factor);
  write_le<std::int32_t>(out, t.lr_decay_every);
  write_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.loss.kind));
  write_le<std::uint8_t>(out, t.loss.hhf ? 1 : 0);
  write_f64(out, t.loss.alpha);
  write_f64(out, t.loss.gamma);
  write_f64(out, t.loss.delta);
  write_f64(out, t.loss.beta);
  write_f64(out, t.loss.temperature);
  write_le<std::int32_t>(out, t.loss.quant_norm);
  write_le<std::uint8_t>(out, t.loss.zeta ? 1 : 0);
  write_f64(out, t.loss.zeta.value_or(0.0));

  write_le<std::uint64_t>(out, s.num_classes);
  write_f64(out, s.zeta);
  write_le<std::int32_t>(out, s.epoch);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.layers.size()));
  for (const auto& layer : s.layers) {
    write_parameter(out, layer.weight);
    write_parameter(out, layer.bias);
  }
  write_parameter(out, s.proxies.proxies);

  std::ostringstream rng;
  rng << s.rng;
  internal::write_string(out, rng.str());

  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.history.size()));
  for (const auto& h : s.history) {
    write_le<std::int32_t>(out, h.epoch);
    write_f64(out, h.metric);
    write_f64(out, h.quan);
    write_f64(out, h.total);
  }
}

void save_checkpoint(const std::string& path, const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save_checkpoint(out, state);
  if (!out) throw IoError("write failed on '" + path + "'");
}

TrainState load_checkpoint(std::istream& in) {
  internal::expect_magic(in, kCheckpointMagic, "HHFK checkpoint");
  const auto version = read_le<std::uint16_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version));
  }
  TrainState s;
  EncoderConfig& e = s.encoder;
  e.input_dim = read_le<std::uint64_t>(in, "input_dim");
  const auto hidden = read_le<std::uint32_t>(in, "hidden count");
  if (hidden > 1024) throw ParseError("implausible hidden layer count");
  for (std::uint32_t i = 0; i < hidden; ++i) {
    e.hidden_dims.push_back(read_le<std::uint64_t>(in, "hidden dim"));
  }
  e.hash_bits = read_le<std::int32_t>(in, "hash_bits");
  const auto act = read_le<std::uint8_t>(in, "activation");
  if (act > 1) throw ParseError("bad activation tag in checkpoint");
  e.activation = static_cast<Activation>(act);
  e.seed = read_le<std::uint64_t>(in, "seed");

  TrainConfig& t = s.train;
  t.epochs = read_le<std::int32_t>(in, "epochs");
  t.batch_size = read_le<std::uint64_t>(in, "batch_size");
  t.lr_encoder = read_f64(in, "lr_encoder");
  t.lr_proxy = read_f64(in, "lr_proxy");
  t.momentum = read_f64(in, "momentum");
  t.weight_decay = read_f64(in, "weight_decay");
  t.lr_decay_factor = read_f64(in, "lr_decay_factor");
  t.lr_decay_every = read_le<std::int32_t>(in, "lr_decay_every");
  const auto kind = read_le<std::uint8_t>(in, "loss kind");
  if (kind > 3) throw ParseError("bad loss kind tag in checkpoint");
  t.loss.kind = static_cast<LossKind>(kind);
  t.loss.hhf = read_le<std::uint8_t>(in, "hhf flag") != 0;
  t.loss.alpha = read_f64(in, "alpha");
  t.loss.gamma = read_f64(in, "gamma");
  t.loss.delta = read_f64(in, "delta");
  t.loss.beta = read_f64(in, "beta");
  t.loss.temperature = read_f64(in, "temperature");
  t.loss.quant_norm = read_le<std::int32_t>(in, "quant_norm");
  const bool has_zeta = read_le<std::uint8_t>(in, "zeta flag") != 0;
  const double zeta_override = read_f64(in, "zeta override");
  if (has_zeta) t.loss.zeta = zeta_override;

  s.num_classes = read_le<std::uint64_t>(in, "num_classes");
  s.zeta = read_f64(in, "zeta");
  s.epoch = read_le<std::int32_t>(in, "epoch");
  const auto layers = read_le<std::uint32_t>(in, "layer count");
  if (layers > 1024) throw ParseError("implausible layer count");
  for (std::uint32_t l = 0; l < layers; ++l) {
    DenseLayer layer;
    layer.weight = read_parameter(in);
    layer.bias = read_parameter(in);
    s.layers.push_back(std::move(layer));
  }
  s.proxies.proxies = read_parameter(in);

  std::istringstream rng(internal::read_string(in, "rng state"));
  rng >> s.rng;
  if (!rng) throw ParseError("corrupt RNG state in checkpoint");

  const auto epochs = read_le<std::uint32_t>(in, "history length");
  for (std::uint32_t i = 0; i < epochs; ++i) {
    EpochLoss h;
    h.epoch = read_le<std::int32_t>(in, "history epoch");
    h.metric = read_f64(in, "history metric");
    h.quan = read_f64(in, "history quan");
    h.total = read_f64(in, "history total");
    s.history.push_back(h);
  }
  e.validate();
  t.validate();
  return s;
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace hhf
