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

#include "hhf/losses.h"

#include <algorithm>
#include <cmath>

#include "hhf/error.h"

namespace hhf {

void LatentBatch::validate(std::size_t num_classes) const {
  if (h.rows() == 0 || h.cols() == 0) {
    throw ShapeError("latent batch is empty (" + h.shape_string() + ")");
  }
  if (labels.size() != h.rows()) {
    throw ShapeError("latent batch has " + std::to_string(h.rows()) +
                     " rows but " + std::to_string(labels.size()) +
                     " label sets");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      throw ArgumentError("row " + std::to_string(i) + " has no label");
    }
    for (auto c : labels[i]) {
      if (c >= num_classes) {
        throw ArgumentError("row " + std::to_string(i) + " has label " +
                            std::to_string(c) + " >= class count " +
                            std::to_string(num_classes));
      }
    }
  }
}

void HHFParams::validate() const {
  if (!(zeta >= -1.0 && zeta < 1.0)) {
    throw ArgumentError("zeta must lie in [-1, 1)");
  }
  if (!(delta >= 0.0)) throw ArgumentError("delta must be >= 0");
  if (!(alpha > 0.0)) throw ArgumentError("alpha must be > 0");
  if (!(gamma >= 0.0)) throw ArgumentError("gamma must be >= 0");
  if (!(zeta + delta < 1.0)) {
    throw ArgumentError("zeta + delta must be < 1");
  }
}

double log1p_sum_expm1(std::span<const double> terms) {
  if (terms.empty()) return 0.0;
  const double m = *std::max_element(terms.begin(), terms.end());
  if (m < 1.0) {
    double s = 0.0;
    for (double x : terms) s += std::expm1(x);
    return std::log1p(s);
  }
  // 1 + sum (e^x - 1) = e^m * (e^-m + sum (e^(x-m) - e^-m)).
  const double floor = std::exp(-m);
  double inner = floor;
  for (double x : terms) inner += std::exp(x - m) - floor;
  return m + std::log(inner);
}

std::vector<double> log1p_sum_expm1_backward(std::span<const double> terms) {
  std::vector<double> grad(terms.size());
  if (terms.empty()) return grad;
  const double m = *std::max_element(terms.begin(), terms.end());
  if (m < 1.0) {
    double s = 0.0;
    for (double x : terms) s += std::expm1(x);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      grad[i] = std::exp(terms[i]) / (1.0 + s);
    }
    return grad;
  }
  const double floor = std::exp(-m);
  double inner = floor;
  for (double x : terms) inner += std::exp(x - m) - floor;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    grad[i] = std::exp(terms[i] - m) / inner;
  }
  return grad;
}

LossResult quantization_loss(const Matrix& h, int norm) {
  if (norm != 1 && norm != 2) {
    throw ArgumentError("quantization norm must be 1 or 2");
  }
  LossResult r{0.0, Matrix(h.rows(), h.cols()), Matrix()};
  const auto hv = h.values();
  auto gv = r.grad_h.values();
  for (std::size_t i = 0; i < hv.size(); ++i) {
    const double diff = hv[i] - (hv[i] >= 0.0 ? 1.0 : -1.0);
    if (norm == 2) {
      r.value += diff * diff;
      gv[i] = 2.0 * diff;
    } else {
      r.value += std::abs(diff);
      gv[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    }
  }
  return r;
}

namespace {

void check_proxies(const LatentBatch& batch, const Matrix& proxies) {
  if (proxies.rows() == 0 || proxies.cols() != batch.h.cols()) {
    throw ShapeError("proxies " + proxies.shape_string() +
                     " do not match latent batch " + batch.h.shape_string());
  }
  batch.validate(proxies.rows());
}

LossResult from_cosine_grad(const Matrix& dcos, const Matrix& h,
                            const Matrix& p, double value) {
  auto g = row_cosine_backward(dcos, h, p);
  return {value, std::move(g.h), std::move(g.p)};
}

// Shared driver for the two Proxy-Anchor forms. For each proxy, `neg_term`
// and `pos_term` map a cosine to the exponent fed into `aggregate`; their
// derivatives w.r.t. the cosine are `neg_slope` / `pos_slope`.
template <typename Aggregate, typename AggregateGrad, typename NegTerm,
          typename NegSlope, typename PosTerm, typename PosSlope>
LossResult proxy_anchor_impl(const LatentBatch& batch, const Matrix& proxies,
                             Aggregate aggregate, AggregateGrad aggregate_grad,
                             NegTerm neg_term, NegSlope neg_slope,
                             PosTerm pos_term, PosSlope pos_slope) {
  check_proxies(batch, proxies);
  const Matrix cos = row_cosine(batch.h, proxies);
  const std::size_t b = cos.rows();
  const std::size_t c = cos.cols();

  std::size_t positive_proxies = 0;
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < b; ++i) {
      if (has_label(batch.labels[i], static_cast<std::uint32_t>(j))) {
        ++positive_proxies;
        break;
      }
    }
  }

  Matrix dcos(b, c);
  double neg_sum = 0.0;
  double pos_sum = 0.0;
  std::vector<double> neg_x, pos_x;
  std::vector<std::size_t> neg_rows, pos_rows;
  for (std::size_t j = 0; j < c; ++j) {
    neg_x.clear();
    pos_x.clear();
    neg_rows.clear();
    pos_rows.clear();
    for (std::size_t i = 0; i < b; ++i) {
      if (has_label(batch.labels[i], static_cast<std::uint32_t>(j))) {
        pos_x.push_back(pos_term(cos(i, j)));
        pos_rows.push_back(i);
      } else {
        neg_x.push_back(neg_term(cos(i, j)));
        neg_rows.push_back(i);
      }
    }
    neg_sum += aggregate(neg_x);
    const auto gn = aggregate_grad(neg_x);
    for (std::size_t t = 0; t < neg_rows.size(); ++t) {
      const std::size_t i = neg_rows[t];
      dcos(i, j) += gn[t] * neg_slope(cos(i, j)) / static_cast<double>(c);
    }
    if (!pos_rows.empty()) {
      pos_sum += aggregate(pos_x);
      const auto gp = aggregate_grad(pos_x);
      for (std::size_t t = 0; t < pos_rows.size(); ++t) {
        const std::size_t i = pos_rows[t];
        dcos(i, j) += gp[t] * pos_slope(cos(i, j)) /
                      static_cast<double>(positive_proxies);
      }
    }
  }
  const double value = neg_sum / static_cast<double>(c) +
                       (positive_proxies ? pos_sum / positive_proxies : 0.0);
  return from_cosine_grad(dcos, batch.h, proxies, value);
}

}  // namespace

LossResult proxy_anchor_loss(const LatentBatch& batch, const Matrix& proxies,
                             const HHFParams& params) {
  const double a = params.alpha;
  const double g = params.gamma;
  return proxy_anchor_impl(
      batch, proxies,
      [](std::span<const double> x) { return logsumexp_shifted(x); },
      [](std::span<const double> x) { return logsumexp_shifted_backward(x); },
      [=](double cs) { return a * (cs + g); }, [=](double) { return a; },
      [=](double cs) { return -a * (cs - g); }, [=](double) { return -a; });
}

LossResult hhf_proxy_anchor_loss(const LatentBatch& batch,
                                 const Matrix& proxies,
                                 const HHFParams& params) {
  params.validate();
  const double a = params.alpha;
  const double neg_shift = -params.zeta - params.delta;
  const double pos_shift = 1.0 - params.delta;
  return proxy_anchor_impl(
      batch, proxies,
      [](std::span<const double> x) { return log1p_sum_expm1(x); },
      [](std::span<const double> x) { return log1p_sum_expm1_backward(x); },
      [=](double cs) { return a * hinge(cs, neg_shift); },
      [=](double cs) { return a * hinge_slope(cs, neg_shift); },
      [=](double cs) { return a * hinge(-cs, pos_shift); },
      [=](double cs) { return -a * hinge_slope(-cs, pos_shift); });
}

namespace {

void check_temperature(double temperature) {
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be > 0");
}

}  // namespace

LossResult proxy_nca_loss(const LatentBatch& batch, const Matrix& proxies,
                          double temperature) {
  check_temperature(temperature);
  check_proxies(batch, proxies);
  const Matrix cos = row_cosine(batch.h, proxies);
  const std::size_t b = cos.rows();
  const std::size_t c = cos.cols();
  Matrix dcos(b, c);
  double value = 0.0;
  std::vector<double> softmax(c);
  for (std::size_t i = 0; i < b; ++i) {
    double m = cos(i, 0) / temperature;
    for (std::size_t j = 1; j < c; ++j)
      m = std::max(m, cos(i, j) / temperature);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      softmax[j] = std::exp(cos(i, j) / temperature - m);
      z += softmax[j];
    }
    for (double& s : softmax) s /= z;
    const double log_z = m + std::log(z);
    const auto& pos = batch.labels[i];
    const double w = 1.0 / (static_cast<double>(b) * pos.size());
    for (auto p : pos) {
      value += w * (log_z - cos(i, p) / temperature);
      for (std::size_t j = 0; j < c; ++j) {
        dcos(i, j) += w * (softmax[j] - (j == p ? 1.0 : 0.0)) / temperature;
      }
    }
  }
  return from_cosine_grad(dcos, batch.h, proxies, value);
}

LossResult hhf_proxy_nca_loss(const LatentBatch& batch, const Matrix& proxies,
                              double temperature, const HHFParams& params) {
  check_temperature(temperature);
  params.validate();
  check_proxies(batch, proxies);
  const Matrix cos = row_cosine(batch.h, proxies);
  const std::size_t b = cos.rows();
  const std::size_t c = cos.cols();
  const double neg_shift = -params.zeta - params.delta;
  const double pos_shift = 1.0 - params.delta;
  Matrix dcos(b, c);
  double value = 0.0;
  std::vector<double> x;
  std::vector<std::size_t> negs;
  for (std::size_t i = 0; i < b; ++i) {
    const auto& pos = batch.labels[i];
    negs.clear();
    for (std::size_t j = 0; j < c; ++j) {
      if (!has_label(pos, static_cast<std::uint32_t>(j))) negs.push_back(j);
    }
    const double w = 1.0 / (static_cast<double>(b) * pos.size());
    for (auto p : pos) {
      const double pull = hinge(-cos(i, p), pos_shift);
      const double pull_slope = -hinge_slope(-cos(i, p), pos_shift);
      x.clear();
      for (auto j : negs) {
        x.push_back((hinge(cos(i, j), neg_shift) + pull) / temperature);
      }
      value += w * log1p_sum_expm1(x);
      const auto g = log1p_sum_expm1_backward(x);
      for (std::size_t t = 0; t < negs.size(); ++t) {
        const double gt = w * g[t] / temperature;
        dcos(i, negs[t]) += gt * hinge_slope(cos(i, negs[t]), neg_shift);
        dcos(i, p) += gt * pull_slope;
      }
    }
  }
  return from_cosine_grad(dcos, batch.h, proxies, value);
}

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Per-pair cost and its derivative w.r.t. the pair cosine.
struct PairTerm {
  double value;
  double slope;
};

template <typename Cost>
LossResult pairwise_impl(const LatentBatch& batch, Cost cost) {
  const std::size_t b = batch.h.rows();
  if (b < 2) {
    throw ArgumentError("pairwise loss needs at least 2 samples, got " +
                        std::to_string(b));
  }
  if (batch.labels.size() != b) {
    throw ShapeError("latent batch rows and label sets differ");
  }
  const Matrix cos = row_cosine(batch.h, batch.h);
  const double pairs = static_cast<double>(b * (b - 1) / 2);
  Matrix dcos(b, b);
  double value = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      const bool similar = labels_intersect(batch.labels[i], batch.labels[j]);
      const PairTerm t = cost(cos(i, j), similar);
      value += t.value / pairs;
      dcos(i, j) = t.slope / pairs;
    }
  }
  auto g = row_cosine_backward(dcos, batch.h, batch.h);
  g.h.add_scaled(g.p, 1.0);
  return {value, std::move(g.h), Matrix()};
}

}  // namespace

LossResult dhn_pairwise_loss(const LatentBatch& batch,
                             const HHFParams& params) {
  if (!(params.alpha > 0.0)) throw ArgumentError("alpha must be > 0");
  const double a = params.alpha;
  return pairwise_impl(batch, [=](double cs, bool similar) {
    const double s = similar ? 1.0 : 0.0;
    return PairTerm{softplus(a * cs) - s * a * cs, a * (sigmoid(a * cs) - s)};
  });
}

LossResult hhf_dhn_pairwise_loss(const LatentBatch& batch,
                                 const HHFParams& params) {
  params.validate();
  const double a = params.alpha;
  const double neg_shift = -params.zeta - params.delta;
  const double pos_shift = 1.0 - params.delta;
  return pairwise_impl(batch, [=](double cs, bool similar) {
    if (similar) {
      return PairTerm{a * hinge(-cs, pos_shift),
                      -a * hinge_slope(-cs, pos_shift)};
    }
    return PairTerm{a * hinge(cs, neg_shift), a * hinge_slope(cs, neg_shift)};
  });
}

LossResult total_loss(const LossResult& metric, const LossResult& quan,
                      double beta) {
  if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  require_same_shape(metric.grad_h, quan.grad_h, "total_loss");
  LossResult r{metric.value + beta * quan.value, metric.grad_h, metric.grad_p};
  r.grad_h.add_scaled(quan.grad_h, beta);
  return r;
}

}  // namespace hhf
