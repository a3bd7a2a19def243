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

// Metric and quantization losses over a batch of latent codes, each returning
// its value together with analytic gradients.
//
// The hashing-guided variants replace the linear use of cosine similarity by
// hinges: a negative pair only contributes while cos(h, p) > zeta + delta, a
// positive pair only while cos(h, p) < 1 - delta. Each active term enters as
// exp(alpha * excess) - 1, so a satisfied pair adds exactly zero to both the
// value and the gradient.

#include <cstddef>
#include <span>
#include <vector>

#include "hhf/labels.h"
#include "hhf/matrix.h"

namespace hhf {

struct LatentBatch {
  Matrix h;                      // B x K latent codes
  std::vector<LabelSet> labels;  // one set per row

  // Throws ShapeError/ArgumentError unless B >= 1, labels.size() == B, and
  // every row has at least one label below num_classes.
  void validate(std::size_t num_classes) const;
};

struct HHFParams {
  double zeta = 0.0;   // inflection point, from code_bounds::zeta
  double delta = 0.2;  // relaxation margin
  double alpha = 32.0;
  double gamma = 0.1;  // margin of the unmodified Proxy-Anchor loss

  // Checks ranges and zeta + delta < 1.
  void validate() const;
};

struct LossResult {
  double value = 0.0;
  Matrix grad_h;  // B x K
  Matrix grad_p;  // C x K; empty for losses without proxies
};

// max(0, x + y) and its derivative in x (0 at the kink).
inline double hinge(double x, double y) { return x + y > 0.0 ? x + y : 0.0; }
inline double hinge_slope(double x, double y) {
  return x + y > 0.0 ? 1.0 : 0.0;
}

// log(1 + sum_i (exp(x_i) - 1)) for x_i >= 0, stable for large x_i.
double log1p_sum_expm1(std::span<const double> terms);
std::vector<double> log1p_sum_expm1_backward(std::span<const double> terms);

// sum_rows ||h - sgn(h)||_n^n with n in {1, 2}; sgn(0) = +1 and sgn(h) is a
// constant target (no gradient flows through it).
LossResult quantization_loss(const Matrix& h, int norm = 2);

LossResult proxy_anchor_loss(const LatentBatch& batch, const Matrix& proxies,
                             const HHFParams& params);
LossResult hhf_proxy_anchor_loss(const LatentBatch& batch,
                                 const Matrix& proxies,
                                 const HHFParams& params);

// Mean over (sample, positive class) of -log softmax(cos / temperature).
LossResult proxy_nca_loss(const LatentBatch& batch, const Matrix& proxies,
                          double temperature);
// Per (sample i, positive p): log(1 + sum_{negative c}
//   (exp((H(cos_ic, -zeta-delta) + H(-cos_ip, 1-delta)) / temperature) - 1)).
LossResult hhf_proxy_nca_loss(const LatentBatch& batch, const Matrix& proxies,
                              double temperature, const HHFParams& params);

// Mean over in-batch pairs i < j of softplus(alpha * c) - s_ij * alpha * c,
// c = cos(h_i, h_j), s_ij = 1 iff the label sets intersect. Needs B >= 2.
LossResult dhn_pairwise_loss(const LatentBatch& batch, const HHFParams& params);
// Same pairs; similar pairs cost alpha * H(-c, 1-delta), dissimilar pairs
// alpha * H(c, -zeta-delta).
LossResult hhf_dhn_pairwise_loss(const LatentBatch& batch,
                                 const HHFParams& params);

// metric + beta * quan. grad_p comes from the metric term only.
LossResult total_loss(const LossResult& metric, const LossResult& quan,
                      double beta);

}  // namespace hhf
