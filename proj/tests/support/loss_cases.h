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

// Randomized finite-difference checks for every loss, shared by the unit
// tests and the acceptance gate. Instances with a cosine within kKinkGap of
// a hinge kink are resampled.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hhf/gradcheck.h"
#include "hhf/losses.h"
#include "test_util.h"

namespace hhf::testing {

inline constexpr double kKinkGap = 1e-3;
inline constexpr double kFiniteDifferenceStep = 1e-4;

enum class LossUnderTest {
  kQuantizationL2,
  kQuantizationL1,
  kProxyAnchor,
  kHhfProxyAnchor,
  kProxyNca,
  kHhfProxyNca,
  kDhn,
  kHhfDhn,
};

inline const std::vector<LossUnderTest>& all_losses() {
  static const std::vector<LossUnderTest> all = {LossUnderTest::kQuantizationL2,
                                                 LossUnderTest::kQuantizationL1,
                                                 LossUnderTest::kProxyAnchor,
                                                 LossUnderTest::kHhfProxyAnchor,
                                                 LossUnderTest::kProxyNca,
                                                 LossUnderTest::kHhfProxyNca,
                                                 LossUnderTest::kDhn,
                                                 LossUnderTest::kHhfDhn};
  return all;
}

inline std::string loss_name(LossUnderTest l) {
  switch (l) {
    case LossUnderTest::kQuantizationL2:
      return "quantization_l2";
    case LossUnderTest::kQuantizationL1:
      return "quantization_l1";
    case LossUnderTest::kProxyAnchor:
      return "proxy_anchor";
    case LossUnderTest::kHhfProxyAnchor:
      return "hhf_proxy_anchor";
    case LossUnderTest::kProxyNca:
      return "proxy_nca";
    case LossUnderTest::kHhfProxyNca:
      return "hhf_proxy_nca";
    case LossUnderTest::kDhn:
      return "dhn";
    case LossUnderTest::kHhfDhn:
      return "hhf_dhn";
  }
  return "?";
}

struct LossInstance {
  LatentBatch batch;
  Matrix proxies;
  HHFParams params;
  double temperature = 0.5;
};

inline LossResult evaluate(LossUnderTest l, const LossInstance& in) {
  switch (l) {
    case LossUnderTest::kQuantizationL2:
      return quantization_loss(in.batch.h, 2);
    case LossUnderTest::kQuantizationL1:
      return quantization_loss(in.batch.h, 1);
    case LossUnderTest::kProxyAnchor:
      return proxy_anchor_loss(in.batch, in.proxies, in.params);
    case LossUnderTest::kHhfProxyAnchor:
      return hhf_proxy_anchor_loss(in.batch, in.proxies, in.params);
    case LossUnderTest::kProxyNca:
      return proxy_nca_loss(in.batch, in.proxies, in.temperature);
    case LossUnderTest::kHhfProxyNca:
      return hhf_proxy_nca_loss(in.batch, in.proxies, in.temperature,
                                in.params);
    case LossUnderTest::kDhn:
      return dhn_pairwise_loss(in.batch, in.params);
    case LossUnderTest::kHhfDhn:
      return hhf_dhn_pairwise_loss(in.batch, in.params);
  }
  return {};
}

inline bool uses_proxy_matrix(LossUnderTest l) {
  return l == LossUnderTest::kProxyAnchor ||
         l == LossUnderTest::kHhfProxyAnchor || l == LossUnderTest::kProxyNca ||
         l == LossUnderTest::kHhfProxyNca;
}

inline bool near_kink(LossUnderTest l, const LossInstance& in) {
  if (l == LossUnderTest::kQuantizationL1 ||
      l == LossUnderTest::kQuantizationL2) {
    for (double v : in.batch.h.values()) {
      if (std::abs(v) < kKinkGap || std::abs(std::abs(v) - 1.0) < kKinkGap) {
        return true;
      }
    }
    return false;
  }
  const bool hhf = l == LossUnderTest::kHhfProxyAnchor ||
                   l == LossUnderTest::kHhfProxyNca ||
                   l == LossUnderTest::kHhfDhn;
  if (!hhf) return false;
  const double neg_kink = in.params.zeta + in.params.delta;
  const double pos_kink = 1.0 - in.params.delta;
  const Matrix cos = uses_proxy_matrix(l) ? row_cosine(in.batch.h, in.proxies)
                                          : row_cosine(in.batch.h, in.batch.h);
  for (double c : cos.values()) {
    if (std::abs(c - neg_kink) < kKinkGap ||
        std::abs(c - pos_kink) < kKinkGap) {
      return true;
    }
  }
  return false;
}

// B <= 8, C <= 5, K <= 16. Multi-label on odd draws.
inline LossInstance random_instance(LossUnderTest l, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> batch_size(2, 8);
  std::uniform_int_distribution<int> classes(2, 5);
  std::uniform_int_distribution<int> bits(2, 16);
  std::uniform_real_distribution<double> zeta(-0.5, 0.3);
  std::uniform_real_distribution<double> delta(0.0, 0.4);
  std::uniform_real_distribution<double> alpha(1.0, 32.0);
  std::bernoulli_distribution multi(0.5);
  while (true) {
    LossInstance in;
    const int b = batch_size(rng);
    const int c = classes(rng);
    const int k = bits(rng);
    in.batch.h = random_matrix(b, k, rng);
    in.batch.labels = multi(rng) ? random_multi_labels(b, c, rng)
                                 : random_single_labels(b, c, rng);
    in.proxies = random_matrix(c, k, rng);
    in.params.zeta = zeta(rng);
    in.params.delta = delta(rng);
    in.params.alpha = alpha(rng);
    in.params.gamma = 0.1;
    in.temperature =
        0.25 + 0.75 * std::uniform_real_distribution<double>()(rng);
    if (!near_kink(l, in)) return in;
  }
}

struct GradientCheck {
  double error_h = 0.0;
  double error_p = 0.0;
};

inline GradientCheck check_gradients(LossUnderTest l, const LossInstance& in) {
  const LossResult r = evaluate(l, in);
  GradientCheck out;
  const Matrix nh = numeric_gradient(
      [&](const Matrix& h) {
        LossInstance t = in;
        t.batch.h = h;
        return evaluate(l, t).value;
      },
      in.batch.h, kFiniteDifferenceStep);
  out.error_h = relative_error(r.grad_h, nh);
  if (uses_proxy_matrix(l)) {
    const Matrix np = numeric_gradient(
        [&](const Matrix& p) {
          LossInstance t = in;
          t.proxies = p;
          return evaluate(l, t).value;
        },
        in.proxies, kFiniteDifferenceStep);
    out.error_p = relative_error(r.grad_p, np);
  }
  return out;
}

}  // namespace hhf::testing
