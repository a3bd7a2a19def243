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

// Brute-force metric references: full sort by (distance, index) and the
// definitions applied term by term. Only RelevanceJudge is shared with
// hhf/metrics.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "hhf/hamming_index.h"
#include "hhf/labels.h"
#include "hhf/matrix.h"
#include "hhf/metrics.h"

namespace hhf::testing {

inline std::vector<std::size_t> naive_ranking(const BinaryCode& q,
                                              const CodeDatabase& db) {
  std::vector<std::size_t> order(db.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int da = hamming_distance(q, db.code(a));
    const int dbb = hamming_distance(q, db.code(b));
    return da != dbb ? da < dbb : a < b;
  });
  return order;
}

inline double naive_ap(const std::vector<bool>& rel, std::size_t n) {
  double sum = 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < std::min(n, rel.size()); ++i) {
    if (rel[i]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / hits;
}

inline double naive_map(const CodeDatabase& queries, const CodeDatabase& db,
                        std::size_t n, const RelevanceJudge& judge) {
  double total = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<bool> rel;
    for (std::size_t i : naive_ranking(queries.code(q), db)) {
      rel.push_back(judge.relevant(queries.labels(q), db.labels(i)));
    }
    total += naive_ap(rel, n);
  }
  return total / static_cast<double>(queries.size());
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

// Single-label centers indexed by class id.
inline std::vector<std::vector<double>> naive_centers(
    const Matrix& h, const std::vector<LabelSet>& y, std::size_t classes) {
  std::vector<std::vector<double>> c(classes, std::vector<double>(h.cols()));
  std::vector<int> counts(classes);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::uint32_t l : y[i]) {
      ++counts[l];
      for (std::size_t k = 0; k < h.cols(); ++k) c[l][k] += h(i, k);
    }
  }
  for (std::size_t l = 0; l < classes; ++l) {
    for (double& v : c[l]) v /= counts[l];
  }
  return c;
}

inline double naive_eta_global(const Matrix& h, const std::vector<LabelSet>& y,
                               std::size_t classes) {
  const auto c = naive_centers(h, y, classes);
  double intra = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i)
    intra += sq_dist(h.row(i), c[y[i][0]]);
  intra /= static_cast<double>(h.rows());
  double inter = 0.0;
  for (std::size_t a = 0; a < classes; ++a) {
    for (std::size_t b = 0; b < classes; ++b) {
      if (a != b) inter += sq_dist(c[a], c[b]);
    }
  }
  inter /= static_cast<double>(classes * (classes - 1));
  return intra / inter;
}

inline double naive_eta_local(const Matrix& h, const std::vector<LabelSet>& y,
                              std::size_t classes) {
  const auto c = naive_centers(h, y, classes);
  double total = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < classes; ++l) {
      if (l != y[i][0]) nearest = std::min(nearest, sq_dist(h.row(i), c[l]));
    }
    total += sq_dist(h.row(i), c[y[i][0]]) / nearest;
  }
  return total / static_cast<double>(h.rows());
}

}  // namespace hhf::testing
