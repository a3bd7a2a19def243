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

#include "hhf/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace hhf {

Matrix numeric_gradient(const ScalarFunction& f, const Matrix& at,
                        double step) {
  Matrix probe = at;
  Matrix grad(at.rows(), at.cols());
  auto pv = probe.values();
  auto gv = grad.values();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double orig = pv[i];
    pv[i] = orig + step;
    const double up = f(probe);
    pv[i] = orig - step;
    const double down = f(probe);
    pv[i] = orig;
    gv[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(const Matrix& analytic, const Matrix& numeric,
                      double floor) {
  require_same_shape(analytic, numeric, "relative_error");
  double diff = 0.0, na = 0.0, nn = 0.0;
  const auto a = analytic.values();
  const auto n = numeric.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
}

}  // namespace hhf
