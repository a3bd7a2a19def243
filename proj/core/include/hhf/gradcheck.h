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

// Central finite-difference gradient checking, used by the test suites to
// validate every hand-written backward pass.

#include <functional>

#include "hhf/matrix.h"

namespace hhf {

using ScalarFunction = std::function<double(const Matrix&)>;

// dF/dx by central differences, one coordinate at a time.
Matrix numeric_gradient(const ScalarFunction& f, const Matrix& at,
                        double step = 1e-4);

// ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2, floor).
// The floor keeps the ratio meaningful when both gradients vanish.
double relative_error(const Matrix& analytic, const Matrix& numeric,
                      double floor = 1e-8);

}  // namespace hhf
