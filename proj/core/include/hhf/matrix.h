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

// Dense row-major matrices of doubles plus the handful of forward/backward
// kernels the encoder and the loss family need. There is no autodiff graph:
// every op that takes part in training ships an explicit backward.

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hhf {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;
  bool all_finite() const;

  Matrix transposed() const;
  void fill(double value);

  // this += scale * other; shapes must match.
  Matrix& add_scaled(const Matrix& other, double scale);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws ShapeError naming both shapes unless a and b have identical shape.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

Matrix matmul(const Matrix& a, const Matrix& b);

struct MatmulGrads {
  Matrix a;
  Matrix b;
};

// Given dL/d(a*b), returns dL/da = upstream * b^T and dL/db = a^T * upstream.
MatmulGrads matmul_backward(const Matrix& upstream, const Matrix& a,
                            const Matrix& b);

// out(i, j) = cos(h_i, p_j). Throws DomainError on a zero-norm row.
Matrix row_cosine(const Matrix& h, const Matrix& p);

struct CosineGrads {
  Matrix h;
  Matrix p;
};

CosineGrads row_cosine_backward(const Matrix& upstream, const Matrix& h,
                                const Matrix& p);

// log(1 + sum_i exp(x_i)), evaluated shifted by max(0, max x); finite for
// terms up to several hundred. Empty input gives 0.
double logsumexp_shifted(std::span<const double> terms);

// d/dx_i of logsumexp_shifted: exp(x_i) / (1 + sum_j exp(x_j)).
std::vector<double> logsumexp_shifted_backward(std::span<const double> terms);

enum class Activation { kTanh, kRelu };

const char* activation_name(Activation act);
Activation parse_activation(const std::string& name);

Matrix activate(Activation act, const Matrix& pre);

// Gradient w.r.t. the pre-activation input; relu'(0) is taken as 0.
Matrix activate_backward(Activation act, const Matrix& upstream,
                         const Matrix& pre);

// A trainable tensor with its gradient accumulator and momentum buffer.
struct Parameter {
  Parameter() = default;
  explicit Parameter(Matrix initial);

  void zero_grad();

  Matrix value;
  Matrix grad;
  Matrix velocity;
};

// One row per line, comma separated, 17 significant digits.
void write_csv(std::ostream& out, const Matrix& m);
void write_csv(const std::string& path, const Matrix& m);
Matrix read_csv(std::istream& in);
Matrix read_csv(const std::string& path);

// Shortest round-trip-exact text for a double ("%.17g").
std::string format_double(double v);

}  // namespace hhf
