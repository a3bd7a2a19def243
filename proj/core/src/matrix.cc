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

#include "hhf/matrix.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hhf/error.h"

namespace hhf {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) +
                     " values, expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer for Matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

void Matrix::fill(double value) {
  std::fill(data_.begin(), data_.end(), value);
}

Matrix& Matrix::add_scaled(const Matrix& other, double scale) {
  require_same_shape(*this, other, "add_scaled");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] += scale * other.data_[i];
  }
  return *this;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     a.shape_string() + " vs " + b.shape_string());
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() +
                     " * " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

MatmulGrads matmul_backward(const Matrix& upstream, const Matrix& a,
                            const Matrix& b) {
  if (a.cols() != b.rows() || upstream.rows() != a.rows() ||
      upstream.cols() != b.cols()) {
    throw ShapeError("matmul_backward: upstream " + upstream.shape_string() +
                     " incompatible with " + a.shape_string() + " * " +
                     b.shape_string());
  }
  return {matmul(upstream, b.transposed()), matmul(a.transposed(), upstream)};
}

namespace {

std::vector<double> row_norms(const Matrix& m, const char* name) {
  std::vector<double> norms(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) s += v * v;
    norms[r] = std::sqrt(s);
    if (norms[r] == 0.0) {
      throw DomainError(std::string("row_cosine: zero-norm row ") +
                        std::to_string(r) + " in " + name);
    }
  }
  return norms;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Matrix row_cosine(const Matrix& h, const Matrix& p) {
  if (h.cols() != p.cols()) {
    throw ShapeError("row_cosine: column counts differ, " + h.shape_string() +
                     " vs " + p.shape_string());
  }
  const auto hn = row_norms(h, "H");
  const auto pn = row_norms(p, "P");
  Matrix out(h.rows(), p.rows());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < p.rows(); ++j) {
      const double c = dot(h.row(i), p.row(j)) / (hn[i] * pn[j]);
      out(i, j) = std::clamp(c, -1.0, 1.0);
    }
  }
  return out;
}

CosineGrads row_cosine_backward(const Matrix& upstream, const Matrix& h,
                                const Matrix& p) {
  if (h.cols() != p.cols() || upstream.rows() != h.rows() ||
      upstream.cols() != p.rows()) {
    throw ShapeError("row_cosine_backward: upstream " +
                     upstream.shape_string() + " incompatible with H " +
                     h.shape_string() + " and P " + p.shape_string());
  }
  const auto hn = row_norms(h, "H");
  const auto pn = row_norms(p, "P");
  const std::size_t k = h.cols();
  CosineGrads g{Matrix(h.rows(), k), Matrix(p.rows(), k)};
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const auto hi = h.row(i);
    auto gh = g.h.row(i);
    for (std::size_t j = 0; j < p.rows(); ++j) {
      const double u = upstream(i, j);
      if (u == 0.0) continue;
      const auto pj = p.row(j);
      auto gp = g.p.row(j);
      const double inv = 1.0 / (hn[i] * pn[j]);
      const double cos = dot(hi, pj) * inv;
      const double ch = cos / (hn[i] * hn[i]);
      const double cp = cos / (pn[j] * pn[j]);
      for (std::size_t d = 0; d < k; ++d) {
        gh[d] += u * (pj[d] * inv - ch * hi[d]);
        gp[d] += u * (hi[d] * inv - cp * pj[d]);
      }
    }
  }
  return g;
}

double logsumexp_shifted(std::span<const double> terms) {
  if (terms.empty()) return 0.0;
  double shift = 0.0;
  for (double x : terms) shift = std::max(shift, x);
  double acc = std::exp(-shift);
  for (double x : terms) acc += std::exp(x - shift);
  return shift + std::log(acc);
}

std::vector<double> logsumexp_shifted_backward(std::span<const double> terms) {
  std::vector<double> grad(terms.size());
  if (terms.empty()) return grad;
  double shift = 0.0;
  for (double x : terms) shift = std::max(shift, x);
  double acc = std::exp(-shift);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    grad[i] = std::exp(terms[i] - shift);
    acc += grad[i];
  }
  for (double& g : grad) g /= acc;
  return grad;
}

const char* activation_name(Activation act) {
  return act == Activation::kTanh ? "tanh" : "relu";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ArgumentError("unknown activation '" + name + "' (tanh|relu)");
}

Matrix activate(Activation act, const Matrix& pre) {
  Matrix out = pre;
  for (double& v : out.values()) {
    v = act == Activation::kTanh ? std::tanh(v) : std::max(0.0, v);
  }
  return out;
}

Matrix activate_backward(Activation act, const Matrix& upstream,
                         const Matrix& pre) {
  require_same_shape(upstream, pre, "activate_backward");
  Matrix g = upstream;
  auto gv = g.values();
  const auto pv = pre.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (act == Activation::kTanh) {
      const double t = std::tanh(pv[i]);
      gv[i] *= 1.0 - t * t;
    } else if (!(pv[i] > 0.0)) {
      gv[i] = 0.0;
    }
  }
  return g;
}

Parameter::Parameter(Matrix initial)
    : value(std::move(initial)),
      grad(value.rows(), value.cols()),
      velocity(value.rows(), value.cols()) {}

void Parameter::zero_grad() { grad.fill(0.0); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, m);
  if (!out) throw IoError("write failed on '" + path + "'");
}

Matrix read_csv(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() ||
          !std::isfinite(v)) {
        throw ParseError("csv line " + std::to_string(line_no) + ", column " +
                         std::to_string(count + 1) + ": bad number '" + cell +
                         "'");
      }
      data.push_back(v);
      ++count;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " columns, found " +
                       std::to_string(count));
    }
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

Matrix read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace hhf
