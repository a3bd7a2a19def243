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

#include "hhf/datasets.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "binary_io.h"
#include "hhf/error.h"

namespace hhf {

void FeatureDataset::validate() const {
  if (labels.size() != features.rows()) {
    throw ShapeError("dataset has " + std::to_string(features.rows()) +
                     " feature rows but " + std::to_string(labels.size()) +
                     " label sets");
  }
  if (ids.size() != features.rows()) {
    throw ShapeError("dataset has " + std::to_string(features.rows()) +
                     " feature rows but " + std::to_string(ids.size()) +
                     " ids");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      throw ParseError("row " + std::to_string(i) + " has no labels");
    }
    for (auto c : labels[i]) {
      if (c >= num_classes) {
        throw ParseError("row " + std::to_string(i) + " has label " +
                         std::to_string(c) + " but the dataset declares " +
                         std::to_string(num_classes) + " classes");
      }
    }
  }
  if (!features.all_finite())
    throw ParseError("dataset has non-finite features");
}

FeatureDataset FeatureDataset::subset(
    const std::vector<std::size_t>& rows) const {
  FeatureDataset out;
  out.num_classes = num_classes;
  out.features = Matrix(rows.size(), dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = features.row(rows[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[rows[r]]);
    out.ids.push_back(ids[rows[r]]);
  }
  return out;
}

namespace {

Matrix sphere_means(std::size_t num_classes, std::size_t dim, double radius,
                    std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(num_classes, dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : means.row(c)) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    const double scale = radius / std::sqrt(norm);
    for (double& v : means.row(c)) v *= scale;
  }
  return means;
}

void check_generator(std::size_t num_classes, std::size_t dim,
                     double separation, double noise_sigma) {
  if (num_classes < 2)
    throw ArgumentError("generator needs at least 2 classes");
  if (dim < 1) throw ArgumentError("generator needs dim >= 1");
  if (!(separation > 0.0)) throw ArgumentError("separation must be > 0");
  if (!(noise_sigma >= 0.0)) throw ArgumentError("noise sigma must be >= 0");
}

}  // namespace

FeatureDataset synth_gaussian(std::size_t num_classes, std::size_t per_class,
                              std::size_t dim, double separation,
                              double noise_sigma, std::uint64_t seed) {
  check_generator(num_classes, dim, separation, noise_sigma);
  std::mt19937_64 rng(seed);
  const Matrix means = sphere_means(num_classes, dim, separation, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  FeatureDataset ds;
  ds.num_classes = num_classes;
  ds.features = Matrix(num_classes * per_class, dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      const std::size_t r = c * per_class + s;
      auto row = ds.features.row(r);
      const auto mean = means.row(c);
      for (std::size_t j = 0; j < dim; ++j) {
        row[j] = mean[j] + noise_sigma * noise(rng);
      }
      ds.labels.push_back({static_cast<std::uint32_t>(c)});
      ds.ids.push_back(r);
    }
  }
  return ds;
}

FeatureDataset synth_multilabel(std::size_t num_classes, std::size_t count,
                                std::size_t dim, std::size_t labels_per_sample,
                                std::uint64_t seed,
                                const MultilabelOptions& options) {
  check_generator(num_classes, dim, options.separation, options.noise_sigma);
  if (labels_per_sample < 1 || labels_per_sample > num_classes) {
    throw ArgumentError("labels_per_sample must lie in [1, classes]");
  }
  std::mt19937_64 rng(seed);
  const Matrix means = sphere_means(num_classes, dim, options.separation, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::uint32_t> pool(num_classes);
  std::iota(pool.begin(), pool.end(), 0u);
  FeatureDataset ds;
  ds.num_classes = num_classes;
  ds.features = Matrix(count, dim);
  for (std::size_t r = 0; r < count; ++r) {
    // Partial Fisher-Yates: the first labels_per_sample entries are a
    // uniform draw without replacement.
    for (std::size_t i = 0; i < labels_per_sample; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, num_classes - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    LabelSet labels(pool.begin(), pool.begin() + labels_per_sample);
    auto row = ds.features.row(r);
    for (auto c : labels) {
      const auto mean = means.row(c);
      for (std::size_t j = 0; j < dim; ++j) row[j] += mean[j];
    }
    for (double& v : row) v += options.noise_sigma * noise(rng);
    ds.labels.push_back(normalize_labels(std::move(labels)));
    ds.ids.push_back(r);
  }
  return ds;
}

SplitSpec SplitSpec::mini(std::size_t train_per_class,
                          std::size_t query_per_class) {
  SplitSpec s;
  s.train_per_class = train_per_class;
  s.query_per_class = query_per_class;
  s.database = DatabaseRule::kRemainder;
  return s;
}

SplitSpec SplitSpec::full(std::size_t query_per_class) {
  SplitSpec s;
  s.query_per_class = query_per_class;
  s.database = DatabaseRule::kEqualsTrain;
  return s;
}

namespace {

// Removes and returns the chosen rows from `remaining` (kept sorted).
std::vector<std::size_t> take(std::vector<std::size_t>& remaining,
                              const FeatureDataset& ds,
                              std::optional<std::size_t> per_class,
                              std::optional<std::size_t> total,
                              const char* part, std::mt19937_64& rng) {
  std::vector<std::size_t> chosen;
  if (per_class) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_class;
    std::vector<bool> grouped(ds.num_classes, false);
    for (const LabelSet& l : ds.labels) grouped[l.front()] = true;
    for (auto r : remaining) by_class[ds.labels[r].front()].push_back(r);
    for (std::uint32_t c = 0; c < ds.num_classes; ++c) {
      if (!grouped[c]) continue;
      auto& rows = by_class[c];
      if (rows.size() < *per_class) {
        throw SplitError("class " + std::to_string(c) + " has " +
                         std::to_string(rows.size()) + " samples left, the " +
                         part + " split needs " + std::to_string(*per_class));
      }
      std::shuffle(rows.begin(), rows.end(), rng);
      chosen.insert(chosen.end(), rows.begin(), rows.begin() + *per_class);
    }
  } else if (total) {
    if (remaining.size() < *total) {
      throw SplitError(std::string("the ") + part + " split needs " +
                       std::to_string(*total) + " samples, " +
                       std::to_string(remaining.size()) + " are left");
    }
    std::vector<std::size_t> rows = remaining;
    std::shuffle(rows.begin(), rows.end(), rng);
    chosen.assign(rows.begin(), rows.begin() + *total);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::size_t> rest;
  std::set_difference(remaining.begin(), remaining.end(), chosen.begin(),
                      chosen.end(), std::back_inserter(rest));
  remaining = std::move(rest);
  return chosen;
}

}  // namespace

Split split(const FeatureDataset& dataset, const SplitSpec& spec,
            std::uint64_t seed) {
  dataset.validate();
  const bool has_train = spec.train_per_class || spec.train_total;
  const bool has_query = spec.query_per_class || spec.query_total;
  if (!has_query) throw ArgumentError("split spec needs a query count");
  if (!has_train && spec.database == DatabaseRule::kRemainder) {
    throw ArgumentError("remainder split spec needs a train count");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> remaining(dataset.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  Split out;
  std::vector<std::size_t> query;
  std::vector<std::size_t> train;
  if (spec.database == DatabaseRule::kEqualsTrain) {
    // Queries first; without explicit train counts every other row trains.
    query = take(remaining, dataset, spec.query_per_class, spec.query_total,
                 "query", rng);
    train = has_train ? take(remaining, dataset, spec.train_per_class,
                             spec.train_total, "train", rng)
                      : remaining;
    out.database = dataset.subset(train);
  } else {
    train = take(remaining, dataset, spec.train_per_class, spec.train_total,
                 "train", rng);
    query = take(remaining, dataset, spec.query_per_class, spec.query_total,
                 "query", rng);
    out.database = dataset.subset(remaining);
    if (remaining.empty()) {
      out.warnings.push_back(
          "database split is empty: no samples remain "
          "after train and query");
    }
  }
  out.train = dataset.subset(train);
  out.query = dataset.subset(query);
  return out;
}

void save_features_csv(std::ostream& out, const FeatureDataset& ds) {
  ds.validate();
  out << "#hhf-features classes=" << ds.num_classes << " dim=" << ds.dim()
      << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t i = 0; i < ds.labels[r].size(); ++i) {
      if (i) out << ';';
      out << ds.labels[r][i];
    }
    out << '|';
    const auto row = ds.features.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

namespace {

constexpr char kFeatureMagic[5] = "HHFF";
constexpr std::uint16_t kFeatureVersion = 1;
constexpr char kCsvHeader[] = "#hhf-features";

}  // namespace

void save_features_binary(std::ostream& out, const FeatureDataset& ds) {
  using internal::write_le;
  ds.validate();
  out.write(kFeatureMagic, 4);
  write_le<std::uint16_t>(out, kFeatureVersion);
  write_le<std::uint64_t>(out, ds.dim());
  write_le<std::uint64_t>(out, ds.size());
  write_le<std::uint64_t>(out, ds.num_classes);
  for (double v : ds.features.values()) internal::write_f64(out, v);
  for (const auto& labels : ds.labels) {
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(labels.size()));
    for (auto c : labels) write_le<std::uint32_t>(out, c);
  }
}

void save_features(const std::string& path, const FeatureDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".csv" || ext == ".txt") {
    save_features_csv(out, ds);
  } else {
    save_features_binary(out, ds);
  }
  if (!out) throw IoError("write failed on '" + path + "'");
}

namespace {

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

std::size_t parse_header_field(const std::string& header, const char* key,
                               std::size_t line) {
  const std::string tag = std::string(key) + "=";
  const auto pos = header.find(tag);
  if (pos == std::string::npos) {
    fail_at(line, std::string("header lacks '") + key + "='");
  }
  std::size_t value = 0;
  const char* first = header.data() + pos + tag.size();
  const char* last = header.data() + header.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr == first) {
    fail_at(line, std::string("bad value for '") + key + "'");
  }
  return value;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), last, v);
  if (s.empty() || ec != std::errc() || ptr != last) {
    fail_at(line, "bad feature value '" + s + "'");
  }
  return v;
}

FeatureDataset load_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line.rfind(kCsvHeader, 0) != 0) {
    fail_at(1, "expected '#hhf-features classes=C dim=D' header");
  }
  FeatureDataset ds;
  ds.num_classes = parse_header_field(line, "classes", 1);
  const std::size_t dim = parse_header_field(line, "dim", 1);
  if (dim == 0) fail_at(1, "dim must be positive");
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto bar = line.find('|');
    if (bar == std::string::npos) fail_at(lineno, "missing '|' separator");
    LabelSet labels;
    std::stringstream label_text(line.substr(0, bar));
    std::string tok;
    while (std::getline(label_text, tok, ';')) {
      std::uint32_t c = 0;
      const auto [ptr, ec] =
          std::from_chars(tok.data(), tok.data() + tok.size(), c);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
        fail_at(lineno, "bad label '" + tok + "'");
      }
      if (c >= ds.num_classes) {
        fail_at(lineno, "label " + std::to_string(c) + " >= classes " +
                            std::to_string(ds.num_classes));
      }
      labels.push_back(c);
    }
    if (labels.empty()) fail_at(lineno, "row has no labels");
    std::stringstream feature_text(line.substr(bar + 1));
    std::size_t count = 0;
    while (std::getline(feature_text, tok, ',')) {
      const double v = parse_double(tok, lineno);
      if (!std::isfinite(v)) fail_at(lineno, "non-finite feature value");
      values.push_back(v);
      ++count;
    }
    if (count != dim) {
      fail_at(lineno, "expected " + std::to_string(dim) + " features, got " +
                          std::to_string(count));
    }
    ds.ids.push_back(ds.labels.size());
    ds.labels.push_back(normalize_labels(std::move(labels)));
  }
  ds.features = Matrix(ds.labels.size(), dim, std::move(values));
  return ds;
}

FeatureDataset load_binary(std::istream& in) {
  using internal::read_le;
  internal::expect_magic(in, kFeatureMagic, "HHFF feature");
  const auto version = read_le<std::uint16_t>(in, "version");
  if (version != kFeatureVersion) {
    throw ParseError("unsupported feature file version " +
                     std::to_string(version));
  }
  const auto dim = read_le<std::uint64_t>(in, "dim");
  const auto rows = read_le<std::uint64_t>(in, "row count");
  FeatureDataset ds;
  ds.num_classes = read_le<std::uint64_t>(in, "class count");
  if (dim == 0 || dim > (1u << 24) || rows > (std::uint64_t{1} << 32)) {
    throw ParseError("implausible feature file header");
  }
  std::vector<double> values(dim * rows);
  for (double& v : values) v = internal::read_f64(in, "feature values");
  for (std::uint64_t r = 0; r < rows; ++r) {
    const auto n = read_le<std::uint16_t>(in, "label count");
    LabelSet labels(n);
    for (auto& c : labels) c = read_le<std::uint32_t>(in, "label id");
    ds.labels.push_back(normalize_labels(std::move(labels)));
    ds.ids.push_back(r);
  }
  ds.features = Matrix(rows, dim, std::move(values));
  ds.validate();
  return ds;
}

}  // namespace

FeatureDataset load_features(std::istream& in) {
  const int first = in.peek();
  if (first == 'H') return load_binary(in);
  FeatureDataset ds = load_csv(in);
  ds.validate();
  return ds;
}

FeatureDataset load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_features(in);
}

}  // namespace hhf
