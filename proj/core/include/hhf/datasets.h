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

// Feature datasets: synthetic Gaussian generators, train/query/database
// split protocols, and the text and binary feature containers.
//
// Text container ("#hhf-features classes=C dim=D" header, then one row per
// sample):
//
//   3;7|0.25,-1.5,...
//
// Binary container: "HHFF", u16 version, u64 D, u64 M, u64 C, M*D f64
// values row-major, then M label records (u16 count, u32 ids).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hhf/labels.h"
#include "hhf/matrix.h"

namespace hhf {

struct FeatureDataset {
  Matrix features;               // M x D
  std::vector<LabelSet> labels;  // M normalized, non-empty sets
  std::size_t num_classes = 0;
  std::vector<std::uint64_t> ids;  // record ids, 0..M-1 for fresh data

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }

  // Throws ParseError/ShapeError on label >= C, empty label sets,
  // non-finite features or mismatched row counts.
  void validate() const;
  FeatureDataset subset(const std::vector<std::size_t>& rows) const;

  bool operator==(const FeatureDataset&) const = default;
};

// C means drawn uniformly on the sphere of radius `separation`, then
// per_class samples of mean + N(0, noise_sigma^2) per coordinate, grouped
// by class.
FeatureDataset synth_gaussian(std::size_t num_classes, std::size_t per_class,
                              std::size_t dim, double separation,
                              double noise_sigma, std::uint64_t seed);

struct MultilabelOptions {
  double separation = 10.0;
  double noise_sigma = 1.0;
};

// Each sample carries labels_per_sample distinct uniform labels; its
// features are the sum of those class means plus noise.
FeatureDataset synth_multilabel(std::size_t num_classes, std::size_t count,
                                std::size_t dim, std::size_t labels_per_sample,
                                std::uint64_t seed,
                                const MultilabelOptions& options = {});

enum class DatabaseRule { kRemainder, kEqualsTrain };

// Per-class counts take precedence over totals when both are set. Per-class
// sampling groups rows by their smallest label; classes that are never a
// smallest label contribute no rows.
struct SplitSpec {
  std::optional<std::size_t> train_per_class;
  std::optional<std::size_t> train_total;
  std::optional<std::size_t> query_per_class;
  std::optional<std::size_t> query_total;
  DatabaseRule database = DatabaseRule::kRemainder;

  static SplitSpec mini(std::size_t train_per_class,
                        std::size_t query_per_class);
  static SplitSpec full(std::size_t query_per_class);
};

struct Split {
  FeatureDataset train;
  FeatureDataset query;
  FeatureDataset database;
  std::vector<std::string> warnings;
};

// Throws SplitError naming the class when it is too small for the counts.
Split split(const FeatureDataset& dataset, const SplitSpec& spec,
            std::uint64_t seed);

void save_features_csv(std::ostream& out, const FeatureDataset& dataset);
void save_features_binary(std::ostream& out, const FeatureDataset& dataset);
// Dispatches on the extension: ".csv"/".txt" write text, anything else binary.
void save_features(const std::string& path, const FeatureDataset& dataset);

// Detects the container from its first bytes. Errors carry line numbers for
// the text form. Loaded ids are 0..M-1.
FeatureDataset load_features(std::istream& in);
FeatureDataset load_features(const std::string& path);

}  // namespace hhf
