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

// Experiment configuration and the single train/encode/evaluate pipeline
// shared by `hhf train` and `hhf compare`.
//
// Config files are INI with sections [dataset], [encoder], [training],
// [loss], [eval] and [experiment]; every key is optional and defaults to
// the values below. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hhf/datasets.h"
#include "hhf/metrics.h"
#include "hhf/training.h"

namespace hhf::cli {

enum class Generator { kGaussian, kMultilabel, kFile };

struct DatasetSection {
  Generator generator = Generator::kGaussian;
  std::size_t classes = 8;
  std::size_t per_class = 200;  // gaussian
  std::size_t count = 1600;     // multilabel
  std::size_t labels_per_sample = 2;
  std::size_t dim = 32;
  double separation = 10.0;
  double noise = 2.0;
  std::filesystem::path path;  // file
  // Fixes generation and split across seeds when set; otherwise both
  // derive from the cell seed.
  std::optional<std::uint64_t> seed;
  SplitSpec split = SplitSpec::full(20);
};

struct EncoderSection {
  std::vector<std::size_t> hidden = {64};
  int bits = 16;
  Activation activation = Activation::kTanh;
};

struct EvalSection {
  std::size_t n = 100;
  std::optional<JudgeMode> judge;  // from the generator when unset
  std::vector<std::size_t> cutoffs;
};

struct ExperimentConfig {
  DatasetSection dataset;
  EncoderSection encoder;
  TrainConfig train;
  std::filesystem::path zeta_table;  // optional external table
  EvalSection eval;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  JudgeMode judge() const;
};

// Relative paths resolve against `base_dir`. Throws ArgumentError naming the
// offending key.
ExperimentConfig parse_experiment_config(std::istream& in,
                                         const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// `<kind>[+hhf][:key=value,...]`, e.g. "pa", "nca+hhf", "pa+hhf:delta=0.4".
// Keys: alpha, gamma, delta, beta, temperature, quant_norm, zeta.
struct Variant {
  std::string name;
  LossKind kind = LossKind::kProxyAnchor;
  bool hhf = false;
  std::vector<std::pair<std::string, double>> overrides;

  void apply(LossConfig& loss) const;
};

Variant parse_variant(const std::string& text);

// Per-cell seeds derived from one experiment seed.
struct CellSeeds {
  std::uint64_t data;
  std::uint64_t split;
  std::uint64_t encoder;
};
CellSeeds cell_seeds(const ExperimentConfig& cfg, std::uint64_t seed);

FeatureDataset build_dataset(const ExperimentConfig& cfg, std::uint64_t seed);
Split build_split(const ExperimentConfig& cfg, std::uint64_t seed);

// Applies the zeta resolution order: explicit override, then the external
// table, then computed bounds (left to init_state).
void resolve_zeta(const ExperimentConfig& cfg, TrainConfig& train,
                  std::size_t num_classes);

TrainState train_model(const ExperimentConfig& cfg, const TrainConfig& train,
                       const Split& split, std::uint64_t seed);

CodeDatabase to_code_database(const EncodedSet& encoded,
                              const FeatureDataset& dataset);

struct CellResult {
  std::string variant;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double map_at_n = 0.0;
  double hpe = 0.0;
  double eta_global = 0.0;
  double eta_local = 0.0;
};

// Runs one (variant, seed) cell. When `out_dir` is non-empty the checkpoint,
// history, code files and report land there. Divergence is reported in the
// result rather than thrown.
CellResult run_cell(const ExperimentConfig& cfg, const Variant& variant,
                    std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace hhf::cli
