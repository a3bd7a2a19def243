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

// Subcommand implementations behind the `hhf` binary. Each writes its
// human-readable summary to `log` and throws hhf::Error subclasses on
// failure; exit_code_for maps those onto process exit codes.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "experiment.h"

namespace hhf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitDivergence = 3;

int exit_code_for(const std::exception& e);

struct ZetaTableOptions {
  int max_bits = 256;
  int max_classes = 256;
  std::filesystem::path out;
};
void cmd_zeta_table(const ZetaTableOptions& opt, std::ostream& log);

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;  // first experiment seed when unset
};
// Writes checkpoint.bin, history.csv and the train/query/database feature
// files (HHFF) into `out`.
void cmd_train(const TrainOptions& opt, std::ostream& log);

struct EncodeOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path features;
  std::filesystem::path out;
  std::filesystem::path latents;  // optional CSV of the latent codes
};
void cmd_encode(const EncodeOptions& opt, std::ostream& log);

struct QueryOptions {
  std::filesystem::path db;
  std::filesystem::path query_file;
  std::optional<std::size_t> index;  // single record of query_file
  std::string bits;                  // inline query as a '0'/'1' string
  std::size_t n = 10;
};
// Prints "query,rank,id,distance" rows to `out`.
void cmd_query(const QueryOptions& opt, std::ostream& out);

struct EvaluateOptions {
  std::filesystem::path db;
  std::filesystem::path queries;
  std::filesystem::path latents;  // database latents, one row per record
  std::size_t n = 100;
  JudgeMode judge = JudgeMode::kSingleLabel;
  std::vector<std::size_t> cutoffs;
  std::filesystem::path out;
};
// Writes report.json, pr.csv and precision_at.csv into `out`.
EvalReport cmd_evaluate(const EvaluateOptions& opt, std::ostream& log);

struct CompareOptions {
  std::filesystem::path config;
  std::vector<std::string> variants;
  std::filesystem::path out;
  int jobs = 1;
};
// Writes comparison.csv plus one artifact directory per cell. Returns
// kExitDivergence when every cell diverged.
int cmd_compare(const CompareOptions& opt, std::ostream& log);

// Per-seed rows followed by one "median" row per variant over its
// successful cells.
void write_comparison_csv(std::ostream& out,
                          const std::vector<CellResult>& cells,
                          const std::vector<std::string>& variant_order);

}  // namespace hhf::cli
