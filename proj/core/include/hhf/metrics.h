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

// Retrieval and code-quality metrics: AP/mAP@N over Hamming rankings,
// precision and recall series, hash position error, and the intra/inter
// class distance ratios of latent codes.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hhf/hamming_index.h"
#include "hhf/labels.h"
#include "hhf/matrix.h"

namespace hhf {

enum class JudgeMode { kSingleLabel, kMultiLabel };

const char* judge_mode_name(JudgeMode mode);
JudgeMode parse_judge_mode(const std::string& name);

struct RelevanceJudge {
  JudgeMode mode = JudgeMode::kSingleLabel;

  // Single-label: equal label sets. Multi-label: intersecting sets.
  bool relevant(const LabelSet& query, const LabelSet& item) const {
    return mode == JudgeMode::kSingleLabel ? query == item
                                           : labels_intersect(query, item);
  }
};

// AP over the first min(n, size) flags, normalized by the number of relevant
// items among them; 0 when there are none. Throws ArgumentError if n < 1.
double average_precision(std::span<const bool> ranked, std::size_t n);

// Mean AP@n over every query code, ranked by top_n. Throws ArgumentError on
// an empty query set and ShapeError on a code length mismatch.
double map_at_n(const CodeDatabase& queries, const CodeDatabase& db,
                std::size_t n, const RelevanceJudge& judge);

// Mean over rows of ||h - sgn(h)||^2, sgn(0) = +1. Throws ArgumentError on
// an empty matrix.
double hpe(const Matrix& latents);

// Per-class means; a multi-label row contributes to every class it carries.
// Only classes with at least one member appear.
struct ClassCenters {
  std::vector<std::uint32_t> classes;  // ascending
  Matrix centers;                      // one row per entry of `classes`
};

ClassCenters class_centers(const Matrix& latents,
                           const std::vector<LabelSet>& labels);

// Mean squared distance of (sample, label) memberships to their class
// center, divided by the mean squared distance over ordered pairs of
// distinct centers. Throws DomainError with fewer than two classes.
double eta_global(const Matrix& latents, const std::vector<LabelSet>& labels);

// Mean over (sample, label) memberships of ||h - c_own||^2 divided by the
// squared distance to the nearest center of a class the sample does not
// carry, floored at kEtaLocalFloor. Samples carrying every class are
// skipped. Throws DomainError with fewer than two classes.
inline constexpr double kEtaLocalFloor = 1e-12;
double eta_local(const Matrix& latents, const std::vector<LabelSet>& labels);

struct PrecisionRecall {
  std::vector<std::size_t> cutoffs;
  std::vector<double> precision;  // mean over all queries
  std::vector<double> recall;     // mean over queries with a relevant item
};

// Series at each cutoff (1..db.size() when `cutoffs` is empty). Cutoffs
// beyond the database size are clamped to it.
PrecisionRecall precision_recall(const CodeDatabase& queries,
                                 const CodeDatabase& db,
                                 const RelevanceJudge& judge,
                                 std::vector<std::size_t> cutoffs = {});

struct EvalReport {
  std::size_t n = 0;
  JudgeMode judge = JudgeMode::kSingleLabel;
  std::size_t num_queries = 0;
  std::size_t num_database = 0;
  double map_at_n = 0.0;
  double hpe = 0.0;
  double eta_global = 0.0;
  double eta_local = 0.0;
  PrecisionRecall curves;
};

inline constexpr int kReportSchemaVersion = 1;

// Latent statistics use `latents` with `latent_labels`.
EvalReport evaluate(const CodeDatabase& queries, const CodeDatabase& db,
                    const Matrix& latents,
                    const std::vector<LabelSet>& latent_labels, std::size_t n,
                    const RelevanceJudge& judge,
                    std::vector<std::size_t> cutoffs = {});

// JSON with the scalar fields and schema_version; the series go to
// "cutoff,recall,precision" and "n,precision" CSV files.
void write_report_json(std::ostream& out, const EvalReport& report);
void write_pr_csv(std::ostream& out, const PrecisionRecall& curves);
void write_precision_at_csv(std::ostream& out, const PrecisionRecall& curves);

}  // namespace hhf
