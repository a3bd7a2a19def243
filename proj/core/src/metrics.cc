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

#include "hhf/metrics.h"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>

#include "hhf/error.h"
#include "nlohmann/json.hpp"

namespace hhf {

const char* judge_mode_name(JudgeMode mode) {
  return mode == JudgeMode::kSingleLabel ? "single" : "multi";
}

JudgeMode parse_judge_mode(const std::string& name) {
  if (name == "single" || name == "single-label") {
    return JudgeMode::kSingleLabel;
  }
  if (name == "multi" || name == "multi-label") return JudgeMode::kMultiLabel;
  throw ArgumentError("unknown relevance judge '" + name + "' (single|multi)");
}

double average_precision(std::span<const bool> ranked, std::size_t n) {
  if (n < 1) throw ArgumentError("average_precision: N must be at least 1");
  const std::size_t limit = std::min(n, ranked.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (!ranked[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return hits ? sum / static_cast<double>(hits) : 0.0;
}

double map_at_n(const CodeDatabase& queries, const CodeDatabase& db,
                std::size_t n, const RelevanceJudge& judge) {
  if (queries.empty()) throw ArgumentError("map_at_n: empty query set");
  if (n < 1) throw ArgumentError("map_at_n: N must be at least 1");
  if (queries.bits() != db.bits()) {
    throw ShapeError("query codes have " + std::to_string(queries.bits()) +
                     " bits, database has " + std::to_string(db.bits()));
  }
  double total = 0.0;
  std::unique_ptr<bool[]> flags(new bool[std::min(n, db.size()) + 1]);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto hits = top_n(queries.code(q), db, n);
    for (std::size_t r = 0; r < hits.size(); ++r) {
      flags[r] = judge.relevant(queries.labels(q), db.labels(hits[r].index));
    }
    total += average_precision({flags.get(), hits.size()}, n);
  }
  return total / static_cast<double>(queries.size());
}

double hpe(const Matrix& latents) {
  if (latents.rows() == 0) throw ArgumentError("hpe: no latent codes");
  double total = 0.0;
  for (double v : latents.values()) {
    const double e = v - (v >= 0.0 ? 1.0 : -1.0);
    total += e * e;
  }
  return total / static_cast<double>(latents.rows());
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

void require_rows(const Matrix& latents, const std::vector<LabelSet>& labels) {
  if (latents.rows() != labels.size()) {
    throw ShapeError("latents have " + std::to_string(latents.rows()) +
                     " rows but " + std::to_string(labels.size()) +
                     " label sets");
  }
}

// Row in `centers` of class c; classes is sorted.
std::size_t center_index(const ClassCenters& cc, std::uint32_t c) {
  return static_cast<std::size_t>(
      std::lower_bound(cc.classes.begin(), cc.classes.end(), c) -
      cc.classes.begin());
}

ClassCenters centers_for_ratio(const Matrix& latents,
                               const std::vector<LabelSet>& labels,
                               const char* what) {
  ClassCenters cc = class_centers(latents, labels);
  if (cc.classes.size() < 2) {
    throw DomainError(std::string(what) +
                      " is undefined with fewer than two classes");
  }
  return cc;
}

}  // namespace

ClassCenters class_centers(const Matrix& latents,
                           const std::vector<LabelSet>& labels) {
  require_rows(latents, labels);
  ClassCenters cc;
  for (const auto& set : labels) {
    cc.classes.insert(cc.classes.end(), set.begin(), set.end());
  }
  cc.classes = normalize_labels(std::move(cc.classes));
  cc.centers = Matrix(cc.classes.size(), latents.cols());
  std::vector<std::size_t> counts(cc.classes.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (auto c : labels[i]) {
      const std::size_t k = center_index(cc, c);
      ++counts[k];
      auto row = cc.centers.row(k);
      const auto h = latents.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += h[j];
    }
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (double& v : cc.centers.row(k)) v /= static_cast<double>(counts[k]);
  }
  return cc;
}

double eta_global(const Matrix& latents, const std::vector<LabelSet>& labels) {
  const ClassCenters cc = centers_for_ratio(latents, labels, "eta_global");
  double intra = 0.0;
  std::size_t memberships = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (auto c : labels[i]) {
      intra +=
          squared_distance(latents.row(i), cc.centers.row(center_index(cc, c)));
      ++memberships;
    }
  }
  const std::size_t c = cc.classes.size();
  double inter = 0.0;
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = 0; b < c; ++b) {
      if (a != b)
        inter += squared_distance(cc.centers.row(a), cc.centers.row(b));
    }
  }
  inter /= static_cast<double>(c * (c - 1));
  intra /= static_cast<double>(memberships);
  if (inter == 0.0) {
    throw DomainError("eta_global: all class centers coincide");
  }
  return intra / inter;
}

double eta_local(const Matrix& latents, const std::vector<LabelSet>& labels) {
  const ClassCenters cc = centers_for_ratio(latents, labels, "eta_local");
  double total = 0.0;
  std::size_t terms = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto h = latents.row(i);
    double foreign = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cc.classes.size(); ++k) {
      if (has_label(labels[i], cc.classes[k])) continue;
      foreign = std::min(foreign, squared_distance(h, cc.centers.row(k)));
    }
    if (foreign == std::numeric_limits<double>::infinity()) continue;
    foreign = std::max(foreign, kEtaLocalFloor);
    for (auto c : labels[i]) {
      total +=
          squared_distance(h, cc.centers.row(center_index(cc, c))) / foreign;
      ++terms;
    }
  }
  if (terms == 0) {
    throw DomainError("eta_local: every sample carries every class");
  }
  return total / static_cast<double>(terms);
}

PrecisionRecall precision_recall(const CodeDatabase& queries,
                                 const CodeDatabase& db,
                                 const RelevanceJudge& judge,
                                 std::vector<std::size_t> cutoffs) {
  if (queries.empty()) throw ArgumentError("precision_recall: empty query set");
  if (db.empty()) throw ArgumentError("precision_recall: empty database");
  if (queries.bits() != db.bits()) {
    throw ShapeError("query codes have " + std::to_string(queries.bits()) +
                     " bits, database has " + std::to_string(db.bits()));
  }
  if (cutoffs.empty()) {
    cutoffs.resize(db.size());
    std::iota(cutoffs.begin(), cutoffs.end(), std::size_t{1});
  }
  for (auto& c : cutoffs) {
    if (c < 1) throw ArgumentError("precision_recall: cutoffs must be >= 1");
    c = std::min(c, db.size());
  }
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());

  PrecisionRecall out;
  out.cutoffs = cutoffs;
  out.precision.assign(cutoffs.size(), 0.0);
  out.recall.assign(cutoffs.size(), 0.0);
  std::size_t recall_queries = 0;
  std::vector<std::size_t> order(db.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto dist = batch_distances(queries.code(q), db);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(
        order.begin(), order.end(),
        [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    std::size_t relevant_total = 0;
    for (std::size_t i = 0; i < db.size(); ++i) {
      relevant_total += judge.relevant(queries.labels(q), db.labels(i));
    }
    std::size_t hits = 0;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
      for (; pos < cutoffs[k]; ++pos) {
        hits += judge.relevant(queries.labels(q), db.labels(order[pos]));
      }
      out.precision[k] +=
          static_cast<double>(hits) / static_cast<double>(cutoffs[k]);
      if (relevant_total) {
        out.recall[k] +=
            static_cast<double>(hits) / static_cast<double>(relevant_total);
      }
    }
    recall_queries += relevant_total > 0;
  }
  for (std::size_t k = 0; k < cutoffs.size(); ++k) {
    out.precision[k] /= static_cast<double>(queries.size());
    if (recall_queries) out.recall[k] /= static_cast<double>(recall_queries);
  }
  return out;
}

EvalReport evaluate(const CodeDatabase& queries, const CodeDatabase& db,
                    const Matrix& latents,
                    const std::vector<LabelSet>& latent_labels, std::size_t n,
                    const RelevanceJudge& judge,
                    std::vector<std::size_t> cutoffs) {
  EvalReport r;
  r.n = n;
  r.judge = judge.mode;
  r.num_queries = queries.size();
  r.num_database = db.size();
  r.map_at_n = map_at_n(queries, db, n, judge);
  r.hpe = hpe(latents);
  r.eta_global = eta_global(latents, latent_labels);
  r.eta_local = eta_local(latents, latent_labels);
  r.curves = precision_recall(queries, db, judge, std::move(cutoffs));
  return r;
}

void write_report_json(std::ostream& out, const EvalReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["n"] = r.n;
  j["judge"] = judge_mode_name(r.judge);
  j["num_queries"] = r.num_queries;
  j["num_database"] = r.num_database;
  j["map_at_n"] = r.map_at_n;
  j["hpe"] = r.hpe;
  j["eta_global"] = r.eta_global;
  j["eta_local"] = r.eta_local;
  out << j.dump(2) << '\n';
}

void write_pr_csv(std::ostream& out, const PrecisionRecall& c) {
  out << "cutoff,recall,precision\n";
  for (std::size_t k = 0; k < c.cutoffs.size(); ++k) {
    out << c.cutoffs[k] << ',' << format_double(c.recall[k]) << ','
        << format_double(c.precision[k]) << '\n';
  }
}

void write_precision_at_csv(std::ostream& out, const PrecisionRecall& c) {
  out << "n,precision\n";
  for (std::size_t k = 0; k < c.cutoffs.size(); ++k) {
    out << c.cutoffs[k] << ',' << format_double(c.precision[k]) << '\n';
  }
}

}  // namespace hhf
