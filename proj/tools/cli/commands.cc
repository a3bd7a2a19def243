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

#include "commands.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "hhf/code_bounds.h"
#include "hhf/error.h"

namespace hhf::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
  if (dynamic_cast<const ArgumentError*>(&e)) return kExitUsage;
  return kExitData;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory '" + dir.string() +
                  "': " + ec.message());
  }
}

}  // namespace

void cmd_zeta_table(const ZetaTableOptions& opt, std::ostream& log) {
  if (opt.max_bits < 1 || opt.max_bits > kMaxCodeLength) {
    throw ArgumentError("--max-bits must lie in [1, 256]");
  }
  if (opt.max_classes < 2) throw ArgumentError("--max-classes must be >= 2");
  const ZetaTable table = generate_table(opt.max_bits, opt.max_classes);
  export_table(table, opt.out.string());
  double lo = 1.0;
  double hi = -1.0;
  for (const auto& [key, z] : table.entries()) {
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  log << "wrote " << table.size() << " entries to " << opt.out.string();
  if (table.size()) {
    log << " (zeta in [" << format_double(lo) << ", " << format_double(hi)
        << "])";
  }
  log << '\n';
}

void cmd_train(const TrainOptions& opt, std::ostream& log) {
  const ExperimentConfig cfg = load_experiment_config(opt.config);
  const std::uint64_t seed = opt.seed.value_or(cfg.seeds.front());
  const Split sp = build_split(cfg, seed);
  for (const auto& w : sp.warnings) log << "warning: " << w << '\n';
  const TrainState state = train_model(cfg, cfg.train, sp, seed);
  ensure_dir(opt.out);
  save_checkpoint((opt.out / "checkpoint.bin").string(), state);
  write_history_csv((opt.out / "history.csv").string(), state.history);
  save_features((opt.out / "train.hhff").string(), sp.train);
  save_features((opt.out / "query.hhff").string(), sp.query);
  save_features((opt.out / "database.hhff").string(), sp.database);
  log << "trained " << loss_kind_name(cfg.train.loss.kind)
      << (cfg.train.loss.hhf ? "+hhf" : "") << " for " << state.epoch
      << " epochs, zeta " << format_double(state.zeta) << '\n';
  if (!state.history.empty()) {
    const EpochLoss& last = state.history.back();
    log << "final loss: metric " << format_double(last.metric) << ", quan "
        << format_double(last.quan) << ", total " << format_double(last.total)
        << '\n';
  }
}

void cmd_encode(const EncodeOptions& opt, std::ostream& log) {
  const TrainState state = load_checkpoint(opt.checkpoint.string());
  const FeatureDataset ds = load_features(opt.features.string());
  const EncodedSet enc = encode_database(state, ds.features);
  write_code_file(opt.out.string(), to_code_database(enc, ds));
  if (!opt.latents.empty()) write_csv(opt.latents.string(), enc.latents);
  log << "encoded " << ds.size() << " records to " << state.encoder.hash_bits
      << "-bit codes\n";
}

void cmd_query(const QueryOptions& opt, std::ostream& out) {
  if (opt.n < 1) throw ArgumentError("--n must be >= 1");
  const CodeDatabase db = read_code_file(opt.db.string());
  std::vector<BinaryCode> queries;
  if (!opt.bits.empty()) {
    if (!opt.query_file.empty()) {
      throw ArgumentError("--bits and --query-file are exclusive");
    }
    queries.push_back(BinaryCode::from_bit_string(opt.bits));
  } else if (!opt.query_file.empty()) {
    const CodeDatabase q = read_code_file(opt.query_file.string());
    if (opt.index) {
      if (*opt.index >= q.size()) {
        throw ArgumentError("--index " + std::to_string(*opt.index) +
                            " is past the " + std::to_string(q.size()) +
                            " query records");
      }
      queries.push_back(q.code(*opt.index));
    } else {
      for (std::size_t i = 0; i < q.size(); ++i) queries.push_back(q.code(i));
    }
  } else {
    throw ArgumentError("one of --bits or --query-file is required");
  }
  out << "query,rank,id,distance\n";
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const auto hits = top_n(queries[qi], db, opt.n);
    const std::size_t label = opt.index ? *opt.index : qi;
    for (std::size_t r = 0; r < hits.size(); ++r) {
      out << label << ',' << r + 1 << ',' << hits[r].id << ','
          << hits[r].distance << '\n';
    }
  }
}

EvalReport cmd_evaluate(const EvaluateOptions& opt, std::ostream& log) {
  const CodeDatabase db = read_code_file(opt.db.string());
  const CodeDatabase queries = read_code_file(opt.queries.string());
  const Matrix latents = read_csv(opt.latents.string());
  if (latents.rows() != db.size()) {
    throw ShapeError("latents have " + std::to_string(latents.rows()) +
                     " rows, database has " + std::to_string(db.size()) +
                     " records");
  }
  if (latents.cols() != static_cast<std::size_t>(db.bits())) {
    throw ShapeError("latents have " + std::to_string(latents.cols()) +
                     " columns, codes have " + std::to_string(db.bits()) +
                     " bits");
  }
  const EvalReport report =
      evaluate(queries, db, latents, db.all_labels(), opt.n,
               RelevanceJudge{opt.judge}, opt.cutoffs);
  ensure_dir(opt.out);
  auto json = open_out(opt.out / "report.json");
  write_report_json(json, report);
  auto pr = open_out(opt.out / "pr.csv");
  write_pr_csv(pr, report.curves);
  auto pa = open_out(opt.out / "precision_at.csv");
  write_precision_at_csv(pa, report.curves);
  log << "mAP@" << opt.n << " " << format_double(report.map_at_n) << ", HPE "
      << format_double(report.hpe) << ", eta_global "
      << format_double(report.eta_global) << ", eta_local "
      << format_double(report.eta_local) << '\n';
  return report;
}

namespace {

std::string cell_dir_name(const std::string& variant) {
  std::string out;
  for (char c : variant) {
    const bool keep =
        std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-';
    out.push_back(keep ? c : '_');
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void write_comparison_csv(std::ostream& out,
                          const std::vector<CellResult>& cells,
                          const std::vector<std::string>& variant_order) {
  out << "variant,seed,status,map_at_n,hpe,eta_global,eta_local\n";
  for (const auto& c : cells) {
    out << c.variant << ',' << c.seed << ',' << (c.ok ? "ok" : "failed");
    if (c.ok) {
      out << ',' << format_double(c.map_at_n) << ',' << format_double(c.hpe)
          << ',' << format_double(c.eta_global) << ','
          << format_double(c.eta_local);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  for (const auto& name : variant_order) {
    std::vector<double> map, hpe_v, eg, el;
    for (const auto& c : cells) {
      if (c.variant != name || !c.ok) continue;
      map.push_back(c.map_at_n);
      hpe_v.push_back(c.hpe);
      eg.push_back(c.eta_global);
      el.push_back(c.eta_local);
    }
    out << name << ",median," << (map.empty() ? "failed" : "ok");
    if (!map.empty()) {
      out << ',' << format_double(median(map)) << ','
          << format_double(median(hpe_v)) << ',' << format_double(median(eg))
          << ',' << format_double(median(el));
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

int cmd_compare(const CompareOptions& opt, std::ostream& log) {
  if (opt.variants.size() < 2) {
    throw ArgumentError("compare needs at least two variants");
  }
  if (opt.jobs < 1) throw ArgumentError("--jobs must be >= 1");
  const ExperimentConfig cfg = load_experiment_config(opt.config);
  std::vector<Variant> variants;
  for (const auto& v : opt.variants) variants.push_back(parse_variant(v));
  ensure_dir(opt.out);

  struct Cell {
    const Variant* variant;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& v : variants) {
    for (auto s : cfg.seeds) cells.push_back({&v, s});
  }
  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cells.size();) {
      try {
        const auto dir = opt.out / "cells" /
                         cell_dir_name(cells[i].variant->name) /
                         ("seed_" + std::to_string(cells[i].seed));
        results[i] = run_cell(cfg, *cells[i].variant, cells[i].seed, dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };
  const int threads =
      static_cast<int>(std::min<std::size_t>(opt.jobs, cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> order;
  for (const auto& v : variants) order.push_back(v.name);
  auto csv = open_out(opt.out / "comparison.csv");
  write_comparison_csv(csv, results, order);

  std::size_t ok = 0;
  for (const auto& r : results) {
    if (r.ok) {
      ++ok;
      log << r.variant << " seed " << r.seed << ": mAP "
          << format_double(r.map_at_n) << ", HPE " << format_double(r.hpe)
          << '\n';
    } else {
      log << r.variant << " seed " << r.seed << ": FAILED (" << r.error
          << ")\n";
    }
  }
  log << ok << "/" << results.size() << " cells succeeded; table in "
      << (opt.out / "comparison.csv").string() << '\n';
  return ok == 0 ? kExitDivergence : kExitOk;
}

}  // namespace hhf::cli
