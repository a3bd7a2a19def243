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

// hhf: zeta tables, training, encoding, querying, evaluation and A/B
// comparison from the command line.

#include <iostream>

#include "CLI11.hpp"
#include "cli/commands.h"
#include "hhf/error.h"

namespace {

using hhf::cli::kExitUsage;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hashing-guided deep hashing toolkit"};
  app.require_subcommand(1);

  hhf::cli::ZetaTableOptions zeta_opt;
  auto* zeta_cmd =
      app.add_subcommand("zeta-table", "Write the inflection-point table");
  zeta_cmd
      ->add_option("--max-bits", zeta_opt.max_bits,
                   "Largest code length K (1..256)")
      ->capture_default_str();
  zeta_cmd
      ->add_option("--max-classes", zeta_opt.max_classes,
                   "Largest class count C (>= 2)")
      ->capture_default_str();
  zeta_cmd->add_option("--out", zeta_opt.out, "Output TSV path")->required();

  hhf::cli::TrainOptions train_opt;
  std::uint64_t train_seed = 0;
  auto* train_cmd =
      app.add_subcommand("train", "Train one model from a config");
  train_cmd->add_option("--config", train_opt.config, "Experiment INI file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_opt.out, "Output directory")->required();
  auto* seed_flag = train_cmd->add_option(
      "--seed", train_seed, "Cell seed (default: first experiment seed)");

  hhf::cli::EncodeOptions encode_opt;
  auto* encode_cmd =
      app.add_subcommand("encode", "Encode a feature file to hash codes");
  encode_cmd
      ->add_option("--checkpoint", encode_opt.checkpoint,
                   "Checkpoint from `train`")
      ->required()
      ->check(CLI::ExistingFile);
  encode_cmd
      ->add_option("--features", encode_opt.features,
                   "Feature file (CSV or HHFF)")
      ->required()
      ->check(CLI::ExistingFile);
  encode_cmd->add_option("--out", encode_opt.out, "Output HHFC code file")
      ->required();
  encode_cmd->add_option("--latents", encode_opt.latents,
                         "Also write latent codes as CSV");

  hhf::cli::QueryOptions query_opt;
  std::size_t query_index = 0;
  auto* query_cmd = app.add_subcommand("query", "Hamming top-N retrieval");
  query_cmd->add_option("--db", query_opt.db, "Database HHFC code file")
      ->required()
      ->check(CLI::ExistingFile);
  query_cmd
      ->add_option("--query-file", query_opt.query_file,
                   "HHFC file of query codes")
      ->check(CLI::ExistingFile);
  auto* index_flag = query_cmd->add_option(
      "--index", query_index, "Only query this record of --query-file");
  query_cmd->add_option("--bits", query_opt.bits,
                        "Inline query code as a 0/1 string");
  query_cmd->add_option("--n", query_opt.n, "Results per query")
      ->capture_default_str();

  hhf::cli::EvaluateOptions eval_opt;
  std::string judge = "single";
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute the metric suite");
  eval_cmd->add_option("--db", eval_opt.db, "Database HHFC code file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--queries", eval_opt.queries, "Query HHFC code file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd
      ->add_option("--latents", eval_opt.latents,
                   "Database latents CSV from `encode --latents`")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--n", eval_opt.n, "Cutoff N of mAP@N")
      ->capture_default_str();
  eval_cmd->add_option("--judge", judge, "Relevance: single or multi")
      ->capture_default_str();
  eval_cmd
      ->add_option("--cutoffs", eval_opt.cutoffs,
                   "Precision/recall cutoffs (default: every rank)")
      ->delimiter(',');
  eval_cmd->add_option("--out", eval_opt.out, "Output directory")->required();

  hhf::cli::CompareOptions compare_opt;
  auto* compare_cmd =
      app.add_subcommand("compare", "Train and evaluate loss variants");
  compare_cmd->add_option("--config", compare_opt.config, "Experiment INI file")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd
      ->add_option("--variants", compare_opt.variants,
                   "Variants as kind[+hhf][:key=value,...]; kinds: "
                   "proxy_anchor|pa, proxy_nca|nca, dhn, quantization")
      ->required();
  compare_cmd->add_option("--out", compare_opt.out, "Output directory")
      ->required();
  compare_cmd->add_option("--jobs", compare_opt.jobs, "Parallel cells")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*zeta_cmd) {
      hhf::cli::cmd_zeta_table(zeta_opt, std::cout);
    } else if (*train_cmd) {
      if (*seed_flag) train_opt.seed = train_seed;
      hhf::cli::cmd_train(train_opt, std::cout);
    } else if (*encode_cmd) {
      hhf::cli::cmd_encode(encode_opt, std::cout);
    } else if (*query_cmd) {
      if (*index_flag) query_opt.index = query_index;
      hhf::cli::cmd_query(query_opt, std::cout);
    } else if (*eval_cmd) {
      eval_opt.judge = hhf::parse_judge_mode(judge);
      hhf::cli::cmd_evaluate(eval_opt, std::cout);
    } else if (*compare_cmd) {
      return hhf::cli::cmd_compare(compare_opt, std::cout);
    }
  } catch (const hhf::DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (epoch " << e.epoch() << ", step "
              << e.step() << ")\n";
    return hhf::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hhf::cli::exit_code_for(e);
  }
  return 0;
}
