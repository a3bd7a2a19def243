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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli/commands.h"
#include "cli/experiment.h"
#include "gtest/gtest.h"
#include "hhf/code_bounds.h"
#include "hhf/error.h"
#include "nlohmann/json.hpp"

namespace hhf::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyConfig = R"([dataset]
generator = gaussian
classes = 4
per_class = 13
dim = 8
separation = 6
noise = 1
train_per_class = 8
query_per_class = 3

[encoder]
hidden = 16
bits = 8

[training]
epochs = 5
batch_size = 16
lr_encoder = 0.01

[loss]
kind = proxy_anchor
hhf = true

[eval]
n = 10

[experiment]
seeds = 1, 2
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ =
        fs::temp_directory_path() /
        ("hhf_cli_" +
         std::string(
             ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = write("tiny.ini", kTinyConfig);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  int run(const std::string& args) {
    const std::string cmd = std::string(HHF_BINARY) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  fs::path config_;
  std::ostringstream log_;
};

TEST_F(CliTest, ZetaTableIsReproducible) {
  ASSERT_EQ(run("zeta-table --max-bits 16 --max-classes 16 --out " +
                (dir_ / "a.tsv").string()),
            0);
  ASSERT_EQ(run("zeta-table --max-bits 16 --max-classes 16 --out " +
                (dir_ / "b.tsv").string()),
            0);
  EXPECT_EQ(slurp(dir_ / "a.tsv"), slurp(dir_ / "b.tsv"));
  const ZetaTable t = load_table((dir_ / "a.tsv").string());
  EXPECT_EQ(t.lookup(16, 2), -1.0);
  EXPECT_EQ(t, generate_table(16, 16));
  EXPECT_NE(slurp(dir_ / "stdout.txt").find("zeta"), std::string::npos);
}

TEST_F(CliTest, TrainIsFastDeterministicAndHhfMatters) {
  const auto start = std::chrono::steady_clock::now();
  cmd_train({config_, dir_ / "a", std::nullopt}, log_);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  EXPECT_LT(secs, 10.0);
  cmd_train({config_, dir_ / "b", std::nullopt}, log_);
  for (const char* f : {"checkpoint.bin", "history.csv", "train.hhff",
                        "query.hhff", "database.hhff"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  std::string off = kTinyConfig;
  off.replace(off.find("hhf = true"), 10, "hhf = false");
  cmd_train({write("off.ini", off), dir_ / "c", std::nullopt}, log_);
  EXPECT_NE(slurp(dir_ / "a" / "history.csv"),
            slurp(dir_ / "c" / "history.csv"));
  cmd_train({config_, dir_ / "d", 2}, log_);
  EXPECT_NE(slurp(dir_ / "a" / "checkpoint.bin"),
            slurp(dir_ / "d" / "checkpoint.bin"));
}

TEST_F(CliTest, EncodeQueryEvaluateAgreeWithLibrary) {
  cmd_train({config_, dir_ / "m", std::nullopt}, log_);
  const fs::path m = dir_ / "m";
  cmd_encode({m / "checkpoint.bin", m / "database.hhff", m / "db.hhfc",
              m / "db_latents.csv"},
             log_);
  cmd_encode({m / "checkpoint.bin", m / "query.hhff", m / "q.hhfc", {}}, log_);
  cmd_encode({m / "checkpoint.bin", m / "query.hhff", m / "q2.hhfc", {}}, log_);
  EXPECT_EQ(slurp(m / "q.hhfc"), slurp(m / "q2.hhfc"));

  const TrainState state = load_checkpoint((m / "checkpoint.bin").string());
  const FeatureDataset dbf = load_features((m / "database.hhff").string());
  const EncodedSet enc = encode_database(state, dbf.features);
  const CodeDatabase db = read_code_file((m / "db.hhfc").string());
  ASSERT_EQ(db.bits(), state.encoder.hash_bits);
  ASSERT_EQ(db.size(), dbf.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    EXPECT_EQ(db.code(i), enc.codes[i]);
    EXPECT_EQ(db.labels(i), dbf.labels[i]);
  }
  EXPECT_EQ(read_csv((m / "db_latents.csv").string()), enc.latents);

  const CodeDatabase q = read_code_file((m / "q.hhfc").string());
  std::ostringstream rows;
  cmd_query({m / "db.hhfc", m / "q.hhfc", std::nullopt, "", 5}, rows);
  std::ostringstream want;
  want << "query,rank,id,distance\n";
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto hits = top_n(q.code(i), db, 5);
    for (std::size_t r = 0; r < hits.size(); ++r) {
      want << i << ',' << r + 1 << ',' << hits[r].id << ',' << hits[r].distance
           << '\n';
    }
  }
  EXPECT_EQ(rows.str(), want.str());

  std::ostringstream self;
  cmd_query({m / "db.hhfc", {}, std::nullopt, db.code(7).to_bit_string(), 1000},
            self);
  std::istringstream lines(self.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(first.substr(first.rfind(',')), ",0");
  const std::string all_rows = self.str();
  EXPECT_EQ(std::count(all_rows.begin(), all_rows.end(), '\n'),
            static_cast<long>(db.size() + 1));

  const EvalReport r = cmd_evaluate({m / "db.hhfc",
                                     m / "q.hhfc",
                                     m / "db_latents.csv",
                                     10,
                                     JudgeMode::kSingleLabel,
                                     {},
                                     m / "eval"},
                                    log_);
  EXPECT_EQ(r.map_at_n, map_at_n(q, db, 10, {}));
  EXPECT_EQ(r.hpe, hpe(enc.latents));
  EXPECT_EQ(r.eta_global, eta_global(enc.latents, dbf.labels));
  EXPECT_EQ(r.eta_local, eta_local(enc.latents, dbf.labels));
  const auto j = nlohmann::json::parse(slurp(m / "eval" / "report.json"));
  for (const char* key :
       {"schema_version", "n", "judge", "num_queries", "num_database",
        "map_at_n", "hpe", "eta_global", "eta_local"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const EvalReport self_eval = cmd_evaluate({m / "db.hhfc",
                                             m / "db.hhfc",
                                             m / "db_latents.csv",
                                             1,
                                             JudgeMode::kSingleLabel,
                                             {},
                                             m / "eval_self"},
                                            log_);
  // Duplicate codes across classes can outrank the query itself.
  EXPECT_GT(self_eval.map_at_n, 0.5);
}

TEST_F(CliTest, CompareStructureAndDeterminism) {
  CompareOptions opt{config_, {"pa", "pa+hhf"}, dir_ / "x", 2};
  EXPECT_EQ(cmd_compare(opt, log_), kExitOk);
  opt.out = dir_ / "y";
  opt.jobs = 1;
  EXPECT_EQ(cmd_compare(opt, log_), kExitOk);
  const std::string table = slurp(dir_ / "x" / "comparison.csv");
  EXPECT_EQ(table, slurp(dir_ / "y" / "comparison.csv"));
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "variant,seed,status,map_at_n,hpe,eta_global,eta_local");
  std::vector<std::string> prefixes;
  while (std::getline(in, line)) {
    prefixes.push_back(line.substr(0, line.find(",ok")));
  }
  EXPECT_EQ(prefixes,
            (std::vector<std::string>{"pa,1", "pa,2", "pa+hhf,1", "pa+hhf,2",
                                      "pa,median", "pa+hhf,median"}));
  for (const char* f : {"checkpoint.bin", "database.hhfc", "query.hhfc",
                        "report.json", "history.csv"}) {
    const fs::path rel = fs::path("cells") / "pa_hhf" / "seed_2" / f;
    EXPECT_EQ(slurp(dir_ / "x" / rel), slurp(dir_ / "y" / rel)) << f;
    EXPECT_FALSE(slurp(dir_ / "x" / rel).empty()) << f;
  }
  EXPECT_THROW(cmd_compare({config_, {"pa"}, dir_ / "z", 1}, log_),
               ArgumentError);
}

TEST_F(CliTest, ConfigParsing) {
  const ExperimentConfig cfg = load_experiment_config(config_);
  EXPECT_EQ(cfg.dataset.classes, 4u);
  EXPECT_EQ(cfg.encoder.hidden, std::vector<std::size_t>{16});
  EXPECT_EQ(cfg.train.epochs, 5);
  EXPECT_EQ(cfg.train.loss.kind, LossKind::kProxyAnchor);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(cfg.train.loss.delta, 0.2);
  std::istringstream unknown("[loss]\nbogus = 1\n");
  EXPECT_THROW(parse_experiment_config(unknown, dir_), ArgumentError);
  std::istringstream bad_zeta("[loss]\nzeta = 1.5\n");
  EXPECT_THROW(parse_experiment_config(bad_zeta, dir_), ArgumentError);
  std::istringstream missing_table("[loss]\nzeta_table = nope.tsv\n");
  EXPECT_THROW(parse_experiment_config(missing_table, dir_), Error);
}

TEST_F(CliTest, ZetaResolutionOrder) {
  ExperimentConfig cfg = load_experiment_config(config_);
  TrainConfig t = cfg.train;
  resolve_zeta(cfg, t, 4);
  EXPECT_FALSE(t.loss.zeta.has_value());
  ZetaTable table;
  table.set(8, 4, 0.125);
  export_table(table, (dir_ / "z.tsv").string());
  cfg.zeta_table = dir_ / "z.tsv";
  t = cfg.train;
  resolve_zeta(cfg, t, 4);
  EXPECT_EQ(t.loss.zeta, 0.125);
  cfg.train.loss.zeta = -0.5;
  t = cfg.train;
  resolve_zeta(cfg, t, 4);
  EXPECT_EQ(t.loss.zeta, -0.5);
}

TEST(ShippedConfigs, Load) {
  int loaded = 0;
  for (const auto& entry : fs::directory_iterator(HHF_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    const ExperimentConfig cfg = load_experiment_config(entry.path());
    EXPECT_NO_THROW(build_split(cfg, cfg.seeds.front())) << entry.path();
    ++loaded;
  }
  EXPECT_GE(loaded, 2);
}

TEST(Variants, Parsing) {
  const Variant v = parse_variant("pa+hhf:delta=0.4,beta=0.5");
  EXPECT_EQ(v.kind, LossKind::kProxyAnchor);
  EXPECT_TRUE(v.hhf);
  LossConfig loss;
  v.apply(loss);
  EXPECT_EQ(loss.delta, 0.4);
  EXPECT_EQ(loss.beta, 0.5);
  EXPECT_TRUE(loss.hhf);
  EXPECT_FALSE(parse_variant("nca").hhf);
  EXPECT_THROW(parse_variant("pa+hhf:bogus=1"), ArgumentError);
  EXPECT_THROW(parse_variant("triplet"), ArgumentError);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("zeta-table"), 1);
  EXPECT_EQ(run("zeta-table --max-bits 0 --out " + (dir_ / "z.tsv").string()),
            1);
  EXPECT_EQ(run("train --config " + config_.string() + " --out " +
                (dir_ / "t").string()),
            0);
  const fs::path t = dir_ / "t";
  // Query features have the wrong dimension for this checkpoint.
  FeatureDataset wrong = synth_gaussian(2, 3, 5, 1.0, 1.0, 1);
  save_features((dir_ / "wrong.hhff").string(), wrong);
  EXPECT_EQ(run("encode --checkpoint " + (t / "checkpoint.bin").string() +
                " --features " + (dir_ / "wrong.hhff").string() + " --out " +
                (dir_ / "w.hhfc").string()),
            2);
  write("garbage.hhfc", "not a code file");
  EXPECT_EQ(
      run("query --db " + (dir_ / "garbage.hhfc").string() + " --bits 0101"),
      2);
  std::string diverge = kTinyConfig;
  diverge.replace(diverge.find("lr_encoder = 0.01"), 17, "lr_encoder = 1e300");
  EXPECT_EQ(run("train --config " + write("div.ini", diverge).string() +
                " --out " + (dir_ / "d").string()),
            3);
  EXPECT_NE(slurp(dir_ / "stderr.txt").find("epoch"), std::string::npos);
}

}  // namespace
}  // namespace hhf::cli
