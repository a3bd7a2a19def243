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

#include "experiment.h"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hhf/code_bounds.h"
#include "hhf/error.h"

namespace hhf::cli {

JudgeMode ExperimentConfig::judge() const {
  if (eval.judge) return *eval.judge;
  return dataset.generator == Generator::kMultilabel ? JudgeMode::kMultiLabel
                                                     : JudgeMode::kSingleLabel;
}

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"dataset",
       {"generator", "classes", "per_class", "count", "labels_per_sample",
        "dim", "separation", "noise", "path", "seed", "protocol",
        "train_per_class", "query_per_class", "train_total", "query_total"}},
      {"encoder", {"hidden", "bits", "activation"}},
      {"training",
       {"epochs", "batch_size", "lr_encoder", "lr_proxy", "momentum",
        "weight_decay", "lr_decay_factor", "lr_decay_every"}},
      {"loss",
       {"kind", "hhf", "alpha", "gamma", "delta", "beta", "temperature",
        "quant_norm", "zeta", "zeta_table"}},
      {"eval", {"n", "judge", "cutoffs"}},
      {"experiment", {"seeds"}},
  };
  return keys;
}

// Typed access to one INI section with key-qualified error messages.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name)
      : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const char* key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  template <typename T>
  std::optional<T> number(const char* key) const {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    T value{};
    const char* first = text->data();
    const char* last = first + text->size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text->empty()) {
      throw ArgumentError(where(key) + ": cannot parse '" + *text + "'");
    }
    return value;
  }

  template <typename T>
  void read(const char* key, T& target) const {
    if (auto v = number<T>(key)) target = *v;
  }

  std::optional<bool> flag(const char* key) const {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    if (*text == "true" || *text == "on" || *text == "1") return true;
    if (*text == "false" || *text == "off" || *text == "0") return false;
    throw ArgumentError(where(key) + ": expected true/false, got '" + *text +
                        "'");
  }

  template <typename T>
  std::optional<std::vector<T>> list(const char* key) const {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    std::vector<T> out;
    std::stringstream ss(*text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok.erase(0, tok.find_first_not_of(" \t"));
      tok.erase(tok.find_last_not_of(" \t") + 1);
      if (tok.empty()) continue;
      T value{};
      const auto [ptr, ec] =
          std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ArgumentError(where(key) + ": bad list entry '" + tok + "'");
      }
      out.push_back(value);
    }
    return out;
  }

  std::string where(const char* key) const { return name_ + "." + key; }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

Section section(const pt::ptree& root, const std::string& name) {
  const auto child = root.get_child_optional(name);
  return Section(child ? &*child : nullptr, name);
}

void reject_unknown(const pt::ptree& root) {
  const auto& keys = known_keys();
  for (const auto& [name, child] : root) {
    const auto it = keys.find(name);
    if (it == keys.end()) {
      throw ArgumentError("unknown config section [" + name + "]");
    }
    for (const auto& [key, value] : child) {
      if (!it->second.count(key)) {
        throw ArgumentError("unknown config key " + name + "." + key);
      }
    }
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(
    std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " +
                     e.message());
  }
  reject_unknown(root);
  ExperimentConfig cfg;

  const Section ds = section(root, "dataset");
  if (auto g = ds.raw("generator")) {
    if (*g == "gaussian") {
      cfg.dataset.generator = Generator::kGaussian;
    } else if (*g == "multilabel") {
      cfg.dataset.generator = Generator::kMultilabel;
    } else if (*g == "file") {
      cfg.dataset.generator = Generator::kFile;
    } else {
      throw ArgumentError(
          "dataset.generator: expected gaussian|multilabel|"
          "file, got '" +
          *g + "'");
    }
  }
  ds.read("classes", cfg.dataset.classes);
  ds.read("per_class", cfg.dataset.per_class);
  ds.read("count", cfg.dataset.count);
  ds.read("labels_per_sample", cfg.dataset.labels_per_sample);
  ds.read("dim", cfg.dataset.dim);
  ds.read("separation", cfg.dataset.separation);
  ds.read("noise", cfg.dataset.noise);
  if (auto p = ds.raw("path")) {
    std::filesystem::path path(*p);
    cfg.dataset.path = path.is_absolute() ? path : base_dir / path;
  }
  if (auto s = ds.number<std::uint64_t>("seed")) cfg.dataset.seed = *s;
  SplitSpec& split = cfg.dataset.split;
  if (auto protocol = ds.raw("protocol")) {
    if (*protocol == "mini") {
      split = SplitSpec::mini(100, 20);
    } else if (*protocol != "full") {
      throw ArgumentError("dataset.protocol: expected mini|full, got '" +
                          *protocol + "'");
    }
  }
  if (auto v = ds.number<std::size_t>("train_per_class")) {
    split.train_per_class = *v;
    split.train_total.reset();
  }
  if (auto v = ds.number<std::size_t>("train_total")) {
    split.train_total = *v;
    split.train_per_class.reset();
  }
  if (auto v = ds.number<std::size_t>("query_per_class")) {
    split.query_per_class = *v;
    split.query_total.reset();
  }
  if (auto v = ds.number<std::size_t>("query_total")) {
    split.query_total = *v;
    split.query_per_class.reset();
  }
  if (cfg.dataset.generator == Generator::kFile && cfg.dataset.path.empty()) {
    throw ArgumentError("dataset.path is required for generator = file");
  }

  const Section enc = section(root, "encoder");
  if (auto h = enc.list<std::size_t>("hidden")) cfg.encoder.hidden = *h;
  enc.read("bits", cfg.encoder.bits);
  if (auto a = enc.raw("activation")) {
    try {
      cfg.encoder.activation = parse_activation(*a);
    } catch (const ArgumentError& e) {
      throw ArgumentError(std::string("encoder.activation: ") + e.what());
    }
  }

  const Section tr = section(root, "training");
  TrainConfig& t = cfg.train;
  tr.read("epochs", t.epochs);
  tr.read("batch_size", t.batch_size);
  tr.read("lr_encoder", t.lr_encoder);
  tr.read("lr_proxy", t.lr_proxy);
  tr.read("momentum", t.momentum);
  tr.read("weight_decay", t.weight_decay);
  tr.read("lr_decay_factor", t.lr_decay_factor);
  tr.read("lr_decay_every", t.lr_decay_every);

  const Section loss = section(root, "loss");
  if (auto k = loss.raw("kind")) t.loss.kind = parse_loss_kind(*k);
  if (auto h = loss.flag("hhf")) t.loss.hhf = *h;
  loss.read("alpha", t.loss.alpha);
  loss.read("gamma", t.loss.gamma);
  loss.read("delta", t.loss.delta);
  loss.read("beta", t.loss.beta);
  loss.read("temperature", t.loss.temperature);
  loss.read("quant_norm", t.loss.quant_norm);
  if (auto z = loss.number<double>("zeta")) t.loss.zeta = *z;
  if (auto p = loss.raw("zeta_table")) {
    std::filesystem::path path(*p);
    cfg.zeta_table = path.is_absolute() ? path : base_dir / path;
    if (!std::filesystem::exists(cfg.zeta_table)) {
      throw ArgumentError("loss.zeta_table: no such file '" +
                          cfg.zeta_table.string() + "'");
    }
  }
  t.validate();

  const Section ev = section(root, "eval");
  ev.read("n", cfg.eval.n);
  if (cfg.eval.n < 1) throw ArgumentError("eval.n must be >= 1");
  if (auto j = ev.raw("judge"); j && *j != "auto") {
    cfg.eval.judge = parse_judge_mode(*j);
  }
  if (auto c = ev.list<std::size_t>("cutoffs")) cfg.eval.cutoffs = *c;

  const Section ex = section(root, "experiment");
  if (auto s = ex.list<std::uint64_t>("seeds")) {
    if (s->empty()) throw ArgumentError("experiment.seeds is empty");
    cfg.seeds = *s;
  }
  if (cfg.dataset.generator == Generator::kFile &&
      !std::filesystem::exists(cfg.dataset.path)) {
    throw ArgumentError("dataset.path: no such file '" +
                        cfg.dataset.path.string() + "'");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_experiment_config(in, path.parent_path());
}

Variant parse_variant(const std::string& text) {
  Variant v;
  v.name = text;
  const auto colon = text.find(':');
  std::string head = text.substr(0, colon);
  const std::string suffix = "+hhf";
  if (head.size() > suffix.size() &&
      head.compare(head.size() - suffix.size(), suffix.size(), suffix) == 0) {
    v.hhf = true;
    head.resize(head.size() - suffix.size());
  }
  v.kind = parse_loss_kind(head);
  if (colon == std::string::npos) return v;
  static const std::set<std::string> keys = {
      "alpha", "gamma", "delta", "beta", "temperature", "quant_norm", "zeta"};
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    if (eq == std::string::npos || !keys.count(key)) {
      throw ArgumentError("variant '" + text + "': bad override '" + item +
                          "'");
    }
    const std::string val = item.substr(eq + 1);
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(val.data(), val.data() + val.size(), value);
    if (ec != std::errc() || ptr != val.data() + val.size() || val.empty()) {
      throw ArgumentError("variant '" + text + "': bad value for " + key);
    }
    v.overrides.emplace_back(key, value);
  }
  return v;
}

void Variant::apply(LossConfig& loss) const {
  loss.kind = kind;
  loss.hhf = hhf;
  for (const auto& [key, value] : overrides) {
    if (key == "alpha") loss.alpha = value;
    if (key == "gamma") loss.gamma = value;
    if (key == "delta") loss.delta = value;
    if (key == "beta") loss.beta = value;
    if (key == "temperature") loss.temperature = value;
    if (key == "quant_norm") loss.quant_norm = static_cast<int>(value);
    if (key == "zeta") loss.zeta = value;
  }
}

CellSeeds cell_seeds(const ExperimentConfig& cfg, std::uint64_t seed) {
  // SplitMix64 scrambling keeps the three streams unrelated.
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  const std::uint64_t data_root = cfg.dataset.seed.value_or(seed);
  return {mix(data_root), mix(data_root ^ 0x5851f42d4c957f2dULL),
          mix(seed ^ 0x2545f4914f6cdd1dULL)};
}

FeatureDataset build_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  const DatasetSection& d = cfg.dataset;
  const std::uint64_t s = cell_seeds(cfg, seed).data;
  switch (d.generator) {
    case Generator::kGaussian:
      return synth_gaussian(d.classes, d.per_class, d.dim, d.separation,
                            d.noise, s);
    case Generator::kMultilabel:
      return synth_multilabel(d.classes, d.count, d.dim, d.labels_per_sample, s,
                              {d.separation, d.noise});
    case Generator::kFile:
      return load_features(d.path.string());
  }
  throw ArgumentError("unknown generator");
}

Split build_split(const ExperimentConfig& cfg, std::uint64_t seed) {
  return split(build_dataset(cfg, seed), cfg.dataset.split,
               cell_seeds(cfg, seed).split);
}

void resolve_zeta(const ExperimentConfig& cfg, TrainConfig& train,
                  std::size_t num_classes) {
  if (train.loss.zeta || !train.loss.hhf || cfg.zeta_table.empty()) return;
  const ZetaTable table = load_table(cfg.zeta_table.string());
  if (auto z = table.lookup(cfg.encoder.bits, static_cast<int>(num_classes))) {
    train.loss.zeta = *z;
  }
}

TrainState train_model(const ExperimentConfig& cfg, const TrainConfig& train,
                       const Split& split, std::uint64_t seed) {
  EncoderConfig enc;
  enc.input_dim = split.train.dim();
  enc.hidden_dims = cfg.encoder.hidden;
  enc.hash_bits = cfg.encoder.bits;
  enc.activation = cfg.encoder.activation;
  enc.seed = cell_seeds(cfg, seed).encoder;
  TrainConfig t = train;
  resolve_zeta(cfg, t, split.train.num_classes);
  TrainState state = init_state(enc, t, split.train.num_classes);
  return hhf::train(std::move(state), split.train.features, split.train.labels);
}

CodeDatabase to_code_database(const EncodedSet& encoded,
                              const FeatureDataset& dataset) {
  CodeDatabase db(static_cast<int>(encoded.latents.cols()));
  for (std::size_t i = 0; i < encoded.codes.size(); ++i) {
    db.add(encoded.codes[i], dataset.labels[i], dataset.ids[i]);
  }
  return db;
}

CellResult run_cell(const ExperimentConfig& cfg, const Variant& variant,
                    std::uint64_t seed, const std::filesystem::path& out_dir) {
  CellResult result;
  result.variant = variant.name;
  result.seed = seed;
  const Split sp = build_split(cfg, seed);
  TrainConfig t = cfg.train;
  variant.apply(t.loss);
  t.validate();
  TrainState state;
  try {
    state = train_model(cfg, t, sp, seed);
  } catch (const DivergenceError& e) {
    result.error = e.what();
    return result;
  }
  const EncodedSet db_enc = encode_database(state, sp.database.features);
  const EncodedSet q_enc = encode_database(state, sp.query.features);
  const CodeDatabase db = to_code_database(db_enc, sp.database);
  const CodeDatabase queries = to_code_database(q_enc, sp.query);
  const EvalReport report =
      evaluate(queries, db, db_enc.latents, sp.database.labels, cfg.eval.n,
               RelevanceJudge{cfg.judge()}, cfg.eval.cutoffs);
  result.ok = true;
  result.map_at_n = report.map_at_n;
  result.hpe = report.hpe;
  result.eta_global = report.eta_global;
  result.eta_local = report.eta_local;

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint((out_dir / "checkpoint.bin").string(), state);
    write_history_csv((out_dir / "history.csv").string(), state.history);
    write_code_file((out_dir / "database.hhfc").string(), db);
    write_code_file((out_dir / "query.hhfc").string(), queries);
    std::ofstream json(out_dir / "report.json", std::ios::binary);
    write_report_json(json, report);
    std::ofstream pr(out_dir / "pr.csv", std::ios::binary);
    write_pr_csv(pr, report.curves);
    std::ofstream pa(out_dir / "precision_at.csv", std::ios::binary);
    write_precision_at_csv(pa, report.curves);
    if (!json || !pr || !pa) {
      throw IoError("cannot write reports under '" + out_dir.string() + "'");
    }
  }
  return result;
}

}  // namespace hhf::cli
