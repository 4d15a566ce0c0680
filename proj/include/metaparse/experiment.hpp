#pragma once

// Multi-stage experiment driver shared by the command-line tool and the
// acceptance runner. All artifacts live under output_dir and depend only on
// the configuration and the seed.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metaparse/checkpoint.hpp"
#include "metaparse/conllu.hpp"
#include "metaparse/evaluate.hpp"
#include "metaparse/meta_learn.hpp"
#include "metaparse/model.hpp"
#include "metaparse/synthlang.hpp"
#include "metaparse/typology.hpp"

namespace metaparse {

inline constexpr const char* kVersion = "0.1.0";

/// Baselines and models understood by the driver.
inline const std::vector<std::string>& known_models() {
  static const std::vector<std::string> m{"pretrained", "maml", "ne", "maml_no_pretrain", "meta_test_only"};
  return m;
}

struct TreebankSource {
  std::string language;
  std::string train;  // path, may be empty for validation / test roles
  std::string test;

  nlohmann::json to_json() const {
    nlohmann::json j{{"language", language}};
    if (!train.empty()) j["train"] = train;
    if (!test.empty()) j["test"] = test;
    return j;
  }

  static TreebankSource from_json(const nlohmann::json& j) {
    TreebankSource s;
    s.language = j.at("language").get<std::string>();
    s.train = j.value("train", std::string());
    s.test = j.value("test", std::string());
    return s;
  }
};

struct SyntheticLanguage {
  GrammarSpec grammar;
  std::size_t train_sentences = 0;
  std::size_t test_sentences = 0;
};

/// Meta-test fine-tuning for one model; unset fields fall back to meta.inner_lr / meta.inner_steps.
struct TestAdaptation {
  std::optional<GroupRates> lr;
  std::optional<std::size_t> steps;
};

struct ExperimentConfig {
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::size_t> support_sizes{20, 40, 80};
  std::size_t repetitions = 3;
  std::size_t vocab_min_freq = 2;
  std::string vocab_sources = "training";  // or "all"
  std::size_t max_test_sentences = 0;      // 0 keeps every test sentence
  std::vector<std::string> models = known_models();
  std::uint64_t synth_seed = 1;
  std::vector<SyntheticLanguage> synthetic;
  TreebankSource pretrain;
  std::vector<TreebankSource> meta_train;
  std::vector<TreebankSource> meta_validation;
  std::vector<TreebankSource> meta_test;
  std::string typology_csv;
  ParserConfig model;
  MetaConfig meta;
  std::map<std::string, TestAdaptation> test_adaptation;

  bool runs(const std::string& m) const { return std::find(models.begin(), models.end(), m) != models.end(); }

  /// Expands the "{output_dir}" placeholder.
  std::string resolve(const std::string& path) const {
    std::string out = path;
    const std::string key = "{output_dir}";
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key)) out.replace(pos, key.size(), output_dir);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json synth_langs = nlohmann::json::array();
    for (const auto& s : synthetic)
      synth_langs.push_back({{"grammar", s.grammar.to_json()}, {"train_sentences", s.train_sentences}, {"test_sentences", s.test_sentences}});
    auto list = [](const std::vector<TreebankSource>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& s : v) a.push_back(s.to_json());
      return a;
    };
    nlohmann::json m = model.to_json();
    m.erase("words");
    m.erase("labels");
    nlohmann::json adapt = nlohmann::json::object();
    for (const auto& [name, a] : test_adaptation) {
      nlohmann::json e = nlohmann::json::object();
      if (a.lr) e["inner_lr"] = rates_json(*a.lr);
      if (a.steps) e["inner_steps"] = *a.steps;
      adapt[name] = e;
    }
    return {{"output_dir", output_dir},
            {"seeds", seeds},
            {"support_sizes", support_sizes},
            {"repetitions", repetitions},
            {"vocab_min_freq", vocab_min_freq},
            {"vocab_sources", vocab_sources},
            {"max_test_sentences", max_test_sentences},
            {"models", models},
            {"synthetic", {{"seed", synth_seed}, {"languages", synth_langs}}},
            {"treebanks",
             {{"pretrain", pretrain.to_json()},
              {"meta_train", list(meta_train)},
              {"meta_validation", list(meta_validation)},
              {"meta_test", list(meta_test)}}},
            {"typology", typology_csv},
            {"model", m},
            {"meta", meta.to_json()},
            {"test_adaptation", adapt}};
  }

  /// Hash of everything except output_dir, so relocated runs share it.
  std::uint64_t hash() const {
    nlohmann::json j = to_json();
    j.erase("output_dir");
    const std::string s = j.dump();
    return string_seed(s);
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
      c.output_dir = j.value("output_dir", c.output_dir);
      if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      if (j.contains("support_sizes")) c.support_sizes = j.at("support_sizes").get<std::vector<std::size_t>>();
      c.repetitions = j.value("repetitions", c.repetitions);
      c.vocab_min_freq = j.value("vocab_min_freq", c.vocab_min_freq);
      c.vocab_sources = j.value("vocab_sources", c.vocab_sources);
      c.max_test_sentences = j.value("max_test_sentences", c.max_test_sentences);
      if (j.contains("models")) c.models = j.at("models").get<std::vector<std::string>>();
      if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        c.synth_seed = s.value("seed", c.synth_seed);
        for (const auto& l : s.value("languages", nlohmann::json::array())) {
          SyntheticLanguage sl;
          sl.grammar = GrammarSpec::from_json(l.at("grammar"));
          sl.train_sentences = l.value("train_sentences", std::size_t{0});
          sl.test_sentences = l.value("test_sentences", std::size_t{0});
          c.synthetic.push_back(std::move(sl));
        }
      }
      if (j.contains("treebanks")) {
        const auto& t = j.at("treebanks");
        if (t.contains("pretrain")) c.pretrain = TreebankSource::from_json(t.at("pretrain"));
        auto list = [&](const char* key, std::vector<TreebankSource>& out) {
          if (!t.contains(key)) return;
          for (const auto& s : t.at(key)) out.push_back(TreebankSource::from_json(s));
        };
        list("meta_train", c.meta_train);
        list("meta_validation", c.meta_validation);
        list("meta_test", c.meta_test);
      }
      c.typology_csv = j.value("typology", std::string());
      if (j.contains("model")) {
        nlohmann::json m = j.at("model");
        m.erase("words");
        m.erase("labels");
        c.model = ParserConfig::from_json(m);
      }
      if (j.contains("meta")) c.meta = MetaConfig::from_json(j.at("meta"));
      const nlohmann::json adapt = j.value("test_adaptation", nlohmann::json::object());
      for (const auto& [name, e] : adapt.items()) {
        TestAdaptation a;
        if (e.contains("inner_lr")) a.lr = rates_from_json(e.at("inner_lr"), "test_adaptation.inner_lr");
        if (e.contains("inner_steps")) a.steps = e.at("inner_steps").get<std::size_t>();
        c.test_adaptation[name] = a;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("experiment config: ") + e.what());
    }
    c.validate(false);
    return c;
  }

  /// With check_paths, every referenced treebank must exist.
  void validate(bool check_paths) const {
    if (seeds.empty()) throw ConfigError("seeds must be non-empty");
    if (support_sizes.empty()) throw ConfigError("support_sizes must be non-empty");
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (vocab_sources != "training" && vocab_sources != "all") throw ConfigError("vocab_sources must be 'training' or 'all'");
    for (const auto& m : models)
      if (std::find(known_models().begin(), known_models().end(), m) == known_models().end())
        throw ConfigError("unknown model '" + m + "'");
    if (pretrain.language.empty() || pretrain.train.empty()) throw ConfigError("treebanks.pretrain needs a language and a train path");
    if (meta_train.empty()) throw ConfigError("treebanks.meta_train must list at least one language");
    for (const auto& s : meta_train)
      if (s.train.empty()) throw ConfigError("meta_train language '" + s.language + "' needs a train path");
    for (const auto* role : {&meta_validation, &meta_test})
      for (const auto& s : *role)
        if (s.test.empty() && s.train.empty()) throw ConfigError("language '" + s.language + "' has no treebank path");
    if (meta_test.empty()) throw ConfigError("treebanks.meta_test must list at least one language");
    meta.validate();
    for (const auto& [name, a] : test_adaptation) {
      if (std::find(known_models().begin(), known_models().end(), name) == known_models().end())
        throw ConfigError("test_adaptation: unknown model '" + name + "'");
      if (a.steps && *a.steps == 0) throw ConfigError("test_adaptation." + name + ".inner_steps must be positive");
      if (a.lr && (a.lr->encoder < 0 || a.lr->decoder < 0)) throw ConfigError("test_adaptation." + name + ".inner_lr must be non-negative");
    }
    if (model.d_model == 0 || model.d_arc == 0 || model.d_tag == 0) throw ConfigError("model dimensions must be positive");
    if (check_paths) {
      auto need = [this](const std::string& p) {
        if (!p.empty() && !std::filesystem::exists(resolve(p))) throw DataError("missing input file '" + resolve(p) + "'");
      };
      need(pretrain.train);
      need(pretrain.test);
      for (const auto* role : {&meta_train, &meta_validation, &meta_test})
        for (const auto& s : *role) {
          need(s.train);
          need(s.test);
        }
      need(typology_csv);
    }
  }
};

/// Applies "a.b.c=value" overrides; the value is parsed as JSON when
/// possible, otherwise taken as a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  std::string pointer = "/";
  for (char ch : key) pointer += ch == '.' ? '/' : ch;
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  j[nlohmann::json::json_pointer(pointer)] = value;
}

inline ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return ExperimentConfig::from_json(j);
}

// ---------------------------------------------------------------------------
// Artifact layout

inline std::string seed_dir(const ExperimentConfig& c, std::uint64_t seed) {
  return c.output_dir + "/seed-" + std::to_string(seed);
}
inline std::string checkpoint_path(const ExperimentConfig& c, std::uint64_t seed, const std::string& model) {
  return seed_dir(c, seed) + "/" + model + ".ckpt.json";
}
inline std::string telemetry_path(const ExperimentConfig& c, std::uint64_t seed, const std::string& model) {
  return seed_dir(c, seed) + "/" + model + ".telemetry.jsonl";
}
inline std::string reports_path(const ExperimentConfig& c, std::uint64_t seed) { return seed_dir(c, seed) + "/reports.json"; }
inline std::string synth_path(const ExperimentConfig& c, const std::string& language, const std::string& part) {
  return c.output_dir + "/data/" + language + "-" + part + ".conllu";
}

inline void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

/// Writes `<artifact>.manifest.json` next to the artifact.
inline void write_manifest(const std::string& artifact, const ExperimentConfig& c, std::optional<std::uint64_t> seed,
                           const std::string& command, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json m{{"artifact", std::filesystem::path(artifact).filename().string()},
                   {"command", command},
                   {"config_hash", hash_hex(c.hash())},
                   {"versions", {{"metaparse", kVersion}, {"compiler", __VERSION__}, {"real_bits", 8 * sizeof(real)}}}};
  if (seed) m["seed"] = *seed;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_file(artifact + ".manifest.json", m.dump(2) + "\n");
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot write '" + path + "'");
  }
  void operator()(const nlohmann::json& j) { out_ << j.dump() << '\n'; }
  Telemetry sink() {
    return [this](const nlohmann::json& j) { (*this)(j); };
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Data

struct ExperimentData {
  Treebank pretrain;
  std::vector<Treebank> meta_train;
  std::vector<TestLanguage> validation;
  std::vector<TestLanguage> test;
};

inline Treebank load_treebank(const ExperimentConfig& c, const std::string& path, const std::string& language) {
  if (path.empty()) return Treebank{language, {}, {}};
  Treebank tb = read_conllu(c.resolve(path), ConlluOptions{}, language);
  if (tb.empty()) throw DataError("treebank '" + c.resolve(path) + "' has no usable sentences");
  return tb;
}

inline ExperimentData load_data(const ExperimentConfig& c) {
  c.validate(true);
  ExperimentData d;
  d.pretrain = load_treebank(c, c.pretrain.train, c.pretrain.language);
  for (const auto& s : c.meta_train) d.meta_train.push_back(load_treebank(c, s.train, s.language));
  auto test_lang = [&](const TreebankSource& s, std::size_t cap) {
    TestLanguage t{s.language, load_treebank(c, s.train, s.language), load_treebank(c, s.test, s.language)};
    if (t.test.empty()) std::swap(t.train, t.test);  // only one file: it is the evaluation pool
    if (cap > 0 && t.test.size() > cap) t.test.sentences.resize(cap);
    return t;
  };
  for (const auto& s : c.meta_validation) d.validation.push_back(test_lang(s, 0));
  for (const auto& s : c.meta_test) d.test.push_back(test_lang(s, c.max_test_sentences));
  return d;
}

/// Architecture from the config plus vocabularies from the data: words from
/// the training sources (or every treebank with vocab_sources = "all"),
/// labels from every configured treebank.
inline ParserConfig parser_config(const ExperimentConfig& c, const ExperimentData& d) {
  ParserConfig p = c.model;
  std::vector<const Treebank*> training{&d.pretrain};
  for (const auto& t : d.meta_train) training.push_back(&t);
  std::vector<const Treebank*> all = training;
  for (const auto* role : {&d.validation, &d.test})
    for (const auto& t : *role) {
      all.push_back(&t.train);
      all.push_back(&t.test);
    }
  p.words = build_word_vocab(c.vocab_sources == "all" ? all : training, c.vocab_min_freq);
  p.labels = build_label_vocab(all);
  p.validate();
  return p;
}

inline MetaConfig seeded_meta(const ExperimentConfig& c, std::uint64_t seed) {
  MetaConfig m = c.meta;
  m.seed = seed;
  return m;
}

/// As seeded_meta, with the model's meta-test fine-tuning rate and steps.
inline MetaConfig test_meta(const ExperimentConfig& c, std::uint64_t seed, const std::string& model) {
  MetaConfig m = seeded_meta(c, seed);
  auto it = c.test_adaptation.find(model);
  if (it == c.test_adaptation.end()) return m;
  if (it->second.lr) m.inner_lr = *it->second.lr;
  if (it->second.steps) m.inner_steps = *it->second.steps;
  return m;
}

// ---------------------------------------------------------------------------
// Stages

/// Writes train/test CoNLL-U per synthetic language plus a typology CSV
/// derived from the grammars. Returns the written paths.
inline std::vector<std::string> run_synth(const ExperimentConfig& c) {
  if (c.synthetic.empty()) throw ConfigError("config has no synthetic languages");
  std::vector<std::string> written;
  TypologyTable typ;
  for (const auto& s : c.synthetic) {
    const auto& g = s.grammar;
    const std::uint64_t base = mix_seed(c.synth_seed, string_seed(g.language));
    for (const auto& [part, n, salt] : {std::tuple{"train", s.train_sentences, 0}, std::tuple{"test", s.test_sentences, 1}}) {
      if (n == 0) continue;
      const std::string path = synth_path(c, g.language, part);
      ensure_parent(path);
      write_file(path, emit_conllu(generate_treebank(g, n, mix_seed(base, static_cast<std::uint64_t>(salt))).treebank));
      write_manifest(path, c, std::nullopt, "synth", {{"language", g.language}, {"sentences", n}});
      written.push_back(path);
    }
    typ.add(typology_of(g));
  }
  const std::string tpath = c.output_dir + "/data/typology.csv";
  write_file(tpath, typ.to_csv());
  write_manifest(tpath, c, std::nullopt, "synth");
  written.push_back(tpath);
  return written;
}

inline void run_pretrain(const ExperimentConfig& c, std::uint64_t seed) {
  ExperimentData d = load_data(c);
  ParserParams init = ParserParams::initialize(parser_config(c, d), mix_seed(seed, 11));
  std::filesystem::create_directories(seed_dir(c, seed));
  JsonlWriter log(telemetry_path(c, seed, "pretrained"));
  auto r = pretrain(init, init.encode_treebank(d.pretrain), seeded_meta(c, seed), log.sink());
  const std::string path = checkpoint_path(c, seed, "pretrained");
  save_checkpoint(path, r.model, {{"seed", seed}, {"stage", "pretrain"}});
  write_manifest(path, c, seed, "pretrain", {{"model_config_hash", hash_hex(r.model.config().hash())}});
}

inline ParserParams load_stage(const ExperimentConfig& c, const ExperimentData& d, std::uint64_t seed, const std::string& model) {
  const std::string path = checkpoint_path(c, seed, model);
  if (!std::filesystem::exists(path)) throw DataError("missing checkpoint '" + path + "'; run the earlier stage first");
  return load_checkpoint(path, parser_config(c, d));
}

inline void save_stage(const ExperimentConfig& c, std::uint64_t seed, const std::string& model, const TrainResult<ParserParams>& r) {
  const std::string path = checkpoint_path(c, seed, model);
  save_checkpoint(path, r.best, {{"seed", seed}, {"stage", model}, {"best_step", r.best_step}, {"steps", r.steps}});
  write_manifest(path, c, seed, model, {{"model_config_hash", hash_hex(r.best.config().hash())}, {"best_step", r.best_step}});
}

/// Meta-trains from the pre-trained checkpoint ("maml") and, when listed,
/// from scratch with the pre-training language added ("maml_no_pretrain").
inline void run_metatrain(const ExperimentConfig& c, std::uint64_t seed) {
  ExperimentData d = load_data(c);
  const MetaConfig m = seeded_meta(c, seed);
  if (c.runs("maml")) {
    ParserParams theta = load_stage(c, d, seed, "pretrained");
    EpisodeSampler<EncodedSentence> sampler(encode_pools(theta, d.meta_train), m.support_size, m.query_size, m.train_fraction, seed);
    JsonlWriter log(telemetry_path(c, seed, "maml"));
    save_stage(c, seed, "maml", meta_train(theta, sampler, m, m.episodes_per_language, make_validator(d.validation, test_meta(c, seed, "maml")), log.sink()));
  }
  if (c.runs("maml_no_pretrain")) {
    ParserParams init = ParserParams::initialize(parser_config(c, d), mix_seed(seed, 13));
    std::filesystem::create_directories(seed_dir(c, seed));
    JsonlWriter log(telemetry_path(c, seed, "maml_no_pretrain"));
    auto validator = make_validator(d.validation, test_meta(c, seed, "maml_no_pretrain"));
    save_stage(c, seed, "maml_no_pretrain", maml_without_pretraining(init, d.pretrain, d.meta_train, m, validator, log.sink()));
  }
}

inline void run_train_ne(const ExperimentConfig& c, std::uint64_t seed) {
  ExperimentData d = load_data(c);
  const MetaConfig m = seeded_meta(c, seed);
  ParserParams theta = load_stage(c, d, seed, "pretrained");
  EpisodeSampler<EncodedSentence> sampler(encode_pools(theta, d.meta_train), m.support_size, m.query_size, m.train_fraction, seed);
  JsonlWriter log(telemetry_path(c, seed, "ne"));
  auto validator = make_validator(d.validation, test_meta(c, seed, "ne"));
  save_stage(c, seed, "ne", non_episodic_train(theta, sampler, m, m.episodes_per_language, validator, log.sink()));
}

/// Every listed model on every meta-test language and support size. The
/// support samples depend on (seed, language, |S|, repetition) only, so the
/// models are compared on identical supports.
inline std::vector<EvalReport> run_metatest(const ExperimentConfig& c, std::uint64_t seed) {
  ExperimentData d = load_data(c);
  std::vector<EvalReport> all;
  for (const auto& name : known_models()) {
    if (!c.runs(name)) continue;
    const MetaConfig m = test_meta(c, seed, name);
    ParserParams theta = name == "meta_test_only" ? meta_test_only(parser_config(c, d), mix_seed(seed, 17)) : load_stage(c, d, seed, name);
    for (const auto& lang : d.test)
      for (std::size_t s : c.support_sizes) {
        auto r = meta_test(theta, lang, s, m, c.repetitions, seed, name);
        all.insert(all.end(), r.begin(), r.end());
      }
  }
  const std::string path = reports_path(c, seed);
  ensure_parent(path);
  write_file(path, reports_to_json(all).dump(1) + "\n");
  write_manifest(path, c, seed, "metatest", {{"reports", all.size()}});
  return all;
}

inline std::vector<EvalReport> load_all_reports(const ExperimentConfig& c) {
  std::vector<EvalReport> all;
  for (auto seed : c.seeds) {
    const std::string path = reports_path(c, seed);
    if (!std::filesystem::exists(path)) throw DataError("missing reports '" + path + "'; run metatest first");
    auto r = reports_from_json(nlohmann::json::parse(read_file(path)));
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

// ---------------------------------------------------------------------------
// Reporting

/// Seed-level means: repetitions averaged within each seed.
struct SeedTable {
  // [language][model][|S|][seed] -> (LAS, UAS)
  std::map<std::string, std::map<std::string, std::map<std::size_t, std::map<std::uint64_t, std::pair<double, double>>>>> cells;

  std::vector<double> las(const std::string& lang, const std::string& model, std::size_t s) const {
    std::vector<double> v;
    for (const auto& [seed, x] : cells.at(lang).at(model).at(s)) v.push_back(x.first);
    return v;
  }
};

inline SeedTable seed_table(const std::vector<EvalReport>& reports) {
  std::map<std::string, std::map<std::string, std::map<std::size_t, std::map<std::uint64_t, std::vector<std::pair<double, double>>>>>> raw;
  for (const auto& r : reports) raw[r.language][r.model][r.support_size][r.seed].emplace_back(r.las, r.uas);
  SeedTable t;
  for (const auto& [l, a] : raw)
    for (const auto& [m, b] : a)
      for (const auto& [s, c] : b)
        for (const auto& [seed, v] : c) {
          double x = 0, y = 0;
          for (const auto& [p, q] : v) {
            x += p;
            y += q;
          }
          t.cells[l][m][s][seed] = {x / static_cast<double>(v.size()), y / static_cast<double>(v.size())};
        }
  return t;
}

/// language x model x |S| table with mean and std over seeds.
inline std::string results_csv(const SeedTable& t) {
  std::string out = "language,model,support_size,seeds,mean_las,std_las,mean_uas\n";
  for (const auto& [l, a] : t.cells)
    for (const auto& [m, b] : a)
      for (const auto& [s, c] : b) {
        std::vector<double> las, uas;
        for (const auto& [seed, x] : c) {
          las.push_back(x.first);
          uas.push_back(x.second);
        }
        out += l + "," + m + "," + std::to_string(s) + "," + std::to_string(c.size()) + "," + format_number(mean(las), 2) + "," +
               format_number(sample_std(las), 2) + "," + format_number(mean(uas), 2) + "\n";
      }
  return out;
}

/// MAML against every other model per language and |S|: paired t-test over
/// seeds (Bonferroni over the test languages) and a sign test.
inline std::string comparisons_csv(const SeedTable& t) {
  std::string out = "language,support_size,model,baseline,mean_diff,t,p,threshold,significant,wins,losses,sign_p\n";
  const std::size_t m = t.cells.size();
  for (const auto& [l, a] : t.cells) {
    if (!a.count("maml")) continue;
    for (const auto& [base, b] : a) {
      if (base == "maml") continue;
      for (const auto& [s, c] : b) {
        if (!a.at("maml").count(s)) continue;
        const auto x = t.las(l, "maml", s), y = t.las(l, base, s);
        if (x.size() != y.size()) continue;
        std::vector<double> diff;
        for (std::size_t i = 0; i < x.size(); ++i) diff.push_back(x[i] - y[i]);
        std::string tt = ",,,,";
        if (x.size() >= 2) {
          auto r = paired_ttest(x, y, m);
          tt = format_number(r.t) + "," + format_number(r.p) + "," + format_number(r.threshold, 6) + "," + (r.significant ? "1" : "0");
        }
        auto sg = sign_test(x, y);
        out += l + "," + std::to_string(s) + ",maml," + base + "," + format_number(mean(diff), 2) + "," + tt + "," +
               std::to_string(sg.wins) + "," + std::to_string(sg.losses) + "," + format_number(sg.p) + "\n";
      }
    }
  }
  return out;
}

inline void run_report(const ExperimentConfig& c) {
  SeedTable t = seed_table(load_all_reports(c));
  const std::string dir = c.output_dir + "/report";
  std::filesystem::create_directories(dir);
  write_file(dir + "/results.csv", results_csv(t));
  write_manifest(dir + "/results.csv", c, std::nullopt, "report");
  write_file(dir + "/comparisons.csv", comparisons_csv(t));
  write_manifest(dir + "/comparisons.csv", c, std::nullopt, "report");
}

// ---------------------------------------------------------------------------
// Typology and projectivity analyses

inline TypologyTable experiment_typology(const ExperimentConfig& c) {
  if (!c.typology_csv.empty()) return TypologyTable::parse_csv(read_file(c.resolve(c.typology_csv)));
  TypologyTable t;
  for (const auto& s : c.synthetic) t.add(typology_of(s.grammar));
  if (t.languages().empty()) throw ConfigError("analysis needs a typology CSV or synthetic grammars");
  return t;
}

/// gain = model LAS - pre-trained baseline LAS at the smallest |S|, seed-averaged.
inline GainTable experiment_gains(const ExperimentConfig& c, const SeedTable& t) {
  const std::size_t s = *std::min_element(c.support_sizes.begin(), c.support_sizes.end());
  GainTable g;
  for (const auto& [l, a] : t.cells) {
    if (!a.count("pretrained")) throw DataError("analysis needs reports for the 'pretrained' baseline");
    const double base = mean(t.las(l, "pretrained", s));
    for (const auto& [m, b] : a) {
      if (m == "pretrained" || !b.count(s)) continue;
      g[m][l] = mean(t.las(l, m, s)) - base;
    }
  }
  return g;
}

inline void run_analyze(const ExperimentConfig& c) {
  ExperimentData d = load_data(c);
  SeedTable t = seed_table(load_all_reports(c));
  GainTable gains = experiment_gains(c, t);
  TypologyTable typ = experiment_typology(c);

  std::vector<std::string> training{c.pretrain.language};
  for (const auto& s : c.meta_train) training.push_back(s.language);
  std::map<std::string, std::map<std::string, double>> sims;
  for (const auto& tr : training) {
    if (!typ.has(tr)) continue;
    for (const auto& te : d.test)
      if (typ.has(te.language)) sims[tr][te.language] = cosine_similarity(typ.vector(tr), typ.vector(te.language));
  }
  std::map<std::string, double> nonproj;
  for (const auto& te : d.test) {
    Treebank all = te.test;
    all.sentences.insert(all.sentences.end(), te.train.sentences.begin(), te.train.sentences.end());
    nonproj[te.language] = projectivity_stats(all);
  }
  std::vector<std::pair<std::string, FeatureAnalysis>> features;
  std::vector<std::pair<std::string, ProjectivityAnalysis>> proj;
  for (const auto& [m, g] : gains) {
    features.emplace_back(m, correlate_gain_features(g, typ, c.pretrain.language));
    proj.emplace_back(m, correlate_gain_projectivity(g, nonproj));
  }
  const std::string dir = c.output_dir + "/report";
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> files{{"fig3_sim.csv", similarity_csv(correlate_gain_similarity(gains, sims))},
                                                               {"fig4_features.csv", features_csv(features)},
                                                               {"fig5_projectivity.csv", projectivity_csv(proj)}};
  for (const auto& [name, body] : files) {
    write_file(dir + "/" + name, body);
    write_manifest(dir + "/" + name, c, std::nullopt, "analyze");
  }
}

/// Synthesis (when configured), every per-seed stage, report and, with at
/// least three meta-test languages, the analyses.
inline void run_pipeline(const ExperimentConfig& c, const std::function<void(const std::string&)>& progress = {}) {
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };
  if (!c.synthetic.empty()) {
    note("synth");
    run_synth(c);
  }
  for (auto seed : c.seeds) {
    note("seed " + std::to_string(seed) + ": pretrain");
    run_pretrain(c, seed);
    note("seed " + std::to_string(seed) + ": metatrain");
    run_metatrain(c, seed);
    if (c.runs("ne")) {
      note("seed " + std::to_string(seed) + ": train-ne");
      run_train_ne(c, seed);
    }
    note("seed " + std::to_string(seed) + ": metatest");
    run_metatest(c, seed);
  }
  note("report");
  run_report(c);
  if (c.meta_test.size() >= 3 && c.runs("pretrained")) {
    note("analyze");
    run_analyze(c);
  }
}

}  // namespace metaparse
