// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "metaparse/conllu.hpp"
#include "metaparse/decoder.hpp"
#include "metaparse/evaluate.hpp"
#include "metaparse/experiment.hpp"
#include "metaparse/meta_learn.hpp"
#include "metaparse/model.hpp"
#include "metaparse/synthlang.hpp"
#include "metaparse/typology.hpp"
#include "support/oracles.hpp"
#include "support/quadratic.hpp"
#include "support/stats_oracles.hpp"
#include "support/tiny.hpp"

namespace fs = std::filesystem;
using namespace metaparse;

namespace {

enum class Status { pass, fail };

struct Outcome {
  Status status = Status::pass;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(double v, int prec = 3) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Options {
  std::string work_dir;
  std::string experiment_config;
  std::string smoke_config;
  std::string ewt, hdtb, uriel;
  std::string uriel_en = "eng", uriel_it = "ita", uriel_ur = "urd";
  std::set<int> only;
};

// 1 -------------------------------------------------------------------------

ScoreMatrix random_scores(std::size_t n, std::mt19937_64& rng, bool integer) {
  ScoreMatrix m(n);
  std::normal_distribution<double> dist;
  for (std::size_t h = 0; h <= n; ++h)
    for (std::size_t d = 1; d <= n; ++d)
      if (h != d) m.at(h, d) = integer ? static_cast<double>(rng() % 4) : dist(rng);
  return m;
}

Outcome decoder_optimality(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240101);
  std::size_t total = 0, agree = 0;
  for (bool integer : {false, true}) {
    for (int trial = 0; trial < 6000; ++trial) {
      const std::size_t n = 2 + rng() % 5;
      ScoreMatrix m = random_scores(n, rng, integer);
      const HeadVector a = chu_liu_edmonds(m), b = brute_force_mst(m);
      ++total;
      const double sa = tree_score(m, a), sb = tree_score(m, b);
      agree += is_tree(a) && (integer ? sa == sb : std::abs(sa - sb) <= 1e-9);
    }
  }
  const double secs = seconds_since(t0);
  return verdict(agree == total && secs < 60,
                 std::to_string(agree) + "/" + std::to_string(total) + " matrices agree on total score, " + fmt(secs) + " s");
}

// 2 -------------------------------------------------------------------------

Outcome gradient_fidelity(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::size_t checked = 0;
  std::set<ParamGroup> groups;
  for (LayerType type : {LayerType::attention, LayerType::gated}) {
    ParserParams model = ParserParams::initialize(testing::tiny_config(4, type, 8), 31);
    model.params()[model.layout().gamma].value = Tensor::row({0.2, -0.5, 0.3});
    const std::vector<EncodedSentence> batch{testing::five_tokens()};
    auto lg = loss_and_gradient(model, batch);
    auto value = [&](const ParamSet& ps) {
      ParserParams m = model;
      m.params() = ps;
      return loss(batch[0], m);
    };
    auto r = testing::finite_difference_check(model.params(), lg.grads, value);
    worst = std::max(worst, r.max_relative_error);
    checked += r.checked;
    for (const auto& p : model.params()) groups.insert(p.group);
  }
  const double secs = seconds_since(t0);
  return verdict(worst < 1e-4 && groups.size() == 2 && secs < 30,
                 "max relative error " + fmt(worst) + " over " + std::to_string(checked) + " scalars, both groups, " +
                     fmt(secs) + " s");
}

// 3 -------------------------------------------------------------------------

Outcome fomaml_oracle(const Options&) {
  using testing::QuadModel;
  using testing::QuadTask;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_hand = 0;
  const double alpha_hand = 0.05;
  for (double theta : {0.0, 0.3, -0.8, 1.7}) {
    std::vector<Episode<QuadTask>> eps{{"t1", {QuadTask{1, 1}}, {QuadTask{1, 1}}, {}, {}},
                                       {"t2", {QuadTask{-1, 1}}, {QuadTask{-1, 1}}, {}, {}}};
    auto mg = meta_gradient(QuadModel(theta), eps, GroupRates::uniform(alpha_hand), 1, 0);
    const double phi1 = theta - 2 * alpha_hand * (theta - 1), phi2 = theta - 2 * alpha_hand * (theta + 1);
    worst_hand = std::max(worst_hand, std::abs(mg.grads[0][0] - (2 * (phi1 - 1) + 2 * (phi2 + 1))));
  }
  const double alpha = 0.2;
  const std::size_t k = 3;
  int below = 0;
  double min_margin = INFINITY;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto tasks = testing::quad_family(8, seed);
    MetaConfig cfg;
    cfg.inner_lr = GroupRates::uniform(alpha);
    cfg.outer_lr = GroupRates::uniform(0.05);
    cfg.inner_steps = k;
    cfg.support_size = cfg.query_size = 1;
    cfg.seed = seed;
    EpisodeSampler<QuadTask> sampler(testing::quad_pools(tasks), 1, 1, 0.8, seed);
    auto r = meta_train(QuadModel(0.0), sampler, cfg, 3000);
    const double joint = testing::tilted_optimum(tasks, alpha, 0);
    const double margin = testing::post_adaptation_loss(joint, tasks, alpha, k) -
                          testing::post_adaptation_loss(r.best.theta(), tasks, alpha, k);
    below += margin > 0;
    min_margin = std::min(min_margin, margin);
  }
  const double secs = seconds_since(t0);
  return verdict(worst_hand <= 1e-12 && below == 5 && secs < 10,
                 "hand gradient error " + fmt(worst_hand) + ", meta init below joint optimum on " + std::to_string(below) +
                     "/5 seeds (smallest margin " + fmt(min_margin) + "), " + fmt(secs) + " s");
}

// 4 -------------------------------------------------------------------------

Outcome las_oracle(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(404);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto [gold, pred] = testing::random_scoring_pair(rng);
    auto s = las(gold, pred);
    auto o = testing::naive_attachment(gold, pred);
    agree += s.scored == o.scored && s.head_correct == o.head && s.label_correct == o.labeled;
  }
  auto [g, p] = testing::hand_scoring_pair();
  auto hand = las(g, p);
  const double secs = seconds_since(t0);
  return verdict(agree == 1000 && hand.uas == 50.0 && hand.las == 25.0 && secs < 10,
                 std::to_string(agree) + "/1000 pairs match the naive counts, hand example UAS " + fmt(hand.uas) + " LAS " +
                     fmt(hand.las) + ", " + fmt(secs) + " s");
}

// 5 -------------------------------------------------------------------------

std::vector<int> random_tree(int n, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(static_cast<std::size_t>(n), 0);
  for (int i = 1; i < n; ++i)
    heads[static_cast<std::size_t>(order[static_cast<std::size_t>(i)] - 1)] = order[rng() % static_cast<unsigned>(i)];
  return heads;
}

Outcome projectivity(const Options& o) {
  std::mt19937_64 rng(55);
  int agree = 0, nonproj = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    auto heads = random_tree(1 + static_cast<int>(rng() % 12), rng);
    const bool a = is_projective_dominance(heads);
    agree += a == is_projective_crossing(heads);
    nonproj += !a;
  }
  const std::vector<int> crossing{3, 4, 0, 3};
  const bool crossing_ok = !is_projective_dominance(crossing) && !is_projective_crossing(crossing);
  bool ok = agree == 10000 && crossing_ok;
  std::string detail = std::to_string(agree) + "/10000 random trees agree (" + std::to_string(nonproj) +
                       " non-projective), crossing example " + (crossing_ok ? "non-projective" : "NOT flagged");
  for (auto [path, name, target] : {std::tuple{o.ewt, "EWT", 4.8}, std::tuple{o.hdtb, "HDTB", 13.6}}) {
    if (path.empty()) {
      detail += "; " + std::string(name) + " not supplied, skipped";
      continue;
    }
    ConlluOptions opts;
    opts.max_length = 0;
    const double pct = 100 * projectivity_stats(read_conllu(path, opts));
    const bool hit = std::abs(pct - target) <= 0.1;
    ok = ok && hit;
    detail += "; " + std::string(name) + " " + fmt(pct, 4) + "% (target " + fmt(target) + ")";
  }
  return verdict(ok, detail);
}

// 6 -------------------------------------------------------------------------

Outcome typology(const Options& o) {
  std::mt19937_64 rng(66);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    TypologyVector v;
    v.language = "x";
    for (int i = 0; i < 30; ++i) {
      v.names.push_back("f" + std::to_string(i));
      v.values.push_back(static_cast<std::int8_t>(static_cast<int>(rng() % 3) - 1));
    }
    v.values[0] = 1;
    worst = std::max(worst, std::abs(cosine_similarity(v, v) - 1));
  }
  bool ok = worst < 1e-12;
  std::string detail = "self-similarity within " + fmt(worst) + " of 1 on 1000 vectors";
  if (o.uriel.empty()) return verdict(ok, detail + "; URIEL table not supplied, skipped");
  TypologyTable t = TypologyTable::parse_csv(read_file(o.uriel));
  const double it = cosine_similarity(t.vector(o.uriel_en), t.vector(o.uriel_it));
  const double ur = cosine_similarity(t.vector(o.uriel_en), t.vector(o.uriel_ur));
  ok = ok && std::abs(it - 0.86) <= 0.01 && std::abs(ur - 0.62) <= 0.01;
  return verdict(ok, detail + "; sim(en,it) " + fmt(it) + " (target 0.86), sim(en,ur) " + fmt(ur) + " (target 0.62)");
}

// 7 -------------------------------------------------------------------------

ExperimentConfig experiment(const std::string& path, const std::string& out, std::vector<std::string> extra = {}) {
  extra.push_back("output_dir=\"" + out + "\"");
  return load_experiment(path, extra);
}

// Mean over held-out languages of seed-level LAS, one value per seed.
std::vector<double> pooled(const SeedTable& t, const ExperimentConfig& c, const std::string& model, std::size_t s) {
  std::vector<double> acc;
  for (const auto& lang : c.meta_test) {
    auto v = t.las(lang.language, model, s);
    if (acc.empty()) acc.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i] / static_cast<double>(c.meta_test.size());
  }
  return acc;
}

Outcome synthetic_experiment(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string out = (fs::path(o.work_dir) / "synth3").string();
  fs::remove_all(out);
  ExperimentConfig c = experiment(o.experiment_config, out);
  if (c.seeds.size() < 5) return verdict(false, "configuration has fewer than 5 seeds");
  run_pipeline(c, [](const std::string& s) { std::cerr << "[acceptance] " << s << std::endl; });
  const double secs = seconds_since(t0);
  SeedTable t = seed_table(load_all_reports(c));

  std::vector<std::size_t> sizes = c.support_sizes;
  std::sort(sizes.begin(), sizes.end());
  const std::size_t s0 = sizes.front();
  std::ostringstream d;

  // (a)
  auto maml0 = pooled(t, c, "maml", s0), ne0 = pooled(t, c, "ne", s0);
  auto sign = sign_test(maml0, ne0);
  const bool a = sign.p < 0.05 && mean(maml0) > mean(ne0);
  d << "(a) |S|=" << s0 << " MAML " << fmt(mean(maml0), 4) << " vs NE " << fmt(mean(ne0), 4) << ", " << sign.wins << "/"
    << maml0.size() << " seeds, sign p " << fmt(sign.p) << " [";
  for (const auto& lang : c.meta_test) {
    auto m = t.las(lang.language, "maml", s0), n = t.las(lang.language, "ne", s0);
    d << lang.language << " " << fmt(mean(m), 4) << "/" << fmt(mean(n), 4) << " p " << fmt(sign_test(m, n).p) << "; ";
  }
  d.seekp(-2, std::ios_base::cur);
  d << "] " << (a ? "ok" : "FAIL");

  // (b)
  std::vector<double> curve;
  for (auto s : sizes) curve.push_back(mean(pooled(t, c, "maml", s)));
  bool b = true;
  for (std::size_t i = 1; i < curve.size(); ++i) b = b && curve[i] > curve[i - 1];
  d << "; (b) MAML by |S|:";
  for (std::size_t i = 0; i < sizes.size(); ++i) d << " " << sizes[i] << "=" << fmt(curve[i], 4);
  d << " " << (b ? "ok" : "FAIL");

  // (c) and (d) average over languages and every |S|
  std::map<std::string, double> overall;
  for (const auto& model : c.models) {
    double sum = 0;
    for (auto s : sizes) sum += mean(pooled(t, c, model, s));
    overall[model] = sum / static_cast<double>(sizes.size());
  }
  const bool cc = overall.at("maml") > overall.at("maml_no_pretrain");
  d << "; (c) MAML " << fmt(overall.at("maml"), 4) << " vs no pre-training " << fmt(overall.at("maml_no_pretrain"), 4) << " "
    << (cc ? "ok" : "FAIL");
  bool dd = true;
  d << "; (d)";
  for (const auto& [model, v] : overall) {
    d << " " << model << "=" << fmt(v, 4);
    if (model != "meta_test_only") dd = dd && v > overall.at("meta_test_only");
  }
  d << " " << (dd ? "ok" : "FAIL");
  d << "; " << c.seeds.size() << " seeds in " << fmt(secs / 60, 3) << " min (target 30)";
  return verdict(a && b && cc && dd, d.str());
}

// 8 -------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const std::string& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  return files;
}

Outcome determinism(const Options& o) {
  const std::string a = (fs::path(o.work_dir) / "smoke-a").string(), b = (fs::path(o.work_dir) / "smoke-b").string();
  fs::remove_all(a);
  fs::remove_all(b);
  run_pipeline(experiment(o.smoke_config, a));
  run_pipeline(experiment(o.smoke_config, b));
  auto sa = snapshot(a), sb = snapshot(b);
  std::size_t reports = 0;
  for (const auto& [name, bytes] : sa) reports += name.ends_with("reports.json") || name.starts_with("report/");
  return verdict(sa == sb && reports > 0, "full pipeline twice: " + std::to_string(sa.size()) + " files (" + std::to_string(reports) +
                                              " reports) " + (sa == sb ? "byte-identical" : "DIFFER"));
}

// 9 -------------------------------------------------------------------------

Outcome format_fidelity(const Options&) {
  const std::string text = read_file(std::string(METAPARSE_FIXTURES) + "/sample.conllu");
  const bool has_comment = text.find("\n# ") != std::string::npos || text.rfind("# ", 0) == 0;
  const bool has_range = text.find("\n2-3\t") != std::string::npos;
  const bool has_empty = text.find("\n5.1\t") != std::string::npos;
  bool ok = emit_conllu(parse_conllu(text)) == text && has_comment && has_range && has_empty;
  std::size_t files = 1;
  // generated treebanks of every bundled synthetic grammar
  for (const auto& lang : load_experiment(std::string(METAPARSE_CONFIGS) + "/synth3.json").synthetic) {
    const std::string t = emit_conllu(generate_treebank(lang.grammar, 50, 7).treebank);
    ok = ok && emit_conllu(parse_conllu(t)) == t;
    ++files;
  }
  return verdict(ok, std::to_string(files) + " documents round-trip byte-identically; fixture has comments " +
                         (has_comment ? "yes" : "no") + ", ranges " + (has_range ? "yes" : "no") + ", empty nodes " +
                         (has_empty ? "yes" : "no"));
}

// 10 ------------------------------------------------------------------------

Outcome statistics(const Options&) {
  bool ok = true;
  const std::vector<double> a{71.2, 68.4, 70.1, 69.8, 72.5, 70.9, 69.0};
  const std::vector<double> b{69.9, 68.0, 68.7, 69.9, 70.8, 69.5, 68.1};
  double m = 0, ss = 0;
  for (std::size_t i = 0; i < 7; ++i) m += (a[i] - b[i]) / 7;
  for (std::size_t i = 0; i < 7; ++i) ss += (a[i] - b[i] - m) * (a[i] - b[i] - m);
  const double t = m / (std::sqrt(ss / 6) / std::sqrt(7.0));
  auto tt = paired_ttest(a, b, 3);
  const double t_err = std::abs(tt.t - t), p_err = std::abs(tt.p - testing::t_two_sided_p(t, 6));
  ok = ok && t_err < 1e-12 && p_err < 1e-9 && tt.df == 6;

  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, y{2, 1, 4, 3, 7, 5, 6, 10, 8, 9};
  auto sp = spearman(x, y);
  const double rho_err = std::abs(sp.rho - (1 - 96.0 / 990.0));
  const double rt = sp.rho * std::sqrt(8 / (1 - sp.rho * sp.rho));
  const double sp_p_err = std::abs(sp.p - testing::t_two_sided_p(rt, 8));
  ok = ok && rho_err < 1e-12 && sp_p_err < 1e-9;

  std::mt19937_64 rng(1010);
  int tie_trials = 0, tie_agree = 0;
  while (tie_trials < 500) {
    const std::size_t n = 3 + rng() % 10;
    std::vector<double> u(n), v(n);
    for (auto& e : u) e = static_cast<double>(rng() % 4);
    for (auto& e : v) e = static_cast<double>(rng() % 5);
    if (std::all_of(u.begin(), u.end(), [&](double e) { return e == u[0]; })) continue;
    if (std::all_of(v.begin(), v.end(), [&](double e) { return e == v[0]; })) continue;
    ++tie_trials;
    tie_agree += average_ranks(u) == testing::brute_ranks(u) &&
                 std::abs(spearman(u, v).rho - testing::brute_pearson(testing::brute_ranks(u), testing::brute_ranks(v))) < 1e-12;
  }
  ok = ok && tie_agree == tie_trials;
  auto st = sign_test({2, 2, 2, 2, 2, 2, 2}, {1, 1, 1, 1, 1, 1, 1});
  ok = ok && std::abs(st.p - 1.0 / 128) < 1e-15;
  return verdict(ok, "t error " + fmt(t_err) + ", t-test p error " + fmt(p_err) + ", rho error " + fmt(rho_err) +
                         ", spearman p error " + fmt(sp_p_err) + ", tied ranks " + std::to_string(tie_agree) + "/" +
                         std::to_string(tie_trials) + ", sign test 7/7 p " + fmt(st.p));
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.work_dir = (fs::temp_directory_path() / "metaparse-acceptance").string();
  o.experiment_config = std::string(METAPARSE_CONFIGS) + "/synth3.json";
  o.smoke_config = std::string(METAPARSE_CONFIGS) + "/smoke.json";
  auto env = [](const char* k) {
    const char* v = std::getenv(k);
    return v ? std::string(v) : std::string();
  };
  o.ewt = env("METAPARSE_UD_EWT");
  o.hdtb = env("METAPARSE_UD_HDTB");
  o.uriel = env("METAPARSE_URIEL");

  CLI::App app{"metaparse acceptance criteria"};
  app.add_option("--work-dir", o.work_dir, "scratch directory for experiment outputs");
  app.add_option("--experiment", o.experiment_config, "synthetic experiment configuration");
  app.add_option("--smoke", o.smoke_config, "small configuration for the determinism check");
  app.add_option("--ewt", o.ewt, "UD English-EWT CoNLL-U (all splits concatenated)")->check(CLI::ExistingFile);
  app.add_option("--hdtb", o.hdtb, "UD Hindi-HDTB CoNLL-U (all splits concatenated)")->check(CLI::ExistingFile);
  app.add_option("--uriel", o.uriel, "typology CSV (language,feature,value) with URIEL syntax features")->check(CLI::ExistingFile);
  app.add_option("--uriel-en", o.uriel_en, "English key in the typology CSV");
  app.add_option("--uriel-it", o.uriel_it, "Italian key");
  app.add_option("--uriel-ur", o.uriel_ur, "Urdu key");
  app.add_option("--only", o.only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(o.work_dir);

  const std::vector<std::pair<const char*, Outcome (*)(const Options&)>> criteria{
      {"decoder optimality", decoder_optimality}, {"gradient fidelity", gradient_fidelity},
      {"FOMAML oracle", fomaml_oracle},           {"LAS oracle", las_oracle},
      {"projectivity", projectivity},             {"typology", typology},
      {"synthetic experiment", synthetic_experiment}, {"determinism", determinism},
      {"format fidelity", format_fidelity},       {"statistics", statistics}};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!o.only.empty() && !o.only.count(id)) continue;
    Outcome r;
    try {
      r = criteria[i].second(o);
    } catch (const std::exception& e) {
      r = {Status::fail, std::string("error: ") + e.what()};
    }
    const char* tag = r.status == Status::pass ? "PASS" : "FAIL";
    failed += r.status == Status::fail;
    std::cout << "[" << tag << "] " << id << " " << criteria[i].first << ": " << r.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
