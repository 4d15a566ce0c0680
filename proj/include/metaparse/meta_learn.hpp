#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <exception>
#include <vector>

#include <nlohmann/json.hpp>

#include "metaparse/conllu.hpp"
#include "metaparse/evaluate.hpp"
#include "metaparse/model.hpp"
#include "metaparse/optim.hpp"
#include "metaparse/params.hpp"

namespace metaparse {

/// splitmix64 finalizer over a combined pair; used to derive child seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t string_seed(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline nlohmann::json rates_json(const GroupRates& r) { return {{"encoder", r.encoder}, {"decoder", r.decoder}}; }

inline GroupRates rates_from_json(const nlohmann::json& j, const char* key) {
  if (j.is_number()) return GroupRates::uniform(j.get<double>());
  if (!j.is_object() || !j.contains("encoder") || !j.contains("decoder"))
    throw ConfigError(std::string(key) + " needs numeric 'encoder' and 'decoder' entries");
  return {j.at("encoder").get<double>(), j.at("decoder").get<double>()};
}

struct MetaConfig {
  GroupRates inner_lr{1e-3, 1e-2};
  GroupRates outer_lr{1e-4, 1e-3};
  std::size_t inner_steps = 5;
  std::size_t support_size = 20;
  std::size_t query_size = 20;
  std::size_t episodes_per_language = 500;
  std::size_t pretrain_epochs = 60;
  double warmup_frac = 0.1;
  std::uint64_t seed = 1;

  double train_fraction = 0.8;
  std::size_t validate_every = 50;
  std::size_t validation_sentences = 200;
  std::size_t pretrain_batch = 32;
  GroupRates pretrain_lr{1e-4, 1e-3};
  double weight_decay = 0.01;
  GroupRates ne_lr{1e-4, 1e-3};
  std::size_t no_pretrain_episode_factor = 4;
  std::size_t workers = 1;

  void validate() const {
    auto positive = [](const GroupRates& r, const char* what) {
      if (!(r.encoder > 0) || !(r.decoder > 0)) throw ConfigError(std::string(what) + " must be positive for both groups");
    };
    positive(inner_lr, "inner_lr");
    positive(outer_lr, "outer_lr");
    positive(pretrain_lr, "pretrain_lr");
    positive(ne_lr, "ne_lr");
    if (inner_steps < 1) throw ConfigError("inner_steps must be at least 1");
    if (support_size < 1 || query_size < 1) throw ConfigError("support_size and query_size must be at least 1");
    if (warmup_frac < 0 || warmup_frac > 1) throw ConfigError("warmup_frac must lie in [0, 1]");
    if (train_fraction <= 0 || train_fraction >= 1) throw ConfigError("train_fraction must lie in (0, 1)");
    if (validate_every < 1) throw ConfigError("validate_every must be at least 1");
    if (pretrain_batch < 1) throw ConfigError("pretrain_batch must be at least 1");
    if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
    if (no_pretrain_episode_factor < 1) throw ConfigError("no_pretrain_episode_factor must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
  }

  nlohmann::json to_json() const {
    return {{"inner_lr", rates_json(inner_lr)},
            {"outer_lr", rates_json(outer_lr)},
            {"inner_steps", inner_steps},
            {"support_size", support_size},
            {"query_size", query_size},
            {"episodes_per_language", episodes_per_language},
            {"pretrain_epochs", pretrain_epochs},
            {"warmup_frac", warmup_frac},
            {"seed", seed},
            {"train_fraction", train_fraction},
            {"validate_every", validate_every},
            {"validation_sentences", validation_sentences},
            {"pretrain_batch", pretrain_batch},
            {"pretrain_lr", rates_json(pretrain_lr)},
            {"weight_decay", weight_decay},
            {"ne_lr", rates_json(ne_lr)},
            {"no_pretrain_episode_factor", no_pretrain_episode_factor},
            {"workers", workers}};
  }

  static MetaConfig from_json(const nlohmann::json& j) {
    MetaConfig c;
    try {
      if (j.contains("inner_lr")) c.inner_lr = rates_from_json(j.at("inner_lr"), "inner_lr");
      if (j.contains("outer_lr")) c.outer_lr = rates_from_json(j.at("outer_lr"), "outer_lr");
      if (j.contains("pretrain_lr")) c.pretrain_lr = rates_from_json(j.at("pretrain_lr"), "pretrain_lr");
      if (j.contains("ne_lr")) c.ne_lr = rates_from_json(j.at("ne_lr"), "ne_lr");
      c.inner_steps = j.value("inner_steps", c.inner_steps);
      c.support_size = j.value("support_size", c.support_size);
      c.query_size = j.value("query_size", c.query_size);
      c.episodes_per_language = j.value("episodes_per_language", c.episodes_per_language);
      c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
      c.warmup_frac = j.value("warmup_frac", c.warmup_frac);
      c.seed = j.value("seed", c.seed);
      c.train_fraction = j.value("train_fraction", c.train_fraction);
      c.validate_every = j.value("validate_every", c.validate_every);
      c.validation_sentences = j.value("validation_sentences", c.validation_sentences);
      c.pretrain_batch = j.value("pretrain_batch", c.pretrain_batch);
      c.weight_decay = j.value("weight_decay", c.weight_decay);
      c.no_pretrain_episode_factor = j.value("no_pretrain_episode_factor", c.no_pretrain_episode_factor);
      c.workers = j.value("workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("meta config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

using Telemetry = std::function<void(const nlohmann::json&)>;

template <class M>
using Validator = std::function<double(const M&)>;

// ---------------------------------------------------------------------------
// Episodes

template <class E>
struct Episode {
  std::string language;
  std::vector<E> support;
  std::vector<E> query;
  std::vector<std::size_t> support_ids;  // indices into the language pool
  std::vector<std::size_t> query_ids;
};

template <class E>
struct LanguagePool {
  std::string language;
  std::vector<E> items;
};

/// k distinct entries of `pool`, uniformly (partial Fisher-Yates).
inline std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  if (k > pool.size()) throw DataError("cannot draw " + std::to_string(k) + " items from " + std::to_string(pool.size()));
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

/// Each language is split once into a support partition (train_fraction)
/// and a query partition. next() draws one episode per language, in pool
/// order.
template <class E>
class EpisodeSampler {
 public:
  EpisodeSampler(std::vector<LanguagePool<E>> pools, std::size_t support_size, std::size_t query_size,
                 double train_fraction, std::uint64_t seed)
      : pools_(std::move(pools)), support_size_(support_size), query_size_(query_size), rng_(mix_seed(seed, 0xe915)) {
    if (pools_.empty()) throw DataError("episode sampler needs at least one language");
    for (const auto& p : pools_) {
      std::vector<std::size_t> order(p.items.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng split(mix_seed(seed, string_seed(p.language)));
      std::shuffle(order.begin(), order.end(), split);
      const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(order.size())));
      std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
      std::vector<std::size_t> te(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
      if (tr.size() < support_size_ || te.size() < query_size_) {
        throw DataError("language '" + p.language + "' has " + std::to_string(p.items.size()) + " sentences; the " +
                        std::to_string(tr.size()) + "/" + std::to_string(te.size()) + " partition cannot supply |S|=" +
                        std::to_string(support_size_) + ", |Q|=" + std::to_string(query_size_));
      }
      train_.push_back(std::move(tr));
      test_.push_back(std::move(te));
    }
  }

  std::vector<Episode<E>> next() {
    std::vector<Episode<E>> out;
    out.reserve(pools_.size());
    for (std::size_t l = 0; l < pools_.size(); ++l) {
      Episode<E> ep;
      ep.language = pools_[l].language;
      ep.support_ids = sample_without_replacement(train_[l], support_size_, rng_);
      ep.query_ids = sample_without_replacement(test_[l], query_size_, rng_);
      for (auto i : ep.support_ids) ep.support.push_back(pools_[l].items[i]);
      for (auto i : ep.query_ids) ep.query.push_back(pools_[l].items[i]);
      out.push_back(std::move(ep));
    }
    return out;
  }

  std::size_t languages() const { return pools_.size(); }
  const std::vector<std::size_t>& train_ids(std::size_t l) const { return train_.at(l); }
  const std::vector<std::size_t>& test_ids(std::size_t l) const { return test_.at(l); }

 private:
  std::vector<LanguagePool<E>> pools_;
  std::size_t support_size_;
  std::size_t query_size_;
  std::vector<std::vector<std::size_t>> train_;
  std::vector<std::vector<std::size_t>> test_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// First-order MAML
//
// M must expose params() and be copyable; loss_and_gradient(const M&,
// std::span<const E>, Rng*) is looked up by argument-dependent lookup.

/// k plain SGD steps on the whole support set, starting from a copy of theta.
template <class M, class E>
M inner_adapt(const M& theta, std::span<const E> support, const GroupRates& alpha, std::size_t k, Rng* rng = nullptr,
              double* first_loss = nullptr) {
  if (support.empty()) throw DataError("inner_adapt: empty support set");
  M phi = theta;
  for (std::size_t step = 0; step < k; ++step) {
    auto lg = loss_and_gradient(std::as_const(phi), support, rng);
    if (!std::isfinite(lg.loss)) throw NumericalError("inner_adapt: non-finite support loss");
    if (step == 0 && first_loss) *first_loss = lg.loss;
    sgd_step(phi.params(), lg.grads, alpha);
  }
  if (!phi.params().all_finite()) throw NumericalError("inner_adapt: non-finite adapted parameters");
  return phi;
}

struct EpisodeLoss {
  std::string language;
  double support_loss = 0;
  double query_loss = 0;
};

struct MetaGradient {
  Gradients grads;
  std::vector<EpisodeLoss> losses;
};

/// Sum over episodes of the query gradient taken at the adapted parameters.
/// Episode i draws dropout noise from mix_seed(seed, i), so the result does
/// not depend on `workers`; the reduction runs in episode order.
template <class M, class E>
MetaGradient meta_gradient(const M& theta, const std::vector<Episode<E>>& episodes, const GroupRates& alpha,
                           std::size_t k, std::uint64_t seed, std::size_t workers = 1) {
  if (episodes.empty()) throw DataError("meta_gradient: empty meta-batch");
  struct Slot {
    Gradients grads;
    EpisodeLoss loss;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(episodes.size());
  auto run = [&](std::size_t i) {
    try {
      const auto& ep = episodes[i];
      Rng rng(mix_seed(seed, i));
      double sl = 0;
      M phi = inner_adapt(theta, std::span<const E>(ep.support), alpha, k, &rng, &sl);
      auto lg = loss_and_gradient(std::as_const(phi), std::span<const E>(ep.query), &rng);
      if (!std::isfinite(lg.loss)) throw NumericalError("meta_gradient: non-finite query loss for " + ep.language);
      slots[i].grads = std::move(lg.grads);
      slots[i].loss = {ep.language, sl, lg.loss};
    } catch (...) {
      slots[i].error = std::current_exception();
    }
  };
  const std::size_t w = std::min(workers, episodes.size());
  if (w <= 1) {
    for (std::size_t i = 0; i < episodes.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < episodes.size(); i += w) run(i);
      });
    for (auto& th : pool) th.join();
  }
  MetaGradient out;
  out.grads = theta.params().zero_gradients();
  for (auto& s : slots) {
    if (s.error) std::rethrow_exception(s.error);
    accumulate(out.grads, s.grads);
    out.losses.push_back(std::move(s.loss));
  }
  return out;
}

/// One Adam step on the summed first-order meta-gradient.
template <class M, class E>
MetaGradient meta_step(M& theta, AdamState& state, const std::vector<Episode<E>>& episodes, const GroupRates& alpha,
                       std::size_t k, const GroupRates& beta, std::uint64_t seed, std::size_t workers = 1) {
  MetaGradient mg = meta_gradient(std::as_const(theta), episodes, alpha, k, seed, workers);
  adam_step(state, theta.params(), mg.grads, beta);
  if (!theta.params().all_finite()) throw NumericalError("meta_step: non-finite parameters after the outer update");
  return mg;
}

template <class M>
struct TrainResult {
  M best;
  M last;
  double best_score = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_step = 0;
  std::size_t steps = 0;
  std::vector<std::pair<std::size_t, double>> validation;
};

namespace detail {

template <class M>
struct Selector {
  const Validator<M>& validate;
  const Telemetry& log;
  TrainResult<M>& result;

  // candidate=false: score is logged but the model cannot be selected
  void check(const M& model, std::size_t step, bool candidate = true) {
    if (!validate) return;
    if (!result.validation.empty() && result.validation.back().first == step) return;
    const double score = validate(model);
    result.validation.emplace_back(step, score);
    if (log) log({{"kind", "validation"}, {"step", step}, {"las", score}});
    if (candidate && (std::isnan(result.best_score) || score > result.best_score)) {
      result.best_score = score;
      result.best_step = step;
      result.best = model;
    }
  }

  bool due(std::size_t step, std::size_t total, std::size_t every) const { return step % every == 0 || step == total; }
};

inline double schedule(std::size_t step, std::size_t total, double warmup) {
  return cosine_warmup_lr(static_cast<long>(step), static_cast<long>(total), warmup, 1.0);
}

}  // namespace detail

/// Episodic training for `steps` meta-steps. Validation (if given) runs at
/// step 0, every validate_every steps and at the end; `best` holds the
/// highest-scoring parameters after at least one update (earliest on ties),
/// else the final ones. The step-0 score is only a reference.
template <class M, class E>
TrainResult<M> meta_train(const M& theta0, EpisodeSampler<E>& sampler, const MetaConfig& cfg, std::size_t steps,
                          const Validator<M>& validate = {}, const Telemetry& log = {}) {
  TrainResult<M> r;
  r.best = r.last = theta0;
  detail::Selector<M> sel{validate, log, r};
  sel.check(theta0, 0, steps == 0);
  AdamState state = AdamState::for_params(theta0.params());
  M theta = theta0;
  for (std::size_t s = 1; s <= steps; ++s) {
    const GroupRates beta = cfg.outer_lr.scaled(detail::schedule(s, steps, cfg.warmup_frac));
    auto episodes = sampler.next();
    MetaGradient mg = meta_step(theta, state, episodes, cfg.inner_lr, cfg.inner_steps, beta, mix_seed(cfg.seed, s), cfg.workers);
    if (log) {
      nlohmann::json langs = nlohmann::json::array();
      for (const auto& l : mg.losses)
        langs.push_back({{"language", l.language}, {"support_loss", l.support_loss}, {"query_loss", l.query_loss}});
      log({{"kind", "meta_step"}, {"step", s}, {"beta", rates_json(beta)}, {"languages", langs}});
    }
    if (sel.due(s, steps, cfg.validate_every)) sel.check(theta, s);
  }
  r.steps = steps;
  r.last = theta;
  if (!validate) r.best = theta;
  return r;
}

/// Same episode stream as meta_train, but support and query of every
/// language form one ordinary minibatch for a direct Adam update.
template <class M, class E>
TrainResult<M> non_episodic_train(const M& theta0, EpisodeSampler<E>& sampler, const MetaConfig& cfg, std::size_t steps,
                                  const Validator<M>& validate = {}, const Telemetry& log = {}) {
  TrainResult<M> r;
  r.best = r.last = theta0;
  detail::Selector<M> sel{validate, log, r};
  sel.check(theta0, 0, steps == 0);
  AdamState state = AdamState::for_params(theta0.params());
  M theta = theta0;
  for (std::size_t s = 1; s <= steps; ++s) {
    const GroupRates lr = cfg.ne_lr.scaled(detail::schedule(s, steps, cfg.warmup_frac));
    auto episodes = sampler.next();
    std::vector<E> batch;
    for (auto& ep : episodes) {
      batch.insert(batch.end(), ep.support.begin(), ep.support.end());
      batch.insert(batch.end(), ep.query.begin(), ep.query.end());
    }
    Rng rng(mix_seed(cfg.seed, s));
    auto lg = loss_and_gradient(std::as_const(theta), std::span<const E>(batch), &rng);
    if (!std::isfinite(lg.loss)) throw NumericalError("non_episodic_train: non-finite loss");
    adam_step(state, theta.params(), lg.grads, lr);
    if (!theta.params().all_finite()) throw NumericalError("non_episodic_train: non-finite parameters");
    if (log) log({{"kind", "ne_step"}, {"step", s}, {"lr", rates_json(lr)}, {"loss", lg.loss}});
    if (sel.due(s, steps, cfg.validate_every)) sel.check(theta, s);
  }
  r.steps = steps;
  r.last = theta;
  if (!validate) r.best = theta;
  return r;
}

template <class M>
struct PretrainResult {
  M model;
  std::vector<double> epoch_loss;
};

/// Minibatch Adam with decoupled weight decay. The encoder group is frozen
/// for the first epoch: zero rate and zeroed gradients.
template <class M, class E>
PretrainResult<M> pretrain(const M& init, const std::vector<E>& data, const MetaConfig& cfg, const Telemetry& log = {}) {
  if (data.empty()) throw DataError("pretrain: empty treebank");
  PretrainResult<M> r{init, {}};
  AdamState state = AdamState::for_params(init.params());
  Rng order_rng(mix_seed(cfg.seed, 0x0dde));
  Rng noise(mix_seed(cfg.seed, 0xd20f));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const bool frozen = epoch == 0;
    GroupRates lr = cfg.pretrain_lr;
    if (frozen) lr.encoder = 0;
    std::shuffle(order.begin(), order.end(), order_rng);
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.pretrain_batch) {
      std::vector<E> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.pretrain_batch); ++i) batch.push_back(data[order[i]]);
      auto lg = loss_and_gradient(std::as_const(r.model), std::span<const E>(batch), &noise);
      if (!std::isfinite(lg.loss)) throw NumericalError("pretrain: non-finite loss");
      if (frozen) {
        const ParamSet& ps = r.model.params();
        for (std::size_t i = 0; i < ps.size(); ++i)
          if (ps[i].group == ParamGroup::encoder) lg.grads[i] = lg.grads[i].zeros_like();
      }
      adam_step(state, r.model.params(), lg.grads, lr, cfg.weight_decay);
      total += lg.loss;
      ++batches;
    }
    if (!r.model.params().all_finite()) throw NumericalError("pretrain: non-finite parameters");
    r.epoch_loss.push_back(total / static_cast<double>(batches));
    if (log) log({{"kind", "pretrain_epoch"}, {"epoch", epoch + 1}, {"loss", r.epoch_loss.back()}, {"encoder_frozen", frozen}});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Parser-level plumbing

struct TestLanguage {
  std::string language;
  Treebank train;  // may be empty: the support set is then carved out of `test`
  Treebank test;
};

inline std::vector<LanguagePool<EncodedSentence>> encode_pools(const ParserParams& model, const std::vector<Treebank>& tbs) {
  std::vector<LanguagePool<EncodedSentence>> pools;
  for (const auto& tb : tbs) pools.push_back({tb.language, model.encode_treebank(tb)});
  return pools;
}

/// Support set and scored set for one repetition.
inline std::pair<Treebank, Treebank> meta_test_split(const TestLanguage& lang, std::size_t support_size, std::uint64_t seed) {
  if (lang.test.empty()) throw DataError("meta_test: language '" + lang.language + "' has no test data");
  if (support_size == 0) return {Treebank{lang.language, {}, {}}, lang.test};
  if (!lang.train.empty()) return {split_support(lang.train, support_size, seed).first, lang.test};
  auto [support, rest] = split_support(lang.test, support_size, seed);
  if (rest.empty()) throw DataError("meta_test: nothing left to score for '" + lang.language + "'");
  return {std::move(support), std::move(rest)};
}

/// Fine-tune a copy of theta on a fresh support sample per repetition (same
/// rates and step count as the inner loop), then score. |S| = 0 scores theta
/// directly.
inline std::vector<EvalReport> meta_test(const ParserParams& theta, const TestLanguage& lang, std::size_t support_size,
                                         const MetaConfig& cfg, std::size_t repetitions, std::uint64_t seed,
                                         const std::string& model_name) {
  std::vector<EvalReport> out;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const std::uint64_t rs = mix_seed(mix_seed(seed, string_seed(lang.language)), rep * 1000003 + support_size);
    auto [support, scored] = meta_test_split(lang, support_size, rs);
    const ParserParams* model = &theta;
    ParserParams phi;
    if (support_size > 0) {
      auto enc = theta.encode_treebank(support);
      Rng rng(mix_seed(rs, 1));
      phi = inner_adapt(theta, std::span<const EncodedSentence>(enc), cfg.inner_lr, cfg.inner_steps, &rng);
      model = &phi;
    }
    EvalReport r = make_report(las(scored, parse_treebank(scored, *model)));
    r.language = lang.language;
    r.model = model_name;
    r.support_size = support_size;
    r.repetition = rep;
    r.seed = seed;
    out.push_back(std::move(r));
  }
  return out;
}

/// Mean meta-test LAS (|S| = cfg.support_size, one repetition) over the
/// validation languages, each scored on at most validation_sentences.
inline Validator<ParserParams> make_validator(std::vector<TestLanguage> languages, const MetaConfig& cfg) {
  if (languages.empty()) return {};
  for (auto& l : languages)
    if (cfg.validation_sentences > 0 && l.test.size() > cfg.validation_sentences) l.test.sentences.resize(cfg.validation_sentences);
  return [languages = std::move(languages), cfg](const ParserParams& model) {
    double sum = 0;
    for (const auto& l : languages) sum += meta_test(model, l, cfg.support_size, cfg, 1, cfg.seed, "validation").front().las;
    return sum / static_cast<double>(languages.size());
  };
}

/// Baseline: random initialization, the pre-training language joins the
/// meta-training languages, and the episode budget is multiplied.
inline TrainResult<ParserParams> maml_without_pretraining(const ParserParams& random_init, const Treebank& pretrain_tb,
                                                          const std::vector<Treebank>& meta_train_tbs, const MetaConfig& cfg,
                                                          const Validator<ParserParams>& validate = {}, const Telemetry& log = {}) {
  std::vector<Treebank> sources{pretrain_tb};
  sources.insert(sources.end(), meta_train_tbs.begin(), meta_train_tbs.end());
  EpisodeSampler<EncodedSentence> sampler(encode_pools(random_init, sources), cfg.support_size, cfg.query_size,
                                          cfg.train_fraction, cfg.seed);
  return meta_train(random_init, sampler, cfg, cfg.episodes_per_language * cfg.no_pretrain_episode_factor, validate, log);
}

/// Baseline: no training at all; the parser only sees the meta-test support set.
inline ParserParams meta_test_only(const ParserConfig& config, std::uint64_t seed) { return ParserParams::initialize(config, seed); }

}  // namespace metaparse
