#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "metaparse/autodiff.hpp"
#include "metaparse/conllu.hpp"
#include "metaparse/decoder.hpp"
#include "metaparse/params.hpp"
#include "metaparse/vocab.hpp"

namespace metaparse {

using Rng = std::mt19937_64;

inline constexpr const char* kUnknownWord = "<unk>";
inline constexpr std::size_t kMaxLabels = 132;

enum class LayerType : std::uint8_t { attention, gated };

struct ParserConfig {
  std::size_t d_model = 64;
  std::size_t layers = 3;
  LayerType layer_type = LayerType::attention;
  std::size_t d_arc = 64;
  std::size_t d_tag = 32;
  double embedding_dropout = 0.2;
  double hidden_dropout = 0.33;
  /// Word vocabulary; entry 0 is the shared unknown-word token.
  std::vector<std::string> words{kUnknownWord};
  std::vector<std::string> labels;

  nlohmann::json to_json() const {
    return {{"d_model", d_model},
            {"layers", layers},
            {"layer_type", layer_type == LayerType::attention ? "attention" : "gated"},
            {"d_arc", d_arc},
            {"d_tag", d_tag},
            {"embedding_dropout", embedding_dropout},
            {"hidden_dropout", hidden_dropout},
            {"words", words},
            {"labels", labels}};
  }

  static ParserConfig from_json(const nlohmann::json& j) {
    ParserConfig c;
    c.d_model = j.value("d_model", c.d_model);
    c.layers = j.value("layers", c.layers);
    const std::string lt = j.value("layer_type", std::string("attention"));
    if (lt == "attention") {
      c.layer_type = LayerType::attention;
    } else if (lt == "gated") {
      c.layer_type = LayerType::gated;
    } else {
      throw ConfigError("unknown layer_type '" + lt + "'");
    }
    c.d_arc = j.value("d_arc", c.d_arc);
    c.d_tag = j.value("d_tag", c.d_tag);
    c.embedding_dropout = j.value("embedding_dropout", c.embedding_dropout);
    c.hidden_dropout = j.value("hidden_dropout", c.hidden_dropout);
    if (j.contains("words")) c.words = j.at("words").get<std::vector<std::string>>();
    if (j.contains("labels")) c.labels = j.at("labels").get<std::vector<std::string>>();
    return c;
  }

  /// FNV-1a of the canonical JSON dump; identifies architecture + vocabularies.
  std::uint64_t hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    return h;
  }

  void validate() const {
    if (d_model == 0 || d_arc == 0 || d_tag == 0) throw ConfigError("model dimensions must be positive");
    if (words.empty() || words.front() != kUnknownWord) throw ConfigError("word vocabulary must start with " + std::string(kUnknownWord));
    if (labels.empty()) throw ConfigError("label vocabulary is empty");
    if (labels.size() > kMaxLabels) {
      throw ConfigError("label vocabulary has " + std::to_string(labels.size()) + " entries, limit is " +
                        std::to_string(kMaxLabels));
    }
    if (embedding_dropout < 0 || embedding_dropout >= 1 || hidden_dropout < 0 || hidden_dropout >= 1) {
      throw ConfigError("dropout rates must lie in [0, 1)");
    }
  }
};

inline std::string hash_hex(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return s;
}

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Lowercased forms seen at least `min_freq` times, most frequent first
/// (ties alphabetical), after the unknown-word entry.
inline std::vector<std::string> build_word_vocab(std::span<const Treebank* const> treebanks, std::size_t min_freq = 2) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const Treebank* tb : treebanks)
    for (const auto& s : tb->sentences)
      for (const auto& t : s.tokens) ++counts[lowercase(t.form)];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : counts)
    if (c >= min_freq && w != kUnknownWord) kept.emplace_back(w, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words{kUnknownWord};
  for (auto& [w, c] : kept) words.push_back(w);
  return words;
}

/// Labels in order of first appearance across the treebanks.
inline std::vector<std::string> build_label_vocab(std::span<const Treebank* const> treebanks) {
  Vocab v;
  for (const Treebank* tb : treebanks)
    for (const auto& s : tb->sentences)
      for (const auto& t : s.tokens) v.add(t.deprel);
  return v.items();
}

/// Sentence mapped to model ids. labels[i] is -1 for labels the model lacks.
struct EncodedSentence {
  std::vector<int> words;
  std::vector<int> heads;
  std::vector<int> labels;

  std::size_t size() const { return words.size(); }
};

struct LayerSlots {
  // attention: q, k, v, o, ff1 (w, b), ff2 (w, b)
  // gated: gate (w, b), body (w, b)
  std::vector<std::size_t> slots;
};

struct ParserLayout {
  std::size_t embed = 0, root = 0, gamma = 0, eta = 0;
  std::vector<LayerSlots> layers;
  std::size_t arc_head_w = 0, arc_head_b = 0, arc_dep_w = 0, arc_dep_b = 0, arc_u = 0, arc_u_head = 0;
  std::size_t label_head_w = 0, label_head_b = 0, label_dep_w = 0, label_dep_b = 0;
  std::size_t label_w = 0, label_wh = 0, label_wd = 0, label_b = 0;
};

class ParserParams {
 public:
  ParserParams() = default;

  /// Fresh parameters: uniform Glorot weights, zero biases, gamma = 0
  /// (uniform layer mixing) and eta = 1.
  static ParserParams initialize(ParserConfig config, std::uint64_t seed) {
    config.validate();
    ParserParams p;
    p.config_ = std::move(config);
    Rng rng(seed);
    const auto& c = p.config_;
    const std::size_t d = c.d_model, V = c.words.size(), K = c.labels.size();
    auto uniform = [&rng](std::size_t r, std::size_t cols, double bound) {
      Tensor t = Tensor::matrix(r, cols);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : t.values()) v = static_cast<real>(dist(rng));
      return t;
    };
    auto glorot = [&](std::size_t r, std::size_t cols) {
      return uniform(r, cols, std::sqrt(6.0 / static_cast<double>(r + cols)));
    };
    auto zeros = [](std::size_t r, std::size_t cols) { return Tensor::matrix(r, cols); };
    const auto E = ParamGroup::encoder, D = ParamGroup::decoder;
    auto& s = p.params_;
    s.add("embed.words", E, uniform(V, d, 1.0));
    for (std::size_t l = 0; l < c.layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      if (c.layer_type == LayerType::attention) {
        s.add(pre + "wq", E, glorot(d, d));
        s.add(pre + "wk", E, glorot(d, d));
        s.add(pre + "wv", E, glorot(d, d));
        s.add(pre + "wo", E, glorot(d, d));
        s.add(pre + "ff1.w", E, glorot(d, d));
        s.add(pre + "ff1.b", E, zeros(1, d));
        s.add(pre + "ff2.w", E, glorot(d, d));
        s.add(pre + "ff2.b", E, zeros(1, d));
      } else {
        s.add(pre + "gate.w", E, glorot(d, d));
        s.add(pre + "gate.b", E, zeros(1, d));
        s.add(pre + "body.w", E, glorot(d, d));
        s.add(pre + "body.b", E, zeros(1, d));
      }
    }
    s.add("mix.gamma", D, zeros(1, c.layers + 1));
    s.add("mix.eta", D, Tensor::scalar(1));
    s.add("root", D, uniform(1, d, 1.0));
    s.add("arc.head.w", D, glorot(d, c.d_arc));
    s.add("arc.head.b", D, zeros(1, c.d_arc));
    s.add("arc.dep.w", D, glorot(d, c.d_arc));
    s.add("arc.dep.b", D, zeros(1, c.d_arc));
    s.add("arc.U", D, glorot(c.d_arc, c.d_arc));
    s.add("arc.u_head", D, zeros(c.d_arc, 1));
    s.add("label.head.w", D, glorot(d, c.d_tag));
    s.add("label.head.b", D, zeros(1, c.d_tag));
    s.add("label.dep.w", D, glorot(d, c.d_tag));
    s.add("label.dep.b", D, zeros(1, c.d_tag));
    s.add("label.W", D, glorot(c.d_tag, K * c.d_tag));
    s.add("label.w_head", D, glorot(c.d_tag, K));
    s.add("label.w_dep", D, glorot(c.d_tag, K));
    s.add("label.b", D, zeros(1, K));
    p.resolve_layout();
    return p;
  }

  /// Rebuilds a model from a config and a complete, correctly shaped ParamSet.
  static ParserParams from_parts(ParserConfig config, ParamSet params) {
    ParserParams ref = initialize(config, 0);
    if (ref.params_.size() != params.size()) throw ConfigError("parameter count does not match the configuration");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (ref.params_[i].name != params[i].name || !ref.params_[i].value.same_shape(params[i].value)) {
        throw ConfigError("parameter '" + params[i].name + "' does not match the configuration");
      }
    }
    ref.params_ = std::move(params);
    return ref;
  }

  const ParserConfig& config() const { return config_; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }
  const ParserLayout& layout() const { return layout_; }

  const Vocab& word_vocab() const { return words_; }
  const Vocab& label_vocab() const { return labels_; }

  EncodedSentence encode_sentence(const Sentence& s) const {
    EncodedSentence e;
    e.words.reserve(s.size());
    for (const auto& t : s.tokens) {
      const int w = words_.find(lowercase(t.form));
      e.words.push_back(w < 0 ? 0 : w);
      e.heads.push_back(t.head);
      e.labels.push_back(labels_.find(t.deprel));
    }
    return e;
  }

  std::vector<EncodedSentence> encode_treebank(const Treebank& tb) const {
    std::vector<EncodedSentence> out;
    out.reserve(tb.size());
    for (const auto& s : tb.sentences) out.push_back(encode_sentence(s));
    return out;
  }

 private:
  void resolve_layout() {
    auto& L = layout_;
    const auto& s = params_;
    L.embed = s.index_of("embed.words");
    L.layers.clear();
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      LayerSlots ls;
      if (config_.layer_type == LayerType::attention) {
        for (const char* n : {"wq", "wk", "wv", "wo", "ff1.w", "ff1.b", "ff2.w", "ff2.b"}) ls.slots.push_back(s.index_of(pre + n));
      } else {
        for (const char* n : {"gate.w", "gate.b", "body.w", "body.b"}) ls.slots.push_back(s.index_of(pre + n));
      }
      L.layers.push_back(std::move(ls));
    }
    L.gamma = s.index_of("mix.gamma");
    L.eta = s.index_of("mix.eta");
    L.root = s.index_of("root");
    L.arc_head_w = s.index_of("arc.head.w");
    L.arc_head_b = s.index_of("arc.head.b");
    L.arc_dep_w = s.index_of("arc.dep.w");
    L.arc_dep_b = s.index_of("arc.dep.b");
    L.arc_u = s.index_of("arc.U");
    L.arc_u_head = s.index_of("arc.u_head");
    L.label_head_w = s.index_of("label.head.w");
    L.label_head_b = s.index_of("label.head.b");
    L.label_dep_w = s.index_of("label.dep.w");
    L.label_dep_b = s.index_of("label.dep.b");
    L.label_w = s.index_of("label.W");
    L.label_wh = s.index_of("label.w_head");
    L.label_wd = s.index_of("label.w_dep");
    L.label_b = s.index_of("label.b");
    words_ = Vocab(config_.words);
    labels_ = Vocab(config_.labels);
  }

  ParserConfig config_;
  ParamSet params_;
  ParserLayout layout_;
  Vocab words_;
  Vocab labels_;
};

// ---------------------------------------------------------------------------
// Graph construction

/// Parameters registered on a tape, aligned with ParamSet indices.
struct BoundParams {
  std::vector<ad::Var> vars;
  ad::Var operator[](std::size_t i) const { return vars[i]; }
};

/// `trainable` registers leaves that receive gradients; otherwise constants.
inline BoundParams bind(ad::Tape& tape, const ParamSet& params, bool trainable) {
  BoundParams b;
  b.vars.reserve(params.size());
  for (const auto& p : params) b.vars.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
  return b;
}

inline Tensor sinusoid_positions(std::size_t n, std::size_t d) {
  Tensor pe = Tensor::matrix(n, d);
  for (std::size_t pos = 0; pos < n; ++pos)
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double angle = static_cast<double>(pos + 1) * freq;
      pe(pos, i) = static_cast<real>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return pe;
}

/// Inverted-dropout mask with keep probability 1 - rate.
inline Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Tensor m = Tensor::matrix(rows, cols);
  std::bernoulli_distribution keep(1.0 - rate);
  const real scale = static_cast<real>(1.0 / (1.0 - rate));
  for (auto& v : m.values()) v = keep(rng) ? scale : real(0);
  return m;
}

inline ad::Var maybe_dropout(ad::Var x, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0) return x;
  return ad::apply_mask(x, dropout_mask(x.rows(), x.cols(), rate, *rng));
}

inline ad::Var dense(ad::Var x, ad::Var w, ad::Var b) { return ad::add_row(ad::matmul(x, w), b); }

/// Contextual embeddings e (n x d_model): eta * sum_i softmax(gamma)_i * B_i
/// over the embedding layer (i = 0) and every encoder layer.
inline ad::Var encode_graph(ad::Tape& tape, const BoundParams& bp, const ParserParams& model,
                            const EncodedSentence& s, Rng* rng) {
  if (s.size() == 0) throw DataError("encode: empty sentence");
  const auto& L = model.layout();
  const auto& cfg = model.config();
  const std::size_t n = s.size(), d = cfg.d_model;
  ad::Var x = ad::gather_rows(bp[L.embed], s.words);
  x = ad::add(x, tape.constant(sinusoid_positions(n, d)));
  x = maybe_dropout(x, cfg.embedding_dropout, rng);
  std::vector<ad::Var> outputs{x};
  const real inv_sqrt_d = static_cast<real>(1.0 / std::sqrt(static_cast<double>(d)));
  for (const auto& layer : L.layers) {
    const auto& w = layer.slots;
    if (cfg.layer_type == LayerType::attention) {
      ad::Var q = ad::matmul(x, bp[w[0]]);
      ad::Var k = ad::matmul(x, bp[w[1]]);
      ad::Var v = ad::matmul(x, bp[w[2]]);
      ad::Var att = ad::softmax_rows(ad::scale(ad::matmul_nt(q, k), inv_sqrt_d));
      ad::Var h = ad::add(x, ad::matmul(ad::matmul(att, v), bp[w[3]]));
      ad::Var ff = dense(ad::tanh(dense(h, bp[w[4]], bp[w[5]])), bp[w[6]], bp[w[7]]);
      x = ad::add(h, ff);
    } else {
      ad::Var gate = ad::sigmoid(dense(x, bp[w[0]], bp[w[1]]));
      ad::Var body = ad::tanh(dense(x, bp[w[2]], bp[w[3]]));
      x = ad::add(x, ad::mul(gate, body));
    }
    outputs.push_back(x);
  }
  ad::Var mix = ad::softmax_rows(bp[L.gamma]);
  ad::Var e = ad::scale_by(ad::weighted_sum(outputs, mix), bp[L.eta]);
  return maybe_dropout(e, cfg.hidden_dropout, rng);
}

/// ROOT row prepended to e: (n+1) x d_model.
inline ad::Var with_root(const BoundParams& bp, const ParserParams& model, ad::Var e) {
  return ad::concat_rows(bp[model.layout().root], e);
}

/// Raw biaffine arc scores S (n+1 x n+1), S[h][d] = head_h^T U dep_d + head_h . u.
/// Masking is left to the consumers.
inline ad::Var arc_score_graph(const BoundParams& bp, const ParserParams& model, ad::Var e_root, Rng* rng) {
  const auto& L = model.layout();
  const double p = model.config().hidden_dropout;
  ad::Var hh = maybe_dropout(ad::tanh(dense(e_root, bp[L.arc_head_w], bp[L.arc_head_b])), p, rng);
  ad::Var hd = maybe_dropout(ad::tanh(dense(e_root, bp[L.arc_dep_w], bp[L.arc_dep_b])), p, rng);
  ad::Var bilinear = ad::matmul_nt(ad::matmul(hh, bp[L.arc_u]), hd);
  return ad::add_col(bilinear, ad::matmul(hh, bp[L.arc_u_head]));
}

/// Label log-probabilities (n x K) for each token given its head.
inline ad::Var label_logprob_graph(const BoundParams& bp, const ParserParams& model, ad::Var e_root,
                                   const std::vector<int>& heads, Rng* rng) {
  const auto& L = model.layout();
  const double p = model.config().hidden_dropout;
  const std::size_t n = e_root.rows() - 1;
  if (heads.size() != n) throw ShapeError("score_labels: head vector length does not match sentence");
  for (int h : heads)
    if (h < 0 || static_cast<std::size_t>(h) > n) throw DataError("score_labels: invalid head index " + std::to_string(h));
  ad::Var lh = maybe_dropout(ad::tanh(dense(e_root, bp[L.label_head_w], bp[L.label_head_b])), p, rng);
  ad::Var ld = maybe_dropout(ad::tanh(dense(e_root, bp[L.label_dep_w], bp[L.label_dep_b])), p, rng);
  ad::Var rh = ad::gather_rows(lh, heads);
  ad::Var rd = ad::slice_rows(ld, 1, n + 1);
  ad::Var bil = ad::rowblock_dot(ad::matmul(rh, bp[L.label_w]), rd);
  ad::Var lin = ad::add(ad::matmul(rh, bp[L.label_wh]), ad::matmul(rd, bp[L.label_wd]));
  return ad::log_softmax_rows(ad::add_row(ad::add(bil, lin), bp[L.label_b]));
}

/// Arc NLL (gold head vs all other positions incl. ROOT) + label NLL
/// (gold label, conditioned on gold heads).
inline ad::Var sentence_loss_graph(ad::Tape& tape, const BoundParams& bp, const ParserParams& model,
                                   const EncodedSentence& s, Rng* rng) {
  const std::size_t n = s.size();
  ad::Var e_root = with_root(bp, model, encode_graph(tape, bp, model, s, rng));
  ad::Var scores = arc_score_graph(bp, model, e_root, rng);
  ad::Var by_dep = ad::slice_rows(ad::transpose(scores), 1, n + 1);  // row i: dependent i+1 over heads
  std::vector<std::uint8_t> mask(n * (n + 1), 0);
  for (std::size_t i = 0; i < n; ++i) mask[i * (n + 1) + i + 1] = 1;
  ad::Var arc = ad::nll(ad::log_softmax_rows(by_dep, mask), s.heads);
  ad::Var lab = ad::nll(label_logprob_graph(bp, model, e_root, s.heads, rng), s.labels);
  return ad::add(arc, lab);
}

// ---------------------------------------------------------------------------
// Value-level API

inline Tensor encode(const EncodedSentence& s, const ParserParams& model, Rng* rng = nullptr) {
  ad::Tape tape;
  BoundParams bp = bind(tape, model.params(), false);
  return encode_graph(tape, bp, model, s, rng).value();
}

inline ScoreMatrix to_score_matrix(const Tensor& raw) {
  const std::size_t n = raw.rows() - 1;
  ScoreMatrix m(n);
  for (std::size_t h = 0; h <= n; ++h)
    for (std::size_t d = 1; d <= n; ++d)
      if (h != d) m.at(h, d) = static_cast<double>(raw(h, d));
  return m;
}

/// Arc scores for contextual embeddings e (n x d_model).
inline ScoreMatrix score_arcs(const Tensor& e, const ParserParams& model) {
  ad::Tape tape;
  BoundParams bp = bind(tape, model.params(), false);
  ad::Var er = with_root(bp, model, tape.constant(e));
  return to_score_matrix(arc_score_graph(bp, model, er, nullptr).value());
}

/// Per-token label log-probabilities (n x K) given heads.
inline Tensor score_labels(const Tensor& e, const std::vector<int>& heads, const ParserParams& model) {
  ad::Tape tape;
  BoundParams bp = bind(tape, model.params(), false);
  ad::Var er = with_root(bp, model, tape.constant(e));
  return label_logprob_graph(bp, model, er, heads, nullptr).value();
}

inline double loss(const EncodedSentence& s, const ParserParams& model, Rng* rng = nullptr) {
  ad::Tape tape;
  BoundParams bp = bind(tape, model.params(), false);
  return static_cast<double>(sentence_loss_graph(tape, bp, model, s, rng).value()[0]);
}

struct LossAndGradient {
  double loss = 0;
  Gradients grads;
};

/// Mean sentence loss over the batch and its gradient w.r.t. every parameter.
inline LossAndGradient loss_and_gradient(const ParserParams& model, std::span<const EncodedSentence> batch,
                                         Rng* rng = nullptr) {
  if (batch.empty()) throw DataError("loss_and_gradient: empty batch");
  ad::Tape tape;
  BoundParams bp = bind(tape, model.params(), true);
  std::vector<ad::Var> losses;
  losses.reserve(batch.size());
  for (const auto& s : batch) losses.push_back(sentence_loss_graph(tape, bp, model, s, rng));
  ad::Var total = ad::scale(ad::add_scalars(losses), real(1) / static_cast<real>(batch.size()));
  LossAndGradient out;
  out.loss = static_cast<double>(total.value()[0]);
  if (!std::isfinite(out.loss)) throw NumericalError("non-finite training loss");
  ad::GradientMap gm = tape.backward(total);
  out.grads.reserve(bp.vars.size());
  for (auto v : bp.vars) out.grads.push_back(gm.take(v));
  return out;
}

struct Prediction {
  HeadVector heads;
  std::vector<int> labels;  // model label ids
};

/// Chu-Liu/Edmonds tree, then the argmax label (lowest id on ties) per arc.
inline Prediction predict(const EncodedSentence& s, const ParserParams& model) {
  ad::Tape tape;
  BoundParams bp = bind(tape, model.params(), false);
  ad::Var er = with_root(bp, model, encode_graph(tape, bp, model, s, nullptr));
  Prediction p;
  p.heads = chu_liu_edmonds(to_score_matrix(arc_score_graph(bp, model, er, nullptr).value()));
  const Tensor lp = label_logprob_graph(bp, model, er, p.heads, nullptr).value();
  for (std::size_t i = 0; i < s.size(); ++i) {
    int best = 0;
    for (std::size_t k = 1; k < lp.cols(); ++k)
      if (lp(i, k) > lp(i, static_cast<std::size_t>(best))) best = static_cast<int>(k);
    p.labels.push_back(best);
  }
  return p;
}

/// Copy of `sentence` carrying the predicted heads and labels.
inline Sentence apply_prediction(const Sentence& sentence, const Prediction& p, const ParserParams& model) {
  Sentence out = sentence;
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    out.tokens[i].head = p.heads[i];
    out.tokens[i].deprel = model.label_vocab().item(p.labels[i]);
  }
  return out;
}

inline Treebank parse_treebank(const Treebank& gold, const ParserParams& model) {
  Treebank out;
  out.language = gold.language;
  out.sentences.reserve(gold.size());
  for (const auto& s : gold.sentences) out.sentences.push_back(apply_prediction(s, predict(model.encode_sentence(s), model), model));
  return out;
}

/// softmax(gamma): the layer-mixing weights.
inline std::vector<double> mixing_weights(const ParserParams& model) {
  const Tensor& g = model.params()[model.layout().gamma].value;
  double mx = g[0];
  for (real v : g.values()) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> w;
  double z = 0;
  for (real v : g.values()) {
    w.push_back(std::exp(static_cast<double>(v) - mx));
    z += w.back();
  }
  for (auto& v : w) v /= z;
  return w;
}

}  // namespace metaparse
