#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaparse/conllu.hpp"
#include "metaparse/typology.hpp"

namespace metaparse {

inline const std::array<std::string, 12>& relation_inventory() {
  static const std::array<std::string, 12> inv{"nsubj", "obj", "iobj", "obl",  "advmod", "aux",
                                               "amod",  "det", "nmod", "case", "cc",     "conj"};
  return inv;
}

namespace synth_detail {

enum class HeadClass : std::uint8_t { verb, noun, leaf };

inline HeadClass class_of(const std::string& label) {
  if (label == "root") return HeadClass::verb;
  if (label == "nsubj" || label == "obj" || label == "iobj" || label == "obl" || label == "nmod" || label == "conj")
    return HeadClass::noun;
  return HeadClass::leaf;
}

/// Labels a head of class `c` may take as dependents, with relative weights.
inline const std::vector<std::pair<std::string, double>>& children_of(HeadClass c) {
  static const std::vector<std::pair<std::string, double>> verb{
      {"nsubj", 3}, {"obj", 2.5}, {"iobj", 1}, {"obl", 2}, {"advmod", 1.5}, {"aux", 1.5}};
  static const std::vector<std::pair<std::string, double>> noun{
      {"det", 3}, {"amod", 2}, {"nmod", 1.5}, {"case", 2}, {"conj", 1}, {"cc", 0.5}};
  static const std::vector<std::pair<std::string, double>> none{};
  return c == HeadClass::verb ? verb : c == HeadClass::noun ? noun : none;
}

inline int inventory_rank(const std::string& label) {
  const auto& inv = relation_inventory();
  for (std::size_t i = 0; i < inv.size(); ++i)
    if (inv[i] == label) return static_cast<int>(i);
  return -1;
}

}  // namespace synth_detail

/// Generative word-order grammar for one synthetic language.
struct GrammarSpec {
  std::string language;
  std::size_t vocab_size = 260;  // split evenly over the labels plus root
  std::vector<std::string> labels{relation_inventory().begin(), relation_inventory().end()};
  /// P(head precedes dependent) per label; absent labels use 0.5.
  std::map<std::string, double> head_initial;
  std::size_t max_branching = 4;
  std::size_t min_length = 4;
  std::size_t max_length = 15;
  double nonproj_rate = 0.0;
  std::uint64_t lexical_seed = 1;
  /// Fraction of each word pool drawn from a cross-language cognate list.
  double shared_cognate_fraction = 0.0;

  double direction(const std::string& label) const {
    auto it = head_initial.find(label);
    return it == head_initial.end() ? 0.5 : it->second;
  }

  bool uses(const std::string& label) const { return std::find(labels.begin(), labels.end(), label) != labels.end(); }

  void validate() const {
    if (language.empty()) throw ConfigError("grammar spec needs a language tag");
    if (labels.empty()) throw ConfigError("grammar '" + language + "' has no labels");
    for (const auto& l : labels)
      if (synth_detail::inventory_rank(l) < 0) throw ConfigError("grammar '" + language + "': label '" + l + "' is not in the inventory");
    for (const auto& [l, p] : head_initial) {
      if (p < 0 || p > 1) throw ConfigError("grammar '" + language + "': direction probability for '" + l + "' outside [0, 1]");
      if (synth_detail::inventory_rank(l) < 0) throw ConfigError("grammar '" + language + "': label '" + l + "' is not in the inventory");
    }
    if (nonproj_rate < 0 || nonproj_rate > 1) throw ConfigError("grammar '" + language + "': nonproj_rate outside [0, 1]");
    if (shared_cognate_fraction < 0 || shared_cognate_fraction > 1)
      throw ConfigError("grammar '" + language + "': shared_cognate_fraction outside [0, 1]");
    if (min_length < 1 || min_length > max_length) throw ConfigError("grammar '" + language + "': bad length bounds");
    if (max_branching < 1) throw ConfigError("grammar '" + language + "': max_branching must be >= 1");
    if (vocab_size < labels.size() + 1) throw ConfigError("grammar '" + language + "': vocab_size smaller than the label count");
  }

  nlohmann::json to_json() const {
    return {{"language", language},
            {"vocab_size", vocab_size},
            {"labels", labels},
            {"head_initial", head_initial},
            {"max_branching", max_branching},
            {"min_length", min_length},
            {"max_length", max_length},
            {"nonproj_rate", nonproj_rate},
            {"lexical_seed", lexical_seed},
            {"shared_cognate_fraction", shared_cognate_fraction}};
  }

  static GrammarSpec from_json(const nlohmann::json& j) {
    GrammarSpec g;
    try {
      g.language = j.at("language").get<std::string>();
      g.vocab_size = j.value("vocab_size", g.vocab_size);
      if (j.contains("labels")) g.labels = j.at("labels").get<std::vector<std::string>>();
      if (j.contains("head_initial")) g.head_initial = j.at("head_initial").get<std::map<std::string, double>>();
      g.max_branching = j.value("max_branching", g.max_branching);
      g.min_length = j.value("min_length", g.min_length);
      g.max_length = j.value("max_length", g.max_length);
      g.nonproj_rate = j.value("nonproj_rate", g.nonproj_rate);
      g.lexical_seed = j.value("lexical_seed", g.lexical_seed);
      g.shared_cognate_fraction = j.value("shared_cognate_fraction", g.shared_cognate_fraction);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("grammar spec: ") + e.what());
    }
    g.validate();
    return g;
  }
};

struct GenerationStats {
  std::size_t sentences = 0;
  std::size_t rewrites_attempted = 0;  // sentences selected for a rewrite
  std::size_t rewrites_succeeded = 0;
};

struct SyntheticTreebank {
  Treebank treebank;
  GenerationStats stats;
};

namespace synth_detail {

struct Node {
  std::string label;
  std::vector<std::size_t> children;
};

inline std::string word_form(const GrammarSpec& g, const std::string& label, std::size_t slot, std::size_t pool) {
  const std::size_t cognates = static_cast<std::size_t>(g.shared_cognate_fraction * static_cast<double>(pool) + 0.5);
  if (slot < cognates) return label + "-" + std::to_string(slot);
  // language-specific forms, scrambled by the lexical seed
  const std::uint64_t h = (g.lexical_seed * 0x9E3779B97F4A7C15ULL) ^ (slot * 0xBF58476D1CE4E5B9ULL);
  return g.language + "." + label + "." + std::to_string(slot) + "." + std::to_string(h % 97);
}

// Appends the subtree of `v` in surface order.
inline void linearize(const std::vector<Node>& nodes, std::size_t v, const std::vector<bool>& right,
                      std::vector<std::size_t>& order) {
  std::vector<std::size_t> left_kids, right_kids;
  for (std::size_t c : nodes[v].children) (right[c] ? right_kids : left_kids).push_back(c);
  auto closer_first = [&](std::size_t a, std::size_t b) {
    const int ra = inventory_rank(nodes[a].label), rb = inventory_rank(nodes[b].label);
    return ra != rb ? ra < rb : a < b;
  };
  std::sort(left_kids.begin(), left_kids.end(), closer_first);
  std::sort(right_kids.begin(), right_kids.end(), closer_first);
  for (auto it = left_kids.rbegin(); it != left_kids.rend(); ++it) linearize(nodes, *it, right, order);
  order.push_back(v);
  for (std::size_t c : right_kids) linearize(nodes, c, right, order);
}

inline bool descends_from(const std::vector<int>& heads, int node, int ancestor) {
  for (int cur = node; cur != 0; cur = heads[static_cast<std::size_t>(cur - 1)])
    if (cur == ancestor) return true;
  return false;
}

/// One re-attachment that keeps a tree and breaks projectivity.
inline bool make_nonprojective(std::vector<int>& heads, std::mt19937_64& rng, int attempts = 64) {
  const int n = static_cast<int>(heads.size());
  if (n < 3) return false;
  std::uniform_int_distribution<int> pick(1, n);
  for (int a = 0; a < attempts; ++a) {
    const int d = pick(rng);
    const int h = pick(rng);
    if (h == d || heads[static_cast<std::size_t>(d - 1)] == 0 || heads[static_cast<std::size_t>(d - 1)] == h) continue;
    if (descends_from(heads, h, d)) continue;
    std::vector<int> trial = heads;
    trial[static_cast<std::size_t>(d - 1)] = h;
    if (is_tree(trial) && !is_projective(trial)) {
      heads = std::move(trial);
      return true;
    }
  }
  return false;
}

}  // namespace synth_detail

inline SyntheticTreebank generate_treebank(const GrammarSpec& g, std::size_t n_sentences, std::uint64_t seed) {
  using namespace synth_detail;
  g.validate();
  if (n_sentences == 0) throw ConfigError("generate_treebank: need at least one sentence");
  std::mt19937_64 rng(seed ^ (g.lexical_seed * 0xD1B54A32D192ED03ULL));
  const std::size_t pool = std::max<std::size_t>(1, g.vocab_size / (g.labels.size() + 1));
  SyntheticTreebank out;
  out.treebank.language = g.language;
  std::uniform_int_distribution<std::size_t> length(g.min_length, g.max_length);
  std::uniform_int_distribution<std::size_t> word(0, pool - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t s = 0; s < n_sentences; ++s) {
    const std::size_t n = length(rng);
    std::vector<Node> nodes{{"root", {}}};
    // grow the abstract tree one dependent at a time
    while (nodes.size() < n) {
      std::vector<std::size_t> open;
      for (std::size_t v = 0; v < nodes.size(); ++v) {
        if (nodes[v].children.size() >= g.max_branching) continue;
        for (const auto& [l, w] : children_of(class_of(nodes[v].label)))
          if (g.uses(l)) {
            open.push_back(v);
            break;
          }
      }
      if (open.empty()) break;
      const std::size_t v = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
      std::vector<std::string> cand;
      std::vector<double> weight;
      for (const auto& [l, w] : children_of(class_of(nodes[v].label)))
        if (g.uses(l)) {
          cand.push_back(l);
          weight.push_back(w);
        }
      const std::size_t k = std::discrete_distribution<std::size_t>(weight.begin(), weight.end())(rng);
      nodes[v].children.push_back(nodes.size());
      nodes.push_back({cand[k], {}});
    }
    std::vector<bool> right(nodes.size(), false);
    for (std::size_t v = 1; v < nodes.size(); ++v) right[v] = unit(rng) < g.direction(nodes[v].label);
    std::vector<std::size_t> order;
    linearize(nodes, 0, right, order);
    std::vector<int> position(nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<int>(i + 1);
    std::vector<int> parent(nodes.size(), -1);
    for (std::size_t v = 0; v < nodes.size(); ++v)
      for (std::size_t c : nodes[v].children) parent[c] = static_cast<int>(v);

    std::vector<int> heads(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::size_t v = order[i];
      heads[i] = v == 0 ? 0 : position[static_cast<std::size_t>(parent[v])];
    }
    if (g.nonproj_rate > 0 && unit(rng) < g.nonproj_rate) {
      ++out.stats.rewrites_attempted;
      if (make_nonprojective(heads, rng)) ++out.stats.rewrites_succeeded;
    }

    Sentence sent;
    sent.comments.push_back("# sent_id = " + g.language + "-" + std::to_string(s + 1));
    for (std::size_t i = 0; i < order.size(); ++i) {
      const Node& nd = nodes[order[i]];
      Token t;
      t.index = static_cast<int>(i + 1);
      t.form = word_form(g, nd.label, word(rng), pool);
      t.head = heads[i];
      t.deprel = nd.label;
      sent.tokens.push_back(std::move(t));
    }
    out.treebank.sentences.push_back(std::move(sent));
    ++out.stats.sentences;
  }
  return out;
}

/// Binary word-order features: per inventory label, head-initial (p > 0.5)
/// and head-final (p < 0.5), missing when the grammar lacks the label; plus
/// whether non-projective rewrites are frequent (rate >= 0.1).
inline TypologyVector typology_of(const GrammarSpec& g) {
  TypologyVector v;
  v.language = g.language;
  for (const auto& l : relation_inventory()) {
    const bool used = g.uses(l);
    const double p = g.direction(l);
    v.names.push_back(l + "_head_initial");
    v.values.push_back(used ? static_cast<std::int8_t>(p > 0.5) : std::int8_t{-1});
    v.names.push_back(l + "_head_final");
    v.values.push_back(used ? static_cast<std::int8_t>(p < 0.5) : std::int8_t{-1});
  }
  v.names.push_back("frequent_nonprojectivity");
  v.values.push_back(static_cast<std::int8_t>(g.nonproj_rate >= 0.1));
  return v;
}

}  // namespace metaparse
