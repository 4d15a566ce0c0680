#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaparse/tensor.hpp"
#include "metaparse/vocab.hpp"

namespace metaparse {

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class TreeError : public DataError {
 public:
  using DataError::DataError;
};

/// One syntactic word. All ten columns are kept so files round-trip;
/// only index, form, head and deprel are consumed by the parser.
struct Token {
  int index = 0;
  std::string form;
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;
  std::string deprel;
  std::string deps = "_";
  std::string misc = "_";

  friend bool operator==(const Token&, const Token&) = default;
};

/// Multiword-token range (`3-4`) or empty node (`5.1`) line, kept verbatim.
/// `position` is the number of regular tokens preceding it.
struct ExtraLine {
  enum class Kind : std::uint8_t { multiword_range, empty_node };
  Kind kind = Kind::multiword_range;
  std::size_t position = 0;
  std::string text;

  friend bool operator==(const ExtraLine&, const ExtraLine&) = default;
};

struct Sentence {
  std::vector<std::string> comments;  // verbatim, including the leading '#'
  std::vector<Token> tokens;
  std::vector<ExtraLine> extras;

  std::size_t size() const { return tokens.size(); }

  std::vector<int> heads() const {
    std::vector<int> h;
    h.reserve(tokens.size());
    for (const auto& t : tokens) h.push_back(t.head);
    return h;
  }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// Checks that `heads` (1-based dependents, 0 = ROOT) forms a single tree
/// rooted at 0. Returns a description of the first problem, if any.
inline std::optional<std::string> tree_problem(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return "empty sentence";
  int roots = 0;
  for (int d = 1; d <= n; ++d) {
    const int h = heads[static_cast<std::size_t>(d - 1)];
    if (h < 0 || h > n) return "token " + std::to_string(d) + " has out-of-range head " + std::to_string(h);
    if (h == d) return "token " + std::to_string(d) + " is its own head";
    if (h == 0) ++roots;
  }
  if (roots != 1) return "expected exactly one root dependent, found " + std::to_string(roots);
  // 0 = unvisited, 1 = on current path, 2 = reaches root
  std::vector<std::uint8_t> state(static_cast<std::size_t>(n + 1), 0);
  state[0] = 2;
  for (int d = 1; d <= n; ++d) {
    std::vector<int> path;
    int cur = d;
    while (state[static_cast<std::size_t>(cur)] == 0) {
      state[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = heads[static_cast<std::size_t>(cur - 1)];
    }
    if (state[static_cast<std::size_t>(cur)] == 1) return "cycle through token " + std::to_string(cur);
    for (int p : path) state[static_cast<std::size_t>(p)] = 2;
  }
  return std::nullopt;
}

inline bool is_tree(const std::vector<int>& heads) { return !tree_problem(heads).has_value(); }

struct Treebank {
  std::string language;
  std::vector<Sentence> sentences;
  std::vector<std::string> warnings;  // skipped sentences and similar notes

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }

  /// Labels in order of first appearance.
  Vocab label_vocab() const {
    Vocab v;
    for (const auto& s : sentences)
      for (const auto& t : s.tokens) v.add(t.deprel);
    return v;
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
};

struct ConlluOptions {
  /// Throw TreeError on an invalid tree instead of skipping the sentence.
  bool strict = false;
  /// Sentences longer than this are skipped with a warning; 0 disables.
  std::size_t max_length = 60;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

inline Treebank parse_conllu(std::string_view text, const ConlluOptions& opts = {}, std::string language = {}) {
  Treebank tb;
  tb.language = std::move(language);
  Sentence cur;
  std::size_t sentence_line = 0;
  bool in_sentence = false;

  auto finish = [&]() {
    if (!in_sentence) return;
    in_sentence = false;
    Sentence s = std::move(cur);
    cur = Sentence{};
    const std::string where = "sentence at line " + std::to_string(sentence_line);
    if (s.tokens.empty()) {
      if (opts.strict) throw TreeError(where + ": no tokens");
      tb.warnings.push_back(where + ": skipped, no tokens");
      return;
    }
    if (auto problem = tree_problem(s.heads())) {
      if (opts.strict) throw TreeError(where + ": " + *problem);
      tb.warnings.push_back(where + ": skipped, " + *problem);
      return;
    }
    if (opts.max_length > 0 && s.size() > opts.max_length) {
      tb.warnings.push_back(where + ": skipped, length " + std::to_string(s.size()) + " exceeds " +
                            std::to_string(opts.max_length));
      return;
    }
    tb.sentences.push_back(std::move(s));
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    const bool last = end == text.size();
    pos = end + 1;
    ++line_no;
    if (last && line.empty()) break;

    if (line.empty()) {
      finish();
      continue;
    }
    if (!in_sentence) {
      in_sentence = true;
      sentence_line = line_no;
    }
    if (line.front() == '#') {
      cur.comments.emplace_back(line);
      continue;
    }
    auto cols = detail::split_tabs(line);
    if (cols.size() != 10) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 10 tab-separated columns, found " +
                        std::to_string(cols.size()));
    }
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos) {
      cur.extras.push_back({ExtraLine::Kind::multiword_range, cur.tokens.size(), std::string(line)});
      continue;
    }
    if (id.find('.') != std::string_view::npos) {
      cur.extras.push_back({ExtraLine::Kind::empty_node, cur.tokens.size(), std::string(line)});
      continue;
    }
    auto index = detail::parse_int(id);
    if (!index || *index != static_cast<int>(cur.tokens.size()) + 1) {
      throw FormatError("line " + std::to_string(line_no) + ": expected token id " +
                        std::to_string(cur.tokens.size() + 1) + ", found '" + std::string(id) + "'");
    }
    auto head = detail::parse_int(cols[6]);
    if (!head) {
      throw FormatError("line " + std::to_string(line_no) + ": non-integer head '" + std::string(cols[6]) + "'");
    }
    Token t;
    t.index = *index;
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    t.head = *head;
    t.deprel = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    cur.tokens.push_back(std::move(t));
  }
  finish();
  return tb;
}

inline void emit_sentence(const Sentence& s, std::string& out) {
  for (const auto& c : s.comments) {
    out += c;
    out += '\n';
  }
  std::size_t extra = 0;
  for (std::size_t i = 0; i <= s.tokens.size(); ++i) {
    while (extra < s.extras.size() && s.extras[extra].position == i) {
      out += s.extras[extra].text;
      out += '\n';
      ++extra;
    }
    if (i == s.tokens.size()) break;
    const Token& t = s.tokens[i];
    out += std::to_string(t.index);
    for (const std::string* col : {&t.form, &t.lemma, &t.upos, &t.xpos, &t.feats}) {
      out += '\t';
      out += *col;
    }
    out += '\t';
    out += std::to_string(t.head);
    for (const std::string* col : {&t.deprel, &t.deps, &t.misc}) {
      out += '\t';
      out += *col;
    }
    out += '\n';
  }
  // extras anchored past the last token (should not happen after parsing, but keep them)
  for (; extra < s.extras.size(); ++extra) {
    out += s.extras[extra].text;
    out += '\n';
  }
  out += '\n';
}

inline std::string emit_conllu(const Treebank& tb) {
  std::string out;
  for (const auto& s : tb.sentences) emit_sentence(s, out);
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

inline Treebank read_conllu(const std::string& path, const ConlluOptions& opts = {}, std::string language = {}) {
  try {
    return parse_conllu(read_file(path), opts, std::move(language));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const TreeError& e) {
    throw TreeError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Projectivity

/// Dominance definition: every token strictly inside an arc's span descends
/// from the arc's head.
inline bool is_projective_dominance(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  auto descends_from = [&](int node, int ancestor) {
    for (int cur = node, guard = 0; cur != 0 && guard <= n; ++guard) {
      if (cur == ancestor) return true;
      cur = heads[static_cast<std::size_t>(cur - 1)];
    }
    return ancestor == 0;
  };
  for (int d = 1; d <= n; ++d) {
    const int h = heads[static_cast<std::size_t>(d - 1)];
    const int lo = std::min(h, d), hi = std::max(h, d);
    for (int k = lo + 1; k < hi; ++k)
      if (!descends_from(k, h)) return false;
  }
  return true;
}

/// Crossing definition, with ROOT drawn at position 0.
inline bool is_projective_crossing(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  for (int a = 1; a <= n; ++a) {
    const int l1 = std::min(a, heads[static_cast<std::size_t>(a - 1)]);
    const int r1 = std::max(a, heads[static_cast<std::size_t>(a - 1)]);
    for (int b = a + 1; b <= n; ++b) {
      const int l2 = std::min(b, heads[static_cast<std::size_t>(b - 1)]);
      const int r2 = std::max(b, heads[static_cast<std::size_t>(b - 1)]);
      if ((l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1)) return false;
    }
  }
  return true;
}

inline bool is_projective(const std::vector<int>& heads) { return is_projective_dominance(heads); }
inline bool is_projective(const Sentence& s) { return is_projective(s.heads()); }

/// Fraction of non-projective sentences.
inline double projectivity_stats(const Treebank& tb) {
  if (tb.empty()) throw DataError("projectivity_stats: empty treebank");
  std::size_t nonproj = 0;
  for (const auto& s : tb.sentences)
    if (!is_projective(s)) ++nonproj;
  return static_cast<double>(nonproj) / static_cast<double>(tb.size());
}

// ---------------------------------------------------------------------------

/// Uniform sample of `size` sentences without replacement. Both halves keep
/// the original sentence order.
inline std::pair<Treebank, Treebank> split_support(const Treebank& tb, std::size_t size, std::uint64_t seed) {
  if (size > tb.size()) {
    throw DataError("split_support: support size " + std::to_string(size) + " exceeds " +
                    std::to_string(tb.size()) + " sentences");
  }
  std::vector<std::size_t> order(tb.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> chosen(tb.size(), false);
  for (std::size_t i = 0; i < size; ++i) chosen[order[i]] = true;
  Treebank support, rest;
  support.language = rest.language = tb.language;
  for (std::size_t i = 0; i < tb.size(); ++i) (chosen[i] ? support : rest).sentences.push_back(tb.sentences[i]);
  return {std::move(support), std::move(rest)};
}

}  // namespace metaparse
