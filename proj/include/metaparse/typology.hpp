#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "metaparse/conllu.hpp"
#include "metaparse/evaluate.hpp"

namespace metaparse {

/// Binary feature vector; -1 marks a missing value.
struct TypologyVector {
  std::string language;
  std::vector<std::string> names;
  std::vector<std::int8_t> values;

  std::optional<int> get(const std::string& feature) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == feature) return values[i] < 0 ? std::nullopt : std::optional<int>(values[i]);
    return std::nullopt;
  }
};

/// Feature vectors for several languages over one shared schema (feature
/// order = first appearance in the input).
class TypologyTable {
 public:
  const std::vector<std::string>& schema() const { return schema_; }
  const std::vector<std::string>& languages() const { return languages_; }
  bool has(const std::string& language) const { return rows_.count(language) > 0; }

  TypologyVector vector(const std::string& language) const {
    auto it = rows_.find(language);
    if (it == rows_.end()) throw DataError("no typology vector for language '" + language + "'");
    TypologyVector v;
    v.language = language;
    v.names = schema_;
    v.values.assign(schema_.size(), -1);
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      auto f = it->second.find(schema_[i]);
      if (f != it->second.end()) v.values[i] = f->second;
    }
    return v;
  }

  /// value: 0, 1, or -1 for missing.
  void set(const std::string& language, const std::string& feature, int value) {
    if (value < -1 || value > 1) throw DataError("typology value for '" + feature + "' must be 0, 1 or missing");
    if (!rows_.count(language)) languages_.push_back(language);
    if (!feature_index_.count(feature)) {
      feature_index_[feature] = schema_.size();
      schema_.push_back(feature);
    }
    rows_[language][feature] = static_cast<std::int8_t>(value);
  }

  void add(const TypologyVector& v) {
    for (std::size_t i = 0; i < v.names.size(); ++i) set(v.language, v.names[i], v.values[i]);
  }

  /// Long-format CSV: language,feature,value. A header line starting with
  /// "language," is skipped. Empty, "NA", "?" or "-" values are missing.
  /// No quoting: fields must not contain commas.
  static TypologyTable parse_csv(const std::string& text) {
    TypologyTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      if (line_no == 1 && line.rfind("language,", 0) == 0) continue;
      std::vector<std::string> f;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (f.size() != 3) {
        throw FormatError("typology CSV line " + std::to_string(line_no) + ": expected 3 fields, found " + std::to_string(f.size()));
      }
      const std::string& v = f[2];
      int value;
      if (v == "1" || v == "1.0") {
        value = 1;
      } else if (v == "0" || v == "0.0") {
        value = 0;
      } else if (v.empty() || v == "NA" || v == "?" || v == "-" || v == "--") {
        value = -1;
      } else {
        throw FormatError("typology CSV line " + std::to_string(line_no) + ": value '" + v + "' is not 0, 1 or missing");
      }
      t.set(f[0], f[1], value);
    }
    return t;
  }

  std::string to_csv() const {
    std::string out = "language,feature,value\n";
    for (const auto& lang : languages_) {
      TypologyVector v = vector(lang);
      for (std::size_t i = 0; i < schema_.size(); ++i)
        out += lang + "," + schema_[i] + "," + (v.values[i] < 0 ? std::string("NA") : std::to_string(v.values[i])) + "\n";
    }
    return out;
  }

 private:
  std::vector<std::string> schema_;
  std::vector<std::string> languages_;
  std::map<std::string, std::size_t> feature_index_;
  std::map<std::string, std::map<std::string, std::int8_t>> rows_;
};

/// Cosine over features present in both vectors (pairwise-complete).
inline double cosine_similarity(const TypologyVector& a, const TypologyVector& b) {
  if (a.names != b.names) throw DataError("cosine_similarity: feature schemas differ");
  double dot = 0, na = 0, nb = 0;
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] < 0 || b.values[i] < 0) continue;
    ++overlap;
    dot += a.values[i] * b.values[i];
    na += a.values[i];
    nb += b.values[i];
  }
  if (overlap == 0) throw DataError("cosine_similarity: " + a.language + " and " + b.language + " share no observed feature");
  if (na == 0 || nb == 0) throw DataError("cosine_similarity: zero vector on the shared features of " + a.language + " and " + b.language);
  return dot / std::sqrt(na * nb);
}

// ---------------------------------------------------------------------------
// Correlation analyses

/// gains[model][test language]
using GainTable = std::map<std::string, std::map<std::string, double>>;

struct SimilarityCell {
  std::string model;
  std::string training_language;
  Correlation corr;
};

/// Spearman between gain and similarity to each training language, per model.
/// sims[training language][test language].
inline std::vector<SimilarityCell> correlate_gain_similarity(const GainTable& gains,
                                                             const std::map<std::string, std::map<std::string, double>>& sims) {
  std::vector<SimilarityCell> out;
  for (const auto& [model, g] : gains)
    for (const auto& [train, s] : sims) {
      std::vector<double> x, y;
      for (const auto& [lang, gain] : g) {
        auto it = s.find(lang);
        if (it == s.end()) continue;
        x.push_back(it->second);
        y.push_back(gain);
      }
      if (x.size() < 3) throw StatsError("correlate_gain_similarity: fewer than 3 test languages for " + model + "/" + train);
      out.push_back({model, train, spearman(x, y)});
    }
  return out;
}

struct FeatureCell {
  std::string feature;
  Correlation corr;
  bool present_in_pretrain = false;
};

struct FeatureAnalysis {
  std::vector<FeatureCell> rows;
  std::vector<std::string> skipped;  // "feature: reason"
};

/// Per-feature Spearman between gains and the feature value over the test
/// languages that have both. Features with fewer than 3 observations or a
/// constant column are skipped with a note.
inline FeatureAnalysis correlate_gain_features(const std::map<std::string, double>& gains, const TypologyTable& table,
                                               const std::string& pretrain_language) {
  FeatureAnalysis a;
  std::optional<TypologyVector> pre;
  if (table.has(pretrain_language)) pre = table.vector(pretrain_language);
  const auto& schema = table.schema();
  std::vector<TypologyVector> vecs;
  std::vector<double> g;
  for (const auto& [lang, gain] : gains) {
    if (!table.has(lang)) continue;
    vecs.push_back(table.vector(lang));
    g.push_back(gain);
  }
  for (std::size_t f = 0; f < schema.size(); ++f) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      if (vecs[i].values[f] < 0) continue;
      x.push_back(vecs[i].values[f]);
      y.push_back(g[i]);
    }
    if (x.size() < 3) {
      a.skipped.push_back(schema[f] + ": fewer than 3 observed languages");
      continue;
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
      a.skipped.push_back(schema[f] + ": constant across test languages");
      continue;
    }
    FeatureCell c{schema[f], spearman(x, y), pre && pre->values[f] == 1};
    a.rows.push_back(c);
  }
  return a;
}

struct ProjectivityPoint {
  std::string language;
  double nonprojective_pct = 0;
  double gain = 0;
};

struct ProjectivityAnalysis {
  Correlation corr;
  std::vector<ProjectivityPoint> points;
};

inline ProjectivityAnalysis correlate_gain_projectivity(const std::map<std::string, double>& gains,
                                                        const std::map<std::string, double>& nonproj_fraction) {
  ProjectivityAnalysis a;
  std::vector<double> x, y;
  for (const auto& [lang, gain] : gains) {
    auto it = nonproj_fraction.find(lang);
    if (it == nonproj_fraction.end()) continue;
    a.points.push_back({lang, 100.0 * it->second, gain});
    x.push_back(it->second);
    y.push_back(gain);
  }
  if (x.size() < 3) throw StatsError("correlate_gain_projectivity: fewer than 3 languages");
  a.corr = spearman(x, y);
  return a;
}

// ---------------------------------------------------------------------------
// CSV output, one file per figure

inline std::string similarity_csv(const std::vector<SimilarityCell>& cells) {
  std::string out = "model,training_language,rho,p,n\n";
  for (const auto& c : cells)
    out += c.model + "," + c.training_language + "," + format_number(c.corr.rho) + "," + format_number(c.corr.p) + "," +
           std::to_string(c.corr.n) + "\n";
  return out;
}

inline std::string features_csv(const std::vector<std::pair<std::string, FeatureAnalysis>>& by_model) {
  std::string out = "model,feature,rho,p,n,present_in_pretrain\n";
  for (const auto& [model, a] : by_model)
    for (const auto& c : a.rows)
      out += model + "," + c.feature + "," + format_number(c.corr.rho) + "," + format_number(c.corr.p) + "," +
             std::to_string(c.corr.n) + "," + (c.present_in_pretrain ? "1" : "0") + "\n";
  return out;
}

inline std::string projectivity_csv(const std::vector<std::pair<std::string, ProjectivityAnalysis>>& by_model) {
  std::string out = "model,language,nonprojective_pct,gain,rho,p\n";
  for (const auto& [model, a] : by_model)
    for (const auto& pt : a.points)
      out += model + "," + pt.language + "," + format_number(pt.nonprojective_pct, 2) + "," + format_number(pt.gain) + "," +
             format_number(a.corr.rho) + "," + format_number(a.corr.p) + "\n";
  return out;
}

}  // namespace metaparse
