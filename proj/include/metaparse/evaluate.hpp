#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "metaparse/conllu.hpp"

namespace metaparse {

class StatsError : public DataError {
 public:
  using DataError::DataError;
};

struct RelationCounts {
  std::size_t head_correct = 0;  // head right
  std::size_t correct = 0;       // head and label right
  std::size_t total = 0;

  friend bool operator==(const RelationCounts&, const RelationCounts&) = default;
};

struct AttachmentScores {
  double las = 0;
  double uas = 0;
  std::size_t scored = 0;
  std::size_t head_correct = 0;
  std::size_t label_correct = 0;  // head + label
  std::map<std::string, RelationCounts> relations;  // keyed by gold deprel
};

/// LAS/UAS over aligned gold/predicted treebanks. Predictions are made on the
/// gold tokenization, so alignment is by position. Range and empty-node
/// lines are not tokens and are never scored.
inline AttachmentScores las(const Treebank& gold, const Treebank& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("las: gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                    std::to_string(pred.size()));
  }
  AttachmentScores r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold.sentences[i].tokens;
    const auto& p = pred.sentences[i].tokens;
    if (g.size() != p.size()) {
      throw DataError("las: sentence " + std::to_string(i + 1) + " has " + std::to_string(g.size()) +
                      " gold tokens but " + std::to_string(p.size()) + " predicted");
    }
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g[j].form != p[j].form) {
        throw DataError("las: token mismatch in sentence " + std::to_string(i + 1) + " at position " +
                        std::to_string(j + 1));
      }
      auto& rel = r.relations[g[j].deprel];
      ++rel.total;
      ++r.scored;
      if (g[j].head != p[j].head) continue;
      ++rel.head_correct;
      ++r.head_correct;
      if (g[j].deprel == p[j].deprel) {
        ++rel.correct;
        ++r.label_correct;
      }
    }
  }
  if (r.scored > 0) {
    r.uas = 100.0 * static_cast<double>(r.head_correct) / static_cast<double>(r.scored);
    r.las = 100.0 * static_cast<double>(r.label_correct) / static_cast<double>(r.scored);
  }
  return r;
}

struct EvalReport {
  std::string language;
  std::string model;
  std::size_t support_size = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double las = 0;
  double uas = 0;
  std::size_t scored = 0;
  std::map<std::string, RelationCounts> relations;

  nlohmann::json to_json() const {
    nlohmann::json rel = nlohmann::json::object();
    for (const auto& [k, c] : relations) rel[k] = {{"head_correct", c.head_correct}, {"correct", c.correct}, {"total", c.total}};
    return {{"language", language}, {"model", model},   {"support_size", support_size}, {"repetition", repetition},
            {"seed", seed},         {"las", las},       {"uas", uas},                   {"scored", scored},
            {"relations", rel}};
  }

  static EvalReport from_json(const nlohmann::json& j) {
    EvalReport r;
    r.language = j.at("language").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.support_size = j.at("support_size").get<std::size_t>();
    r.repetition = j.at("repetition").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.las = j.at("las").get<double>();
    r.uas = j.at("uas").get<double>();
    r.scored = j.value("scored", std::size_t{0});
    if (j.contains("relations"))
      for (const auto& [k, c] : j.at("relations").items())
        r.relations[k] = {c.at("head_correct").get<std::size_t>(), c.at("correct").get<std::size_t>(),
                          c.at("total").get<std::size_t>()};
    return r;
  }
};

inline EvalReport make_report(const AttachmentScores& s) {
  EvalReport r;
  r.las = s.las;
  r.uas = s.uas;
  r.scored = s.scored;
  r.relations = s.relations;
  return r;
}

// ---------------------------------------------------------------------------
// Descriptive statistics

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw StatsError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

struct GroupKey {
  std::string language;
  std::string model;
  std::size_t support_size = 0;

  auto tie() const { return std::tie(language, model, support_size); }
  friend bool operator<(const GroupKey& a, const GroupKey& b) { return a.tie() < b.tie(); }
  friend bool operator==(const GroupKey& a, const GroupKey& b) { return a.tie() == b.tie(); }
};

struct GroupSummary {
  GroupKey key;
  std::size_t count = 0;
  double mean_las = 0;
  double std_las = 0;
  double mean_uas = 0;
};

/// Groups by (language, model, |S|); std is over every seed x repetition.
inline std::vector<GroupSummary> aggregate(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw StatsError("aggregate: no reports");
  std::map<GroupKey, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : reports) {
    auto& g = groups[GroupKey{r.language, r.model, r.support_size}];
    g.first.push_back(r.las);
    g.second.push_back(r.uas);
  }
  std::vector<GroupSummary> out;
  for (const auto& [k, v] : groups) out.push_back({k, v.first.size(), mean(v.first), sample_std(v.first), mean(v.second)});
  return out;
}

/// Mean LAS per seed for one group: repetitions are averaged within a seed
/// before any paired test.
inline std::map<std::uint64_t, double> per_seed_las(const std::vector<EvalReport>& reports, const GroupKey& key) {
  std::map<std::uint64_t, std::vector<double>> by_seed;
  for (const auto& r : reports)
    if (GroupKey{r.language, r.model, r.support_size} == key) by_seed[r.seed].push_back(r.las);
  std::map<std::uint64_t, double> out;
  for (const auto& [s, v] : by_seed) out[s] = mean(v);
  return out;
}

// ---------------------------------------------------------------------------
// Tests

struct TTestResult {
  double t = 0;
  double p = 1;
  std::size_t df = 0;
  double threshold = 0;  // alpha / num_comparisons
  bool significant = false;
  bool degenerate = false;  // zero variance of the differences
};

/// Two-sided paired t-test. Bonferroni is applied by comparing p against
/// alpha / num_comparisons, which is the same decision as p * m < alpha.
/// Zero-variance differences: all zero gives t = 0, p = 1; a constant
/// nonzero shift gives t = +-inf, p = 0 and `degenerate` set.
inline TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b,
                                std::size_t num_comparisons = 1, double alpha = 0.005) {
  if (a.size() != b.size()) {
    throw StatsError("paired_ttest: length mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw StatsError("paired_ttest: need at least 2 pairs");
  if (num_comparisons == 0) throw StatsError("paired_ttest: num_comparisons must be positive");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  TTestResult r;
  r.df = d.size() - 1;
  r.threshold = alpha / static_cast<double>(num_comparisons);
  const double m = mean(d);
  const double s = sample_std(d);
  if (s == 0.0) {
    r.degenerate = true;
    if (m == 0.0) {
      r.t = 0;
      r.p = 1;
    } else {
      r.t = m > 0 ? HUGE_VAL : -HUGE_VAL;
      r.p = 0;
    }
  } else {
    r.t = m / (s / std::sqrt(static_cast<double>(d.size())));
    boost::math::students_t dist(static_cast<double>(r.df));
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  }
  r.significant = r.p < r.threshold;
  return r;
}

/// Ranks starting at 1; ties share the average of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw StatsError("correlation of a constant vector");
  return sxy / std::sqrt(sxx * syy);
}

struct Correlation {
  double rho = 0;
  double p = 1;
  std::size_t n = 0;
};

/// Spearman's rho with a two-sided p from t = rho sqrt((n-2)/(1-rho^2)).
inline Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StatsError("spearman: length mismatch");
  if (x.size() < 3) throw StatsError("spearman: need at least 3 observations");
  Correlation c;
  c.n = x.size();
  c.rho = std::clamp(pearson(average_ranks(x), average_ranks(y)), -1.0, 1.0);
  const double df = static_cast<double>(c.n - 2);
  if (1.0 - std::abs(c.rho) < 1e-15) {
    c.p = 0;
  } else {
    const double t = c.rho * std::sqrt(df / (1.0 - c.rho * c.rho));
    boost::math::students_t dist(df);
    c.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return c;
}

struct SignTest {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  double p = 1;  // one-sided, P(X >= wins) under Binomial(wins + losses, 1/2)
};

/// One-sided sign test that `a` tends to exceed `b`; ties are dropped.
inline SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw StatsError("sign_test: length mismatch");
  SignTest s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) ++s.wins;
    else if (a[i] < b[i]) ++s.losses;
    else ++s.ties;
  }
  const std::size_t n = s.wins + s.losses;
  if (n == 0 || s.wins == 0) {
    s.p = 1;
    return s;
  }
  boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  s.p = boost::math::cdf(boost::math::complement(dist, static_cast<double>(s.wins) - 1.0));
  return s;
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json reports_to_json(const std::vector<EvalReport>& reports) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : reports) a.push_back(r.to_json());
  return a;
}

inline std::vector<EvalReport> reports_from_json(const nlohmann::json& j) {
  std::vector<EvalReport> out;
  for (const auto& r : j) out.push_back(EvalReport::from_json(r));
  return out;
}

inline std::string format_number(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

}  // namespace metaparse
