#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "metaparse/evaluate.hpp"
#include "support/stats_oracles.hpp"

namespace metaparse {
namespace {

using testing::brute_pearson;
using testing::brute_ranks;
using testing::hand_scoring_pair;
using testing::naive_attachment;
using testing::random_scoring_pair;
using testing::t_two_sided_p;

TEST(Las, PerfectPredictionScoresHundred) {
  auto [gold, pred] = hand_scoring_pair();
  auto s = las(gold, gold);
  EXPECT_EQ(s.las, 100.0);
  EXPECT_EQ(s.uas, 100.0);
}

TEST(Las, AllHeadsWrongScoresZero) {
  auto [gold, pred] = hand_scoring_pair();
  Treebank wrong = gold;
  wrong.sentences[0].tokens[0].head = 3;
  wrong.sentences[0].tokens[1].head = 1;
  wrong.sentences[0].tokens[2].head = 4;
  wrong.sentences[0].tokens[3].head = 0;
  auto s = las(gold, wrong);
  EXPECT_EQ(s.las, 0.0);
  EXPECT_EQ(s.uas, 0.0);
}

TEST(Las, HandExample) {
  auto [gold, pred] = hand_scoring_pair();
  auto s = las(gold, pred);
  EXPECT_DOUBLE_EQ(s.uas, 50.0);
  EXPECT_DOUBLE_EQ(s.las, 25.0);
  EXPECT_EQ(s.relations.at("nsubj"), (RelationCounts{1, 0, 1}));
  EXPECT_EQ(s.relations.at("det"), (RelationCounts{1, 1, 1}));
}

TEST(Las, MatchesNaiveLoopOnRandomPairs) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    auto [gold, pred] = random_scoring_pair(rng);
    auto s = las(gold, pred);
    auto o = naive_attachment(gold, pred);
    ASSERT_EQ(s.scored, o.scored);
    ASSERT_EQ(s.head_correct, o.head);
    ASSERT_EQ(s.label_correct, o.labeled);
    ASSERT_LE(s.las, s.uas);
    std::size_t total = 0;
    for (const auto& [k, c] : s.relations) total += c.total;
    ASSERT_EQ(total, s.scored);
  }
}

TEST(Las, InvariantToJointSentencePermutation) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto [gold, pred] = random_scoring_pair(rng);
    std::vector<std::size_t> order(gold.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    Treebank g2, p2;
    for (auto i : order) {
      g2.sentences.push_back(gold.sentences[i]);
      p2.sentences.push_back(pred.sentences[i]);
    }
    auto a = las(gold, pred), b = las(g2, p2);
    ASSERT_EQ(a.las, b.las);
    ASSERT_EQ(a.uas, b.uas);
  }
}

TEST(Las, TokenizationMismatchIsAnError) {
  auto [gold, pred] = hand_scoring_pair();
  pred.sentences[0].tokens.pop_back();
  EXPECT_THROW(las(gold, pred), DataError);
  Treebank more = gold;
  more.sentences.push_back(gold.sentences[0]);
  EXPECT_THROW(las(gold, more), DataError);
}

TEST(Las, ReportJsonRoundTrip) {
  auto [gold, pred] = hand_scoring_pair();
  EvalReport r = make_report(las(gold, pred));
  r.language = "xx";
  r.model = "maml";
  r.seed = 3;
  EvalReport back = EvalReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
}

EvalReport rep(const std::string& lang, const std::string& model, std::size_t s, std::uint64_t seed, double v) {
  EvalReport r;
  r.language = lang;
  r.model = model;
  r.support_size = s;
  r.seed = seed;
  r.las = v;
  r.uas = v;
  return r;
}

TEST(Aggregate, SingleAndPair) {
  auto one = aggregate({rep("a", "m", 20, 1, 42)});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].mean_las, 42);
  EXPECT_EQ(one[0].std_las, 0);
  auto two = aggregate({rep("a", "m", 20, 1, 40), rep("a", "m", 20, 2, 60)});
  EXPECT_DOUBLE_EQ(two[0].mean_las, 50);
  EXPECT_DOUBLE_EQ(two[0].std_las, std::sqrt((100.0 + 100.0) / 1.0));
  EXPECT_THROW(aggregate({}), StatsError);
}

TEST(Aggregate, GroupingPreservesTotals) {
  std::vector<EvalReport> rs;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 60; ++i)
    rs.push_back(rep(i % 3 ? "a" : "b", i % 2 ? "m" : "n", 20 * (1 + i % 4), static_cast<std::uint64_t>(i), double(rng() % 100)));
  std::size_t total = 0;
  for (const auto& g : aggregate(rs)) total += g.count;
  EXPECT_EQ(total, rs.size());
}

TEST(Aggregate, RepetitionsAreAveragedWithinSeed) {
  std::vector<EvalReport> rs{rep("a", "m", 20, 1, 10), rep("a", "m", 20, 1, 20), rep("a", "m", 20, 2, 40)};
  auto s = per_seed_las(rs, {"a", "m", 20});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[1], 15);
  EXPECT_DOUBLE_EQ(s[2], 40);
}

TEST(PairedTTest, IdenticalSamples) {
  std::vector<double> a{1, 2, 3, 4};
  auto r = paired_ttest(a, a);
  EXPECT_EQ(r.t, 0);
  EXPECT_EQ(r.p, 1);
  EXPECT_FALSE(r.significant);
}

TEST(PairedTTest, ConstantShiftIsDegenerate) {
  auto r = paired_ttest({2, 3, 4}, {1, 2, 3});
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_EQ(r.p, 0);
}

TEST(PairedTTest, SevenPairsMatchHandFormula) {
  const std::vector<double> a{71.2, 68.4, 70.1, 69.8, 72.5, 70.9, 69.0};
  const std::vector<double> b{69.9, 68.0, 68.7, 69.9, 70.8, 69.5, 68.1};
  std::vector<double> d;
  for (std::size_t i = 0; i < 7; ++i) d.push_back(a[i] - b[i]);
  double m = 0;
  for (double x : d) m += x;
  m /= 7;
  double ss = 0;
  for (double x : d) ss += (x - m) * (x - m);
  const double t = m / (std::sqrt(ss / 6) / std::sqrt(7.0));
  auto r = paired_ttest(a, b, 3);
  EXPECT_NEAR(r.t, t, 1e-12);
  EXPECT_EQ(r.df, 6u);
  EXPECT_NEAR(r.p, t_two_sided_p(t, 6), 1e-9);
  EXPECT_NEAR(r.threshold, 0.005 / 3, 1e-15);
  EXPECT_EQ(r.significant, r.p < 0.005 / 3);
  // Bonferroni equivalence
  EXPECT_EQ(r.significant, r.p * 3 < 0.005);
}

TEST(PairedTTest, Guards) {
  EXPECT_THROW(paired_ttest({1, 2}, {1}), StatsError);
  EXPECT_THROW(paired_ttest({1}, {1}), StatsError);
}

TEST(Spearman, IdentityAndReversal) {
  std::vector<double> x{3, 1, 4, 1.5, 9, 2.6};
  EXPECT_DOUBLE_EQ(spearman(x, x).rho, 1.0);
  std::vector<double> y = x;
  for (auto& v : y) v = -v;
  EXPECT_DOUBLE_EQ(spearman(x, y).rho, -1.0);
}

TEST(Spearman, TiesMatchRankThenPearsonOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + rng() % 10;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % 4);
    for (auto& v : y) v = static_cast<double>(rng() % 5);
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
    ASSERT_EQ(average_ranks(x), brute_ranks(x));
    ASSERT_NEAR(spearman(x, y).rho, brute_pearson(brute_ranks(x), brute_ranks(y)), 1e-12);
  }
}

TEST(Spearman, MonotoneInvariance) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(8), y(8), ax(8), ey(8);
    for (std::size_t i = 0; i < 8; ++i) {
      x[i] = dist(rng);
      y[i] = dist(rng);
      ax[i] = 2.5 * x[i] + 7;
      ey[i] = std::exp(y[i]);
    }
    EXPECT_NEAR(spearman(x, ax).rho, 1.0, 1e-12);
    EXPECT_NEAR(spearman(x, y).rho, spearman(ax, ey).rho, 1e-12);
  }
}

TEST(Spearman, PValueMatchesIntegratedTail) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const std::vector<double> y{2, 1, 4, 3, 7, 5, 6, 10, 8, 9};
  auto c = spearman(x, y);
  const double t = c.rho * std::sqrt(8 / (1 - c.rho * c.rho));
  EXPECT_NEAR(c.p, t_two_sided_p(t, 8), 1e-9);
  // sum d^2 = 1+1+1+1+4+1+1+4+1+1 = 16 -> rho = 1 - 6*16/(10*99)
  EXPECT_NEAR(c.rho, 1 - 96.0 / 990.0, 1e-12);
}

TEST(Spearman, Guards) {
  EXPECT_THROW(spearman({1, 1, 1}, {1, 2, 3}), StatsError);
  EXPECT_THROW(spearman({1, 2}, {1, 2}), StatsError);
  EXPECT_THROW(spearman({1, 2, 3}, {1, 2}), StatsError);
}

TEST(SignTest, AllWinsOfSeven) {
  auto s = sign_test({2, 2, 2, 2, 2, 2, 2}, {1, 1, 1, 1, 1, 1, 1});
  EXPECT_EQ(s.wins, 7u);
  EXPECT_NEAR(s.p, 1.0 / 128.0, 1e-15);
  auto t = sign_test({2, 2, 2, 2, 2, 1, 1}, {1, 1, 1, 1, 1, 1, 2});
  EXPECT_EQ(t.ties, 1u);
  // P(X >= 5 | n = 6) = (6 + 1) / 64
  EXPECT_NEAR(t.p, 7.0 / 64.0, 1e-15);
}

}  // namespace
}  // namespace metaparse
