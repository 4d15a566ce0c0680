#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "metaparse/model.hpp"
#include "metaparse/optim.hpp"
#include "support/oracles.hpp"
#include "support/tiny.hpp"

namespace metaparse {
namespace {

using testing::five_tokens;
using testing::tiny_config;
using testing::zero_params;

ParserParams with_params(const ParserParams& model, const ParamSet& ps) {
  ParserParams m = model;
  m.params() = ps;
  return m;
}

TEST(ParserConfig, JsonRoundTripAndHash) {
  ParserConfig c = tiny_config();
  ParserConfig back = ParserConfig::from_json(c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  back.d_arc += 1;
  EXPECT_NE(back.hash(), c.hash());
  nlohmann::json j = c.to_json();
  j["layer_type"] = "lstm";
  EXPECT_THROW(ParserConfig::from_json(j), ConfigError);
}

TEST(ParserConfig, ValidationRejectsBadVocabularies) {
  ParserConfig c = tiny_config();
  c.labels.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config(kMaxLabels + 1);
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.words = {"cat"};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ParserParams, GroupsAndInitialMixing) {
  ParserParams m = ParserParams::initialize(tiny_config(), 1);
  for (const auto& p : m.params()) {
    const bool enc = p.name.rfind("embed", 0) == 0 || p.name.rfind("layer", 0) == 0;
    EXPECT_EQ(p.group, enc ? ParamGroup::encoder : ParamGroup::decoder) << p.name;
  }
  auto w = mixing_weights(m);
  ASSERT_EQ(w.size(), 3u);  // embeddings + 2 layers
  for (double x : w) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
}

TEST(ParserParams, FromPartsChecksShapes) {
  ParserParams m = ParserParams::initialize(tiny_config(), 1);
  ParserParams again = ParserParams::from_parts(m.config(), m.params());
  EXPECT_EQ(again.params(), m.params());
  ParserConfig other = tiny_config();
  other.d_tag = 4;
  EXPECT_THROW(ParserParams::from_parts(other, m.params()), ConfigError);
}

TEST(Encode, ZeroEtaGivesZeroEmbeddings) {
  ParserParams m = ParserParams::initialize(tiny_config(), 2);
  m.params()[m.layout().eta].value[0] = 0;
  const Tensor e = encode(five_tokens(), m);
  for (real v : e.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(e.rows(), 5u);
  EXPECT_EQ(e.cols(), 6u);
}

TEST(Encode, EmptySentenceIsAnError) {
  ParserParams m = ParserParams::initialize(tiny_config(), 2);
  EXPECT_THROW(encode(EncodedSentence{}, m), DataError);
}

TEST(Encode, UnknownFormsMapToUnk) {
  ParserParams m = ParserParams::initialize(tiny_config(), 2);
  Sentence s;
  s.tokens.push_back(Token{1, "The", "_", "_", "_", "_", 0, "l0", "_", "_"});
  s.tokens.push_back(Token{2, "zebra", "_", "_", "_", "_", 1, "nope", "_", "_"});
  EncodedSentence e = m.encode_sentence(s);
  EXPECT_EQ(e.words, (std::vector<int>{1, 0}));
  EXPECT_EQ(e.labels, (std::vector<int>{0, -1}));
}

TEST(Encode, GradientMatchesFiniteDifferences) {
  for (LayerType type : {LayerType::attention, LayerType::gated}) {
    ParserParams model = ParserParams::initialize(tiny_config(4, type), 3);
    model.params()[model.layout().gamma].value = Tensor::row({0.3, -0.2, 0.5});
    const EncodedSentence s = five_tokens();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> dist;
    Tensor probe = Tensor::matrix(5, 6);
    for (auto& v : probe.values()) v = dist(rng);
    auto build = [&](ad::Tape& tape, const BoundParams& bp, const ParserParams& m) {
      return ad::sum(ad::tanh(ad::mul(encode_graph(tape, bp, m, s, nullptr), tape.constant(probe))));
    };
    ad::Tape tape;
    BoundParams bp = bind(tape, model.params(), true);
    auto gm = tape.backward(build(tape, bp, model));
    Gradients analytic;
    for (auto v : bp.vars) analytic.push_back(gm.at(v));
    auto value = [&](const ParamSet& ps) {
      ParserParams m = with_params(model, ps);
      ad::Tape t;
      BoundParams b = bind(t, m.params(), false);
      return static_cast<double>(build(t, b, m).value()[0]);
    };
    auto r = testing::finite_difference_check(model.params(), analytic, value);
    EXPECT_LT(r.max_relative_error, 1e-5);
    EXPECT_GT(r.checked, 200u);
  }
}

TEST(ScoreArcs, ZeroBilinearGivesZeroScores) {
  ParserParams m = ParserParams::initialize(tiny_config(), 5);
  zero_params(m.params(), {"arc.U", "arc.u_head"});
  ScoreMatrix s = score_arcs(encode(five_tokens(), m), m);
  for (std::size_t h = 0; h <= 5; ++h)
    for (std::size_t d = 1; d <= 5; ++d)
      if (h != d) {
        EXPECT_EQ(s.at(h, d), 0.0);
      }
}

TEST(ScoreArcs, SingleTokenOnlyHasRootCandidate) {
  ParserParams m = ParserParams::initialize(tiny_config(), 5);
  EncodedSentence one{{2}, {0}, {0}};
  ScoreMatrix s = score_arcs(encode(one, m), m);
  EXPECT_EQ(s.n(), 1u);
  EXPECT_EQ(s.at(1, 1), kMasked);
  EXPECT_TRUE(std::isfinite(s.at(0, 1)));
  EXPECT_EQ(predict(one, m).heads, HeadVector{0});
}

TEST(ScoreArcs, MatchesHandEvaluatedBilinearForm) {
  ParserConfig c = tiny_config(2, LayerType::gated, 2);
  c.d_arc = 2;
  ParserParams m = ParserParams::initialize(c, 6);
  auto set = [&](const char* name, Tensor t) { m.params()[m.params().index_of(name)].value = std::move(t); };
  set("root", Tensor::row({0.5, -1.0}));
  set("arc.head.w", Tensor::matrix(2, 2, {1.0, 0.5, -0.5, 2.0}));
  set("arc.head.b", Tensor::row({0.1, 0.0}));
  set("arc.dep.w", Tensor::matrix(2, 2, {0.3, -1.0, 1.0, 0.2}));
  set("arc.dep.b", Tensor::row({0.0, -0.2}));
  set("arc.U", Tensor::matrix(2, 2, {1.0, 2.0, -1.0, 0.5}));
  set("arc.u_head", Tensor::matrix(2, 1, {0.7, -0.4}));
  const Tensor e = Tensor::matrix(2, 2, {0.2, 0.4, -0.6, 1.0});

  // by hand: rows x = [root; e]
  const double X[3][2] = {{0.5, -1.0}, {0.2, 0.4}, {-0.6, 1.0}};
  double H[3][2], D[3][2];
  for (int i = 0; i < 3; ++i) {
    H[i][0] = std::tanh(X[i][0] * 1.0 + X[i][1] * -0.5 + 0.1);
    H[i][1] = std::tanh(X[i][0] * 0.5 + X[i][1] * 2.0 + 0.0);
    D[i][0] = std::tanh(X[i][0] * 0.3 + X[i][1] * 1.0 + 0.0);
    D[i][1] = std::tanh(X[i][0] * -1.0 + X[i][1] * 0.2 - 0.2);
  }
  const ScoreMatrix s = score_arcs(e, m);
  for (int h = 0; h < 3; ++h)
    for (int d = 1; d < 3; ++d) {
      if (h == d) continue;
      const double hu0 = H[h][0] * 1.0 + H[h][1] * -1.0;
      const double hu1 = H[h][0] * 2.0 + H[h][1] * 0.5;
      const double expected = hu0 * D[d][0] + hu1 * D[d][1] + H[h][0] * 0.7 + H[h][1] * -0.4;
      EXPECT_NEAR(s.at(static_cast<std::size_t>(h), static_cast<std::size_t>(d)), expected, 1e-14);
    }
}

TEST(ScoreLabels, ZeroParamsGiveUniformDistribution) {
  ParserParams m = ParserParams::initialize(tiny_config(7), 8);
  zero_params(m.params(), {"label.W", "label.w_", "label.b"});
  const Tensor lp = score_labels(encode(five_tokens(), m), five_tokens().heads, m);
  for (real v : lp.values()) EXPECT_NEAR(v, -std::log(7.0), 1e-14);
}

TEST(ScoreLabels, RowsNormalize) {
  ParserParams m = ParserParams::initialize(tiny_config(7), 8);
  const Tensor lp = score_labels(encode(five_tokens(), m), five_tokens().heads, m);
  for (std::size_t i = 0; i < lp.rows(); ++i) {
    double z = 0;
    for (std::size_t k = 0; k < lp.cols(); ++k) z += std::exp(lp(i, k));
    EXPECT_NEAR(z, 1.0, 1e-9);
  }
}

TEST(ScoreLabels, InvalidHeadIsAnError) {
  ParserParams m = ParserParams::initialize(tiny_config(), 8);
  const Tensor e = encode(five_tokens(), m);
  EXPECT_THROW(score_labels(e, {2, 3, 0, 9, 3}, m), DataError);
  EXPECT_THROW(score_labels(e, {2, 3}, m), ShapeError);
}

TEST(ScoreLabels, LabelLossGradientMatchesFiniteDifferences) {
  ParserParams model = ParserParams::initialize(tiny_config(5), 9);
  const EncodedSentence s = five_tokens();
  auto build = [&](ad::Tape& tape, const BoundParams& bp, const ParserParams& m) {
    ad::Var er = with_root(bp, m, encode_graph(tape, bp, m, s, nullptr));
    return ad::nll(label_logprob_graph(bp, m, er, s.heads, nullptr), s.labels);
  };
  ad::Tape tape;
  BoundParams bp = bind(tape, model.params(), true);
  auto gm = tape.backward(build(tape, bp, model));
  Gradients analytic;
  for (auto v : bp.vars) analytic.push_back(gm.at(v));
  auto value = [&](const ParamSet& ps) {
    ParserParams m = with_params(model, ps);
    ad::Tape t;
    BoundParams b = bind(t, m.params(), false);
    return static_cast<double>(build(t, b, m).value()[0]);
  };
  EXPECT_LT(testing::finite_difference_check(model.params(), analytic, value).max_relative_error, 1e-5);
}

TEST(Loss, UniformModelMatchesClosedForm) {
  // arc scores all zero and label scorer zero: each dependent chooses among n
  // candidates (ROOT plus the other n-1 tokens), each label among K.
  const std::size_t K = 6;
  ParserParams m = ParserParams::initialize(tiny_config(K), 10);
  zero_params(m.params(), {"arc.U", "arc.u_head", "label.W", "label.w_", "label.b"});
  const EncodedSentence s = five_tokens();
  const double n = 5;
  EXPECT_NEAR(loss(s, m), n * std::log(n) + n * std::log(static_cast<double>(K)), 1e-12);
}

TEST(Loss, ConfidentModelApproachesZero) {
  // single token: the only arc candidate is ROOT, so arc loss is exactly 0;
  // a huge bias on the gold label drives the label loss to 0.
  ParserParams m = ParserParams::initialize(tiny_config(3), 11);
  m.params()[m.layout().label_b].value = Tensor::row({0, 60, 0});
  EncodedSentence one{{2}, {0}, {1}};
  const double l = loss(one, m);
  EXPECT_GE(l, 0.0);
  EXPECT_LT(l, 1e-20);
}

TEST(Loss, SameDropoutSeedIsBitIdentical) {
  ParserConfig c = tiny_config();
  c.embedding_dropout = 0.2;
  c.hidden_dropout = 0.33;
  ParserParams m = ParserParams::initialize(c, 12);
  Rng a(99), b(99), other(100);
  const double la = loss(five_tokens(), m, &a);
  EXPECT_EQ(la, loss(five_tokens(), m, &b));
  EXPECT_NE(la, loss(five_tokens(), m, &other));
  EXPECT_EQ(loss(five_tokens(), m), loss(five_tokens(), m));
}

TEST(Loss, DecreasesMonotonicallyWhenOverfittingOneSentence) {
  ParserParams m = ParserParams::initialize(tiny_config(), 13);
  const std::vector<EncodedSentence> batch{five_tokens()};
  double prev = loss_and_gradient(m, batch).loss;
  for (int step = 0; step < 50; ++step) {
    auto lg = loss_and_gradient(m, batch);
    sgd_step(m.params(), lg.grads, 0.01);
    const double cur = loss(batch[0], m);
    ASSERT_LT(cur, prev) << "step " << step;
    prev = cur;
  }
  EXPECT_LT(prev, 1.0);
}

TEST(Loss, BatchLossIsMeanOfSentenceLosses) {
  ParserParams m = ParserParams::initialize(tiny_config(), 14);
  EncodedSentence two{{3, 1}, {0, 1}, {2, 0}};
  const std::vector<EncodedSentence> batch{five_tokens(), two};
  EXPECT_NEAR(loss_and_gradient(m, batch).loss, 0.5 * (loss(batch[0], m) + loss(batch[1], m)), 1e-12);
  EXPECT_THROW(loss_and_gradient(m, std::span<const EncodedSentence>{}), DataError);
}

TEST(Loss, UnknownLabelsAreSkipped) {
  ParserParams m = ParserParams::initialize(tiny_config(), 15);
  EncodedSentence s = five_tokens();
  EncodedSentence masked = s;
  masked.labels[1] = -1;
  const Tensor lp = score_labels(encode(s, m), s.heads, m);
  EXPECT_NEAR(loss(s, m) - loss(masked, m), -lp(1, 1), 1e-12);
}

TEST(Loss, FullModelGradientAllGroups) {
  for (LayerType type : {LayerType::attention, LayerType::gated}) {
    ParserParams model = ParserParams::initialize(tiny_config(4, type), 16);
    model.params()[model.layout().gamma].value = Tensor::row({0.1, 0.4, -0.3});
    const std::vector<EncodedSentence> batch{five_tokens()};
    auto lg = loss_and_gradient(model, batch);
    auto value = [&](const ParamSet& ps) { return loss(batch[0], with_params(model, ps)); };
    auto r = testing::finite_difference_check(model.params(), lg.grads, value);
    EXPECT_LT(r.max_relative_error, 1e-4);
    EXPECT_EQ(r.checked, [&] {
      std::size_t n = 0;
      for (const auto& p : model.params()) n += p.value.size();
      return n;
    }());
  }
}

TEST(Predict, AlwaysReturnsValidTrees) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    ParserParams m = ParserParams::initialize(tiny_config(), rng());
    EncodedSentence s;
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) {
      s.words.push_back(static_cast<int>(rng() % 6));
      s.heads.push_back(0);
      s.labels.push_back(0);
    }
    const Prediction p = predict(s, m);
    ASSERT_TRUE(is_tree(p.heads));
    ASSERT_EQ(p.labels.size(), n);
  }
}

TEST(Predict, LabelTiesGoToLowestId) {
  ParserParams m = ParserParams::initialize(tiny_config(4), 18);
  zero_params(m.params(), {"label.W", "label.w_", "label.b"});
  const Prediction p = predict(five_tokens(), m);
  for (int l : p.labels) EXPECT_EQ(l, 0);
}

TEST(Predict, ParseTreebankWritesHeadsAndLabels) {
  ParserParams m = ParserParams::initialize(tiny_config(), 19);
  Treebank tb;
  tb.sentences.push_back(testing::as_sentence(five_tokens(), m.config()));
  Treebank out = parse_treebank(tb, m);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(is_tree(out.sentences[0].heads()));
  for (const auto& t : out.sentences[0].tokens) EXPECT_TRUE(m.label_vocab().find(t.deprel) >= 0);
}

}  // namespace
}  // namespace metaparse
