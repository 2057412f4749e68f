#include <gtest/gtest.h>

#include "agnostic/tie_learner.hpp"
#include "oracles.hpp"

using namespace agnostic;

namespace {

const double kInfD = std::numeric_limits<double>::infinity();

WeightedEnsemble weights(std::uint64_t pos, std::uint64_t neg) {
  std::vector<EnsembleMember> m;
  if (pos) m.push_back({Hypothesis::threshold(-kInfD), pos, 0});
  if (neg) m.push_back({Hypothesis::threshold(kInfD), neg, 1});
  return WeightedEnsemble(std::move(m), 2, 2);
}

FiniteDistribution rcn8(Ratio eta) {
  std::vector<std::pair<Point, Rational>> marginal;
  for (int i = 0; i < 8; ++i) marginal.emplace_back(Point::scalar(i), make_rational(1, 8));
  return make_rcn(HypothesisClass::threshold(), Hypothesis::threshold(3.5), marginal, eta);
}

TieTrainConfig small_config() {
  TieTrainConfig cfg;
  cfg.voter.mode = VoterMode::Fixed;
  cfg.voter.fixed_t = 30;
  cfg.seed = SeedSpec(12);
  return cfg;
}

}  // namespace

TEST(TieClassifier, ConsensusBypassesTieHypothesis) {
  const Point x = Point::scalar(0);
  const auto h_neg = Hypothesis::threshold(kInfD);
  const TieClassifier agree(weights(240, 3), weights(243, 0), h_neg, MarginThresholds{});
  EXPECT_EQ(agree.consensus(x), Label::Positive);
  EXPECT_EQ(agree.predict(x), Label::Positive);
  const TieClassifier split_vote(weights(240, 3), weights(3, 240), h_neg, MarginThresholds{});
  EXPECT_EQ(split_vote.consensus(x), std::nullopt);
  EXPECT_EQ(split_vote.predict(x), Label::Negative);
  const TieClassifier weak(weights(231, 12), weights(240, 3), Hypothesis::threshold(-kInfD), MarginThresholds{});
  EXPECT_EQ(weak.consensus(x), std::nullopt);
  EXPECT_EQ(weak.predict(x), Label::Positive);
}

TEST(TieSet, LabelFilterUsesOwnLabel) {
  const MarginThresholds th;
  const Example pos{Point::scalar(0), Label::Positive}, neg{Point::scalar(0), Label::Negative};
  // 232/243 say +1. For y = +1 the wrong weight is 11/243 (at the filter
  // level) so the example is kept; for y = -1 it is 232/243, also kept.
  EXPECT_TRUE(in_tie_set(weights(232, 11), weights(243, 0), pos, th, FilterMode::Label));
  EXPECT_FALSE(in_tie_set(weights(233, 10), weights(243, 0), pos, th, FilterMode::Label));
  EXPECT_TRUE(in_tie_set(weights(243, 0), weights(243, 0), neg, th, FilterMode::Label));
  // Disagreement mode ignores y: both ensembles confidently +1.
  EXPECT_FALSE(in_tie_set(weights(243, 0), weights(243, 0), neg, th, FilterMode::Disagreement));
  EXPECT_TRUE(in_tie_set(weights(231, 12), weights(243, 0), neg, th, FilterMode::Disagreement));
}

TEST(TrainTie, RequiresThreeTimesPowerOfThree) {
  const auto d = rcn8(Ratio(1, 10));
  EXPECT_THROW(train_tie(d.class_ref(), d.sample(100, SeedSpec(1)), small_config()), StructuralError);
  EXPECT_THROW(train_tie(d.class_ref(), d.sample(2 * 81, SeedSpec(1)), small_config()), StructuralError);
  EXPECT_NO_THROW(train_tie(d.class_ref(), d.sample(3, SeedSpec(1)), small_config()));
}

TEST(TrainTie, DiagnosticsAndDeterminism) {
  const auto d = rcn8(Ratio(1, 10));
  const auto s = d.sample(3 * 729, SeedSpec(2));
  const auto a = train_tie(d.class_ref(), s, small_config());
  const auto b = train_tie(d.class_ref(), s, small_config());
  const auto& diag = a.diagnostics();
  EXPECT_EQ(diag.s11, 729u);
  EXPECT_EQ(diag.s12, 729u);
  EXPECT_EQ(diag.s13, 729u);
  EXPECT_EQ(diag.t1, 30u);
  EXPECT_EQ(diag.leaves1, 27u);
  EXPECT_LE(diag.erm_calls1, 27u);
  EXPECT_EQ(diag.erm_calls(), diag.erm_calls1 + diag.erm_calls2 + 1);
  EXPECT_EQ(a.h_tie(), b.h_tie());
  EXPECT_EQ(exact_error(a, d), exact_error(b, d));
  EXPECT_GE(exact_error(a, d), d.tau());
  // The tie set is recomputable from the two ensembles.
  const auto part3 = subsequence(s, 2 * 729 + 1, 3 * 729);
  std::size_t kept = 0;
  for (const auto& e : part3) {
    const bool in1 =
        a.ensemble_1().avg_neq(e.x, e.y) >= MarginThresholds{}.filter.to_rational();
    const bool in2 =
        a.ensemble_2().avg_neq(e.x, e.y) >= MarginThresholds{}.filter.to_rational();
    kept += in1 || in2;
  }
  EXPECT_EQ(diag.s3neq, kept);
  EXPECT_EQ(diag.fallback, kept == 0);
  const auto j = diag.to_json();
  for (const char* key : {"t1", "t2", "s3neq", "fallback", "erm_calls"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(TrainTie, NoiselessFallsBackWhenNoExampleIsFiltered) {
  // Two points, no noise: every leaf of 27 sees both points (up to 2^-26)
  // so every member is perfect, no example reaches avg_neq >= 11/243, and
  // h_tie is ERM on the whole third.
  const auto d = make_rcn(HypothesisClass::threshold(), Hypothesis::threshold(3.5),
                          {{Point::scalar(0), make_rational(1, 2)}, {Point::scalar(7), make_rational(1, 2)}},
                          Ratio(0, 1));
  const auto s = d.sample(3 * 729, SeedSpec(3));
  const auto c = train_tie(d.class_ref(), s, small_config());
  EXPECT_TRUE(c.diagnostics().fallback);
  EXPECT_EQ(c.diagnostics().s3neq, 0u);
  EXPECT_EQ(c.h_tie(), erm(d.class_ref(), subsequence(s, 1459, 2187)).hypothesis);
  EXPECT_EQ(exact_error(c, d), 0);
}

TEST(TrainTie, ErrorIsExact) {
  const auto d = rcn8(Ratio(1, 10));
  const auto c = train_tie(d.class_ref(), d.sample(243, SeedSpec(4)), small_config());
  EXPECT_EQ(tie_error(c, d), oracle::error(c, d));
}
