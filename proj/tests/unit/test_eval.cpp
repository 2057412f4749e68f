#include <gtest/gtest.h>

#include <sstream>

#include "agnostic/eval.hpp"
#include "oracles.hpp"

using namespace agnostic;

namespace {

std::shared_ptr<const FiniteDistribution> rcn8(Ratio eta) {
  std::vector<std::pair<Point, Rational>> marginal;
  for (int i = 0; i < 8; ++i) marginal.emplace_back(Point::scalar(i), make_rational(1, 8));
  return std::make_shared<const FiniteDistribution>(
      make_rcn(HypothesisClass::threshold(), Hypothesis::threshold(3.5), marginal, eta));
}

ExperimentPlan small_plan() {
  ExperimentPlan plan;
  plan.distribution = rcn8(Ratio(1, 10));
  plan.learners = {LearnerId::PlainErm, LearnerId::SubsampledVote, LearnerId::Tie, LearnerId::Selected};
  plan.m_grid = {9, 243};
  plan.trials = 3;
  plan.learner_config.voter.mode = VoterMode::Fixed;
  plan.learner_config.voter.fixed_t = 40;
  plan.master_seed = 5;
  return plan;
}

std::string csv_of(const PlanResult& r) {
  std::ostringstream os;
  write_records_csv(os, r.records);
  return os.str();
}

TrialRecord record(LearnerId id, std::uint64_t m, Rational err, Rational tau = 0) {
  TrialRecord r;
  r.learner = id;
  r.m = m;
  r.tau = tau;
  r.err = err;
  r.excess = err - tau;
  return r;
}

}  // namespace

TEST(RunPlan, RealizableSeparablePlainErmHasZeroError) {
  ExperimentPlan plan;
  plan.distribution = rcn8(Ratio(0, 1));
  plan.learners = {LearnerId::PlainErm};
  plan.m_grid = {81};
  plan.trials = 1;
  const auto r = run_plan(plan, 1);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].err, 0);
  EXPECT_EQ(r.records[0].excess, 0);
}

TEST(RunPlan, RecordCountAndSkips) {
  auto plan = small_plan();
  plan.m_grid = {3, 9, 243};
  const auto r = run_plan(plan, 2);
  // selected is infeasible at m = 3 (k = 1); everything else runs.
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].learner, LearnerId::Selected);
  EXPECT_EQ(r.skipped[0].m, 3u);
  EXPECT_FALSE(r.skipped[0].reason.empty());
  EXPECT_EQ(r.records.size(), plan.trials * (plan.learners.size() * plan.m_grid.size() - 1));
  EXPECT_EQ(infeasible_reason(LearnerId::Tie, 1).has_value(), true);
}

TEST(RunPlan, DeterministicAcrossJobCounts) {
  const auto plan = small_plan();
  const auto one = csv_of(run_plan(plan, 1));
  EXPECT_EQ(one, csv_of(run_plan(plan, 4)));
  EXPECT_EQ(one, csv_of(run_plan(plan, 1)));
  EXPECT_EQ(one.substr(0, one.find('\n')), kTrialCsvHeader);
}

TEST(RunPlan, SameSampleForEveryLearner) {
  // plain_erm at (m, trial) is recomputable from the shared sample seed.
  const auto plan = small_plan();
  const auto r = run_plan(plan, 1);
  for (const auto& rec : r.records) {
    if (rec.learner != LearnerId::PlainErm) continue;
    const auto k = static_cast<std::uint32_t>(*exact_log3(rec.m));
    const auto s = plan.distribution->sample(rec.m, sample_seed_for(plan.master_seed, k, rec.trial));
    EXPECT_EQ(rec.err, exact_error(erm(plan.distribution->class_ref(), s).hypothesis, *plan.distribution));
  }
}

TEST(RunPlan, RecordsAreExactAndConsistent) {
  const auto plan = small_plan();
  for (const auto& rec : run_plan(plan, 0).records) {
    EXPECT_GE(rec.err, 0);
    EXPECT_LE(rec.err, 1);
    EXPECT_EQ(rec.excess, rec.err - rec.tau);
    EXPECT_GE(rec.err, rec.tau);  // h_star is Bayes under RCN
    EXPECT_EQ(rec.ms, 0u);
    for (const auto& e : rec.ensembles) EXPECT_LE(e.erm_calls, std::min<std::uint64_t>(e.t, e.leaf_count));
    if (rec.learner == LearnerId::Tie || rec.learner == LearnerId::Selected) {
      EXPECT_TRUE(rec.s3neq.has_value());
      EXPECT_TRUE(rec.margin10.has_value());
    }
    if (rec.learner == LearnerId::Selected) {
      ASSERT_TRUE(rec.selection.has_value());
      EXPECT_EQ(rec.selection->holdout_chosen,
                std::min(rec.selection->holdout_tie, rec.selection->holdout_competitor));
      const auto& chosen =
          rec.selection->side == ChosenSide::Tie ? rec.selection->err_tie : rec.selection->err_competitor;
      EXPECT_EQ(rec.err, chosen);
    }
  }
}

TEST(RunPlan, InvalidPlanRejected) {
  auto plan = small_plan();
  plan.m_grid = {100};
  EXPECT_THROW(run_plan(plan), ConfigError);
  plan = small_plan();
  plan.trials = 0;
  EXPECT_THROW(run_plan(plan), ConfigError);
}

TEST(Csv, RoundTrip) {
  const auto plan = small_plan();
  const auto r = run_plan(plan, 1);
  const auto text = csv_of(r);
  std::istringstream in(text);
  const auto back = read_records_csv(in);
  ASSERT_EQ(back.size(), r.records.size());
  std::ostringstream again;
  write_records_csv(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(Csv, EmptyFieldsForNotApplicable) {
  std::ostringstream os;
  write_records_csv(os, {record(LearnerId::PlainErm, 9, make_rational(1, 3), make_rational(1, 10))});
  EXPECT_EQ(os.str(), std::string(kTrialCsvHeader) + "\n0,plain_erm,9,1,10,1,3,7,30,,,,,,,0,0\n");
}

TEST(Aggregate, SingleRecordCell) {
  const auto rows = aggregate({record(LearnerId::Tie, 27, make_rational(1, 4))});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].mean_err, make_rational(1, 4));
  EXPECT_EQ(rows[0].median_err, make_rational(1, 4));
  EXPECT_EQ(rows[0].q05_err, make_rational(1, 4));
  EXPECT_EQ(rows[0].q95_err, make_rational(1, 4));
}

TEST(Aggregate, NearestRankByHand) {
  // Values 5,1,4,2,3 (in tenths). Sorted 1..5; nearest rank ceil(qN):
  // q05 -> rank 1, median -> rank 3, q95 -> rank 5. Mean 3/10.
  std::vector<TrialRecord> recs;
  for (int v : {5, 1, 4, 2, 3}) recs.push_back(record(LearnerId::PlainErm, 9, make_rational(v, 10)));
  const auto rows = aggregate(recs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].count, 5u);
  EXPECT_EQ(rows[0].mean_err, make_rational(3, 10));
  EXPECT_EQ(rows[0].q05_err, make_rational(1, 10));
  EXPECT_EQ(rows[0].median_err, make_rational(3, 10));
  EXPECT_EQ(rows[0].q95_err, make_rational(5, 10));
}

TEST(Aggregate, ConstantRecordsHaveNoSpread) {
  std::vector<TrialRecord> recs(7, record(LearnerId::Tie, 9, make_rational(2, 7)));
  const auto row = aggregate(recs).at(0);
  EXPECT_EQ(row.q05_err, row.q95_err);
  EXPECT_EQ(row.mean_err, row.q05_err);
}

TEST(Aggregate, SkippedCellsBecomeSkipRows) {
  const auto rows = aggregate({}, {{LearnerId::Tie, 1, "needs 3 * 3^k"}});
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].skip_reason.has_value());
  std::ostringstream os;
  write_summary_csv(os, rows);
  EXPECT_NE(os.str().find("tie,1,0,,,,,,,,,needs 3 * 3^k"), std::string::npos);
}

TEST(FitRate, SyntheticSlopes) {
  std::vector<std::pair<double, double>> inv, inv_sqrt;
  for (double m : {81.0, 243.0, 729.0, 2187.0}) {
    inv.emplace_back(m, 3.0 / m);
    inv_sqrt.emplace_back(m, 3.0 / std::sqrt(m));
  }
  EXPECT_NEAR(fit_rate(inv).slope, -1.0, 1e-12);
  EXPECT_NEAR(fit_rate(inv_sqrt).slope, -0.5, 1e-12);
}

TEST(FitRate, NonpositiveExcludedAndTooFewPoints) {
  const auto f = fit_rate({{9, 0.1}, {27, 0.0}, {81, -0.01}, {243, 0.01}});
  EXPECT_FALSE(f.ok);
  EXPECT_EQ(f.points, 2u);
  const auto g = fit_rate({{9, 1.0 / 9}, {27, 0.0}, {81, 1.0 / 81}, {243, 1.0 / 243}});
  EXPECT_TRUE(g.ok);
  EXPECT_NEAR(g.slope, -1.0, 1e-12);
}
