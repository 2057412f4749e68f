#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agnostic/distributions.hpp"
#include "agnostic/ensemble.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/random.hpp"
#include "agnostic/selector.hpp"
#include "agnostic/split_scheme.hpp"
#include "agnostic/tie_learner.hpp"

namespace agnostic {

enum class LearnerId : std::uint8_t { PlainErm = 0, FullVote = 1, SubsampledVote = 2, Tie = 3, Selected = 4 };

inline const char* to_string(LearnerId id) {
  switch (id) {
    case LearnerId::PlainErm: return "plain_erm";
    case LearnerId::FullVote: return "full_vote";
    case LearnerId::SubsampledVote: return "subsampled_vote";
    case LearnerId::Tie: return "tie";
    case LearnerId::Selected: return "selected";
  }
  return "?";
}

inline std::optional<LearnerId> parse_learner(std::string_view name) {
  for (auto id : {LearnerId::PlainErm, LearnerId::FullVote, LearnerId::SubsampledVote, LearnerId::Tie,
                  LearnerId::Selected})
    if (name == to_string(id)) return id;
  return std::nullopt;
}

struct ExperimentPlan {
  std::shared_ptr<const FiniteDistribution> distribution;
  std::vector<LearnerId> learners;
  std::vector<std::uint64_t> m_grid;
  std::size_t trials = 1;
  TieTrainConfig learner_config;  // its seed field is ignored; seeds come from master_seed
  std::uint64_t master_seed = 0;
  bool record_timing = false;  // wall time breaks byte-identical reruns, so off by default

  void validate() const {
    if (!distribution) throw ConfigError("plan has no distribution", "distribution");
    if (learners.empty()) throw ConfigError("plan has no learners", "learners");
    if (m_grid.empty()) throw ConfigError("plan has an empty m grid", "plan.m");
    for (std::size_t i = 0; i < m_grid.size(); ++i)
      if (!exact_log3(m_grid[i]))
        throw ConfigError("m = " + std::to_string(m_grid[i]) + " is not a power of 3",
                          "plan.m[" + std::to_string(i) + "]");
    if (trials < 1) throw ConfigError("trials must be >= 1", "plan.trials");
    learner_config.thresholds.validate();
    learner_config.split.validate();
  }
};

struct EnsembleAudit {
  std::uint64_t t = 0;
  std::size_t leaf_count = 0;
  std::uint64_t erm_calls = 0;
};

struct SelectionAudit {
  Rational err_tie, err_competitor;
  Rational holdout_tie, holdout_competitor, holdout_chosen;
  ChosenSide side = ChosenSide::Tie;
};

struct TrialRecord {
  std::size_t trial = 0;
  LearnerId learner = LearnerId::PlainErm;
  std::uint64_t m = 0;
  Rational tau, err, excess;
  std::optional<Rational> margin10, margin11;
  std::optional<std::size_t> s3neq;
  std::optional<bool> fallback;
  std::uint64_t erm_calls = 0;
  std::uint64_t ms = 0;
  // In-memory audit fields, not written to CSV.
  std::vector<EnsembleAudit> ensembles;
  std::optional<SelectionAudit> selection;
};

struct SkippedCell {
  LearnerId learner;
  std::uint64_t m;
  std::string reason;
};

struct PlanResult {
  std::vector<TrialRecord> records;
  std::vector<SkippedCell> skipped;
};

/// Why a learner cannot run at sample size m, or nullopt if it can.
inline std::optional<std::string> infeasible_reason(LearnerId learner, std::uint64_t m) {
  const auto k = exact_log3(m);
  if (!k) return "m is not a power of 3";
  switch (learner) {
    case LearnerId::PlainErm:
    case LearnerId::FullVote:
    case LearnerId::SubsampledVote: return std::nullopt;
    case LearnerId::Tie:
      if (*k < 1) return "tie learner needs m = 3 * 3^k";
      return std::nullopt;
    case LearnerId::Selected:
      if (*k < 2) return "selected learner needs m = 3^k with k >= 2";
      return std::nullopt;
  }
  return "unknown learner";
}

/// Seed of the training sample for (m = 3^k, trial); shared by all learners.
inline SeedSpec sample_seed_for(std::uint64_t master, std::uint32_t k, std::size_t trial) {
  return SeedSpec(master).child(1).child(k).child(static_cast<std::uint32_t>(trial));
}

/// Seed of a learner's internal randomness for (learner, m = 3^k, trial).
inline SeedSpec learner_seed_for(std::uint64_t master, LearnerId learner, std::uint32_t k, std::size_t trial) {
  return SeedSpec(master).child(2).child(static_cast<std::uint32_t>(learner)).child(k).child(
      static_cast<std::uint32_t>(trial));
}

namespace detail {

inline EnsembleAudit audit(const WeightedEnsemble& e) { return {e.total_weight(), e.leaf_count(), e.erm_calls()}; }

}  // namespace detail

/// One (learner, m, trial) cell. The training sample depends only on
/// (m, trial) so learners are compared on identical data; learner-internal
/// randomness depends on (learner, m, trial).
inline TrialRecord run_trial(const ExperimentPlan& plan, LearnerId learner, std::uint64_t m, std::size_t trial) {
  const auto& dist = *plan.distribution;
  const auto& cls = dist.class_ref();
  const auto k = static_cast<std::uint32_t>(*exact_log3(m));
  const SeedSpec sample_seed = sample_seed_for(plan.master_seed, k, trial);
  const SeedSpec learner_seed = learner_seed_for(plan.master_seed, learner, k, trial);

  const auto start = std::chrono::steady_clock::now();
  const LabeledSequence s = dist.sample(m, sample_seed);
  const auto& lc = plan.learner_config;

  TrialRecord rec;
  rec.trial = trial;
  rec.learner = learner;
  rec.m = m;
  rec.tau = dist.tau();

  auto record_ensemble_margins = [&](const WeightedEnsemble& e) {
    rec.margin10 = margin_loss(e, dist, lc.thresholds.analysis);
    rec.margin11 = margin_loss(e, dist, lc.thresholds.filter);
  };

  switch (learner) {
    case LearnerId::PlainErm: {
      const auto h = erm(cls, s, lc.erm_tie).hypothesis;
      rec.err = exact_error(h, dist);
      rec.erm_calls = 1;
      break;
    }
    case LearnerId::FullVote: {
      const auto e = train_full_ensemble(cls, s, {}, lc.split, lc.erm_tie);
      rec.err = exact_error(e, dist);
      record_ensemble_margins(e);
      rec.erm_calls = e.erm_calls();
      rec.ensembles.push_back(detail::audit(e));
      break;
    }
    case LearnerId::SubsampledVote: {
      const auto e = subsample_ensemble(cls, s, {}, lc.split, lc.voter, learner_seed, lc.erm_tie);
      rec.err = exact_error(e, dist);
      record_ensemble_margins(e);
      rec.erm_calls = e.erm_calls();
      rec.ensembles.push_back(detail::audit(e));
      break;
    }
    case LearnerId::Tie: {
      TieTrainConfig cfg = lc;
      cfg.seed = learner_seed;
      const auto c = train_tie(cls, s, cfg);
      rec.err = tie_error(c, dist);
      record_ensemble_margins(c.ensemble_1());
      rec.s3neq = c.diagnostics().s3neq;
      rec.fallback = c.diagnostics().fallback;
      rec.erm_calls = c.diagnostics().erm_calls();
      rec.ensembles = {detail::audit(c.ensemble_1()), detail::audit(c.ensemble_2())};
      break;
    }
    case LearnerId::Selected: {
      TieTrainConfig cfg = lc;
      cfg.seed = learner_seed;
      const PlainErm competitor(lc.erm_tie);
      const auto c = train_select(cls, s, competitor, cfg);
      rec.err = exact_error(c, dist);
      record_ensemble_margins(c.tie().ensemble_1());
      rec.s3neq = c.tie().diagnostics().s3neq;
      rec.fallback = c.tie().diagnostics().fallback;
      rec.erm_calls = c.tie().diagnostics().erm_calls() + 1;
      rec.ensembles = {detail::audit(c.tie().ensemble_1()), detail::audit(c.tie().ensemble_2())};
      rec.selection = SelectionAudit{exact_error(c.tie(), dist), exact_error(c.competitor(), dist),
                                     c.holdout_tie(),           c.holdout_competitor(),
                                     c.holdout_chosen(),        c.chosen_side()};
      break;
    }
  }
  rec.excess = rec.err - rec.tau;
  if (plan.record_timing)
    rec.ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
  return rec;
}

/// R trials for every feasible (learner, m) cell, in roster x grid x trial
/// order. The output does not depend on `jobs` or on scheduling.
inline PlanResult run_plan(const ExperimentPlan& plan, unsigned jobs = 0) {
  plan.validate();
  struct Task {
    LearnerId learner;
    std::uint64_t m;
    std::size_t trial;
  };
  PlanResult result;
  std::vector<Task> tasks;
  for (auto learner : plan.learners)
    for (auto m : plan.m_grid) {
      if (auto reason = infeasible_reason(learner, m)) {
        result.skipped.push_back({learner, m, *reason});
        continue;
      }
      for (std::size_t r = 0; r < plan.trials; ++r) tasks.push_back({learner, m, r});
    }

  result.records.resize(tasks.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(tasks.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        result.records[i] = run_trial(plan, tasks[i].learner, tasks[i].m, tasks[i].trial);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

// ---------------------------------------------------------------------------
// Trial CSV

inline constexpr const char* kTrialCsvHeader =
    "trial,learner,m,tau_num,tau_den,err_num,err_den,excess_num,excess_den,margin10_num,margin10_den,"
    "margin11_num,margin11_den,s3neq,fallback,erm_calls,ms";

namespace detail {

inline void write_fraction(std::ostream& os, const std::optional<Rational>& r) {
  if (r)
    os << numerator(*r) << ',' << denominator(*r);
  else
    os << ',';
}

inline Rational parse_fraction(const std::string& num, const std::string& den) {
  return Rational(BigInt(num), BigInt(den));
}

}  // namespace detail

inline void write_records_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << kTrialCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.trial << ',' << to_string(r.learner) << ',' << r.m << ',';
    detail::write_fraction(os, r.tau);
    os << ',';
    detail::write_fraction(os, r.err);
    os << ',';
    detail::write_fraction(os, r.excess);
    os << ',';
    detail::write_fraction(os, r.margin10);
    os << ',';
    detail::write_fraction(os, r.margin11);
    os << ',';
    if (r.s3neq) os << *r.s3neq;
    os << ',';
    if (r.fallback) os << (*r.fallback ? 1 : 0);
    os << ',' << r.erm_calls << ',' << r.ms << '\n';
  }
}

/// Reads the CSV columns back (audit fields stay empty).
inline std::vector<TrialRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTrialCsvHeader) throw StructuralError("unexpected trial CSV header");
  std::vector<TrialRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 17) throw StructuralError("trial CSV line " + std::to_string(lineno) + ": expected 17 fields");
    TrialRecord r;
    try {
      r.trial = std::stoull(f[0]);
      auto id = parse_learner(f[1]);
      if (!id) throw StructuralError("unknown learner '" + f[1] + "'");
      r.learner = *id;
      r.m = std::stoull(f[2]);
      r.tau = detail::parse_fraction(f[3], f[4]);
      r.err = detail::parse_fraction(f[5], f[6]);
      r.excess = detail::parse_fraction(f[7], f[8]);
      if (!f[9].empty()) r.margin10 = detail::parse_fraction(f[9], f[10]);
      if (!f[11].empty()) r.margin11 = detail::parse_fraction(f[11], f[12]);
      if (!f[13].empty()) r.s3neq = std::stoull(f[13]);
      if (!f[14].empty()) r.fallback = f[14] == "1";
      r.erm_calls = std::stoull(f[15]);
      r.ms = std::stoull(f[16]);
    } catch (const StructuralError&) {
      throw;
    } catch (const std::exception& e) {
      throw StructuralError("trial CSV line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

struct SummaryRow {
  LearnerId learner = LearnerId::PlainErm;
  std::uint64_t m = 0;
  std::size_t count = 0;
  Rational mean_err, median_err, q05_err, q95_err;
  Rational mean_excess, median_excess, q05_excess, q95_excess;
  std::optional<std::string> skip_reason;
};

/// Nearest-rank quantile q = num/den of sorted values: element ceil(q n).
inline const Rational& nearest_rank(const std::vector<Rational>& sorted, std::uint64_t num, std::uint64_t den) {
  if (sorted.empty()) throw PreconditionError("quantile of an empty cell");
  std::uint64_t rank = (num * sorted.size() + den - 1) / den;
  rank = std::clamp<std::uint64_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

/// Per-(learner, m) summary. Cells with no records become skip rows.
inline std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records,
                                         const std::vector<SkippedCell>& skipped = {}) {
  std::map<std::pair<LearnerId, std::uint64_t>, std::pair<std::vector<Rational>, std::vector<Rational>>> cells;
  for (const auto& r : records) {
    auto& [errs, excesses] = cells[{r.learner, r.m}];
    errs.push_back(r.err);
    excesses.push_back(r.excess);
  }
  std::vector<SummaryRow> rows;
  for (auto& [key, values] : cells) {
    auto& [errs, excesses] = values;
    std::sort(errs.begin(), errs.end());
    std::sort(excesses.begin(), excesses.end());
    SummaryRow row;
    row.learner = key.first;
    row.m = key.second;
    row.count = errs.size();
    Rational sum_err = 0, sum_excess = 0;
    for (const auto& e : errs) sum_err += e;
    for (const auto& e : excesses) sum_excess += e;
    row.mean_err = sum_err / static_cast<unsigned long long>(errs.size());
    row.mean_excess = sum_excess / static_cast<unsigned long long>(excesses.size());
    row.median_err = nearest_rank(errs, 1, 2);
    row.q05_err = nearest_rank(errs, 5, 100);
    row.q95_err = nearest_rank(errs, 95, 100);
    row.median_excess = nearest_rank(excesses, 1, 2);
    row.q05_excess = nearest_rank(excesses, 5, 100);
    row.q95_excess = nearest_rank(excesses, 95, 100);
    rows.push_back(std::move(row));
  }
  for (const auto& s : skipped) {
    SummaryRow row;
    row.learner = s.learner;
    row.m = s.m;
    row.skip_reason = s.reason;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return std::pair(a.learner, a.m) < std::pair(b.learner, b.m);
  });
  return rows;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "learner,m,count,mean_err,median_err,q05_err,q95_err,mean_excess,median_excess,q05_excess,q95_excess,"
        "skip_reason\n";
  for (const auto& r : rows) {
    os << to_string(r.learner) << ',' << r.m << ',' << r.count << ',';
    if (r.skip_reason) {
      os << ",,,,,,,," << *r.skip_reason << '\n';
      continue;
    }
    for (const Rational* v : {&r.mean_err, &r.median_err, &r.q05_err, &r.q95_err, &r.mean_excess,
                              &r.median_excess, &r.q05_excess, &r.q95_excess})
      os << to_string(*v) << ',';
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Rate fitting (double precision; approximate by nature)

struct RateFit {
  bool ok = false;
  double slope = 0;
  double intercept = 0;
  std::size_t points = 0;
  std::string reason;
};

/// Least-squares slope of log(excess) against log(m). Nonpositive excess
/// values are dropped; fewer than three remaining points is a no-fit.
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& m_excess) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [m, e] : m_excess)
    if (m > 0 && e > 0) pts.emplace_back(std::log(m), std::log(e));
  RateFit fit;
  fit.points = pts.size();
  if (pts.size() < 3) {
    fit.reason = "fewer than 3 points with positive excess";
    return fit;
  }
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0, sxx = 0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (sxx == 0) {
    fit.reason = "all points share one m";
    return fit;
  }
  fit.ok = true;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

inline RateFit fit_rate(const std::vector<SummaryRow>& rows, LearnerId learner) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.learner == learner && !r.skip_reason) pts.emplace_back(static_cast<double>(r.m), to_double(r.mean_excess));
  return fit_rate(pts);
}

}  // namespace agnostic
