#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "agnostic/data.hpp"
#include "agnostic/distributions.hpp"
#include "agnostic/ensemble.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/random.hpp"
#include "agnostic/split_scheme.hpp"

namespace agnostic {

// Which examples of the third inner part train h_tie.
//   Label:        avg_neq(E_i)(x, y) >= filter for either ensemble (default).
//   Disagreement: the two margin votes differ or either has no consensus.
enum class FilterMode : std::uint8_t { Label, Disagreement };

struct TieTrainConfig {
  SplitParams split = SplitParams::alg2();
  VoterConfig voter;
  MarginThresholds thresholds;
  ErmTie erm_tie = ErmTie::Best;
  FilterMode filter = FilterMode::Label;
  SeedSpec seed;
};

struct TieDiagnostics {
  std::size_t s11 = 0, s12 = 0, s13 = 0;
  std::size_t s3neq = 0;
  bool fallback = false;
  std::uint64_t t1 = 0, t2 = 0;
  std::size_t leaves1 = 0, leaves2 = 0;
  std::uint64_t erm_calls1 = 0, erm_calls2 = 0, erm_calls_tie = 0;

  std::uint64_t erm_calls() const { return erm_calls1 + erm_calls2 + erm_calls_tie; }

  nlohmann::json to_json() const {
    return {{"s11", s11},           {"s12", s12},           {"s13", s13},
            {"s3neq", s3neq},       {"fallback", fallback}, {"t1", t1},
            {"t2", t2},             {"leaves1", leaves1},   {"leaves2", leaves2},
            {"erm_calls1", erm_calls1}, {"erm_calls2", erm_calls2}, {"erm_calls_tie", erm_calls_tie},
            {"erm_calls", erm_calls()}};
  }
};

/// Two voting ensembles plus a tie-break hypothesis. Predicts y when both
/// ensembles put at least `agree` of their weight on y, otherwise h_tie(x).
class TieClassifier {
 public:
  TieClassifier(WeightedEnsemble ensemble_1, WeightedEnsemble ensemble_2, Hypothesis h_tie,
                MarginThresholds thresholds, TieDiagnostics diagnostics = {})
      : e1_(std::move(ensemble_1)),
        e2_(std::move(ensemble_2)),
        h_tie_(std::move(h_tie)),
        thresholds_(thresholds),
        diag_(diagnostics) {}

  std::optional<Label> consensus(const Point& x) const {
    const auto v1 = e1_.margin_vote(x, thresholds_.agree);
    if (!v1) return std::nullopt;
    const auto v2 = e2_.margin_vote(x, thresholds_.agree);
    if (v2 != v1) return std::nullopt;
    return v1;
  }

  Label predict(const Point& x) const {
    if (const auto y = consensus(x)) return *y;
    return h_tie_.predict(x);
  }

  const WeightedEnsemble& ensemble_1() const { return e1_; }
  const WeightedEnsemble& ensemble_2() const { return e2_; }
  const Hypothesis& h_tie() const { return h_tie_; }
  const MarginThresholds& thresholds() const { return thresholds_; }
  const TieDiagnostics& diagnostics() const { return diag_; }

 private:
  WeightedEnsemble e1_;
  WeightedEnsemble e2_;
  Hypothesis h_tie_;
  MarginThresholds thresholds_;
  TieDiagnostics diag_;
};

/// Whether (x, y) belongs to the tie-break training set.
inline bool in_tie_set(const WeightedEnsemble& e1, const WeightedEnsemble& e2, const Example& ex,
                       const MarginThresholds& th, FilterMode mode) {
  if (mode == FilterMode::Label) {
    return fraction_at_least(e1.wrong_weight(ex.x, ex.y), e1.total_weight(), th.filter) ||
           fraction_at_least(e2.wrong_weight(ex.x, ex.y), e2.total_weight(), th.filter);
  }
  const auto v1 = e1.margin_vote(ex.x, th.agree);
  const auto v2 = e2.margin_vote(ex.x, th.agree);
  return !v1 || !v2 || *v1 != *v2;
}

/// Trains the tie classifier on S1, |S1| = 3 * 3^k. The inner thirds are
/// taken contiguously: ensembles on the first two, h_tie on the filtered third.
inline TieClassifier train_tie(const HypothesisClass& cls, const LabeledSequence& s1, const TieTrainConfig& cfg) {
  cfg.thresholds.validate();
  if (s1.size() % 3 != 0 || !exact_log3(s1.size() / 3))
    throw StructuralError("tie learner needs |S1| = 3 * 3^k, got " + std::to_string(s1.size()));
  const std::size_t third = s1.size() / 3;
  const LabeledSequence part1 = subsequence(s1, 1, third);
  const LabeledSequence part2 = subsequence(s1, third + 1, 2 * third);
  const LabeledSequence part3 = subsequence(s1, 2 * third + 1, s1.size());
  const LabeledSequence none;

  TieDiagnostics diag;
  diag.s11 = part1.size();
  diag.s12 = part2.size();
  diag.s13 = part3.size();

  auto e1 = subsample_ensemble(cls, part1, none, cfg.split, cfg.voter, derive_rng(cfg.seed, 1), cfg.erm_tie);
  auto e2 = subsample_ensemble(cls, part2, none, cfg.split, cfg.voter, derive_rng(cfg.seed, 2), cfg.erm_tie);
  diag.t1 = e1.total_weight();
  diag.t2 = e2.total_weight();
  diag.leaves1 = e1.leaf_count();
  diag.leaves2 = e2.leaf_count();
  diag.erm_calls1 = e1.erm_calls();
  diag.erm_calls2 = e2.erm_calls();

  const LabeledSequence tie_set =
      intersect_set(part3, [&](const Example& ex) { return in_tie_set(e1, e2, ex, cfg.thresholds, cfg.filter); });
  diag.s3neq = tie_set.size();
  diag.fallback = tie_set.empty();
  // An empty tie set leaves h_tie undefined; fall back to ERM on the whole third.
  Hypothesis h_tie = erm(cls, tie_set.empty() ? part3 : tie_set, cfg.erm_tie).hypothesis;
  diag.erm_calls_tie = 1;

  return TieClassifier(std::move(e1), std::move(e2), std::move(h_tie), cfg.thresholds, diag);
}

inline Rational tie_error(const TieClassifier& c, const FiniteDistribution& d) { return exact_error(c, d); }

}  // namespace agnostic
