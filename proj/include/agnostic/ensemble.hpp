#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "agnostic/data.hpp"
#include "agnostic/distributions.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/errors.hpp"
#include "agnostic/random.hpp"
#include "agnostic/rational.hpp"
#include "agnostic/split_scheme.hpp"

namespace agnostic {

/// Vote-fraction thresholds of the tie-breaking classifier.
struct MarginThresholds {
  Ratio filter{11, 243};   // avg_neq level that sends an example to the tie-break set
  Ratio agree{232, 243};   // weight fraction both ensembles need to bypass h_tie
  Ratio analysis{10, 243}; // full-ensemble margin level used in the error analysis

  void validate() const {
    const Ratio half(1, 2);
    if (!(Ratio(0, 1) < filter && filter < half)) throw ConfigError("need 0 < filter < 1/2", "thresholds.filter");
    if (!(half < agree && agree < Ratio(1, 1))) throw ConfigError("need 1/2 < agree < 1", "thresholds.agree");
    if (!(Ratio(agree.den - agree.num, agree.den) == filter))
      throw ConfigError("need agree = 1 - filter", "thresholds.agree");
    if (!(analysis < filter)) throw ConfigError("need analysis < filter", "thresholds.analysis");
  }
};

enum class VoterMode : std::uint8_t { Theory, Fixed };

/// t = ceil(4 * 243^2 * ln(2m / (delta (d + ln(1/delta))))), at least 1.
inline std::uint64_t theory_voter_count(std::uint64_t m, int d, double delta) {
  if (!(delta > 0 && delta < 1)) throw ConfigError("delta must lie in (0, 1)", "voter.delta");
  if (m == 0) throw PreconditionError("theory voter count needs m >= 1");
  const long double dl = delta;
  const long double arg = 2.0L * static_cast<long double>(m) / (dl * (d + std::log(1.0L / dl)));
  const long double t = std::ceil(4.0L * 243.0L * 243.0L * std::log(arg));
  return t < 1 ? 1 : static_cast<std::uint64_t>(t);
}

struct VoterConfig {
  VoterMode mode = VoterMode::Theory;
  std::uint64_t fixed_t = 0;
  Ratio delta{1, 10};

  // m is the size of the sequence the ensemble is trained on.
  std::uint64_t resolve(std::uint64_t m, int d) const {
    if (mode == VoterMode::Fixed) {
      if (fixed_t < 1) throw ConfigError("fixed voter count must be >= 1", "voter.fixed_t");
      return fixed_t;
    }
    return theory_voter_count(m, d, delta.to_double());
  }
};

struct EnsembleMember {
  Hypothesis hypothesis;
  std::uint64_t weight = 1;
  std::size_t leaf = 0;  // leaf index in the split family it was trained on
};

/// Hypotheses with nonnegative integer weights. Both the full leaf ensemble
/// (unit weights, one member per leaf) and the subsampled one (multiplicity
/// weights over distinct sampled leaves) use this type.
class WeightedEnsemble {
 public:
  WeightedEnsemble() = default;
  explicit WeightedEnsemble(std::vector<EnsembleMember> members, std::size_t leaf_count = 0,
                            std::uint64_t erm_calls = 0, std::optional<SeedSpec> seed = std::nullopt)
      : members_(std::move(members)), leaf_count_(leaf_count), erm_calls_(erm_calls), seed_(std::move(seed)) {
    for (const auto& m : members_) total_weight_ += m.weight;
    if (total_weight_ == 0) throw PreconditionError("ensemble needs positive total weight");
  }

  const std::vector<EnsembleMember>& members() const { return members_; }
  std::uint64_t total_weight() const { return total_weight_; }
  std::size_t leaf_count() const { return leaf_count_; }
  std::uint64_t erm_calls() const { return erm_calls_; }
  const std::optional<SeedSpec>& seed() const { return seed_; }

  /// Total weight of members voting `y` at x.
  std::uint64_t weight_for(const Point& x, Label y) const {
    std::uint64_t w = 0;
    for (const auto& m : members_)
      if (m.hypothesis.predict(x) == y) w += m.weight;
    return w;
  }
  std::uint64_t wrong_weight(const Point& x, Label y) const { return total_weight_ - weight_for(x, y); }

  /// Weighted fraction of members that mislabel (x, y).
  Rational avg_neq(const Point& x, Label y) const {
    return Rational(BigInt(wrong_weight(x, y)), BigInt(total_weight_));
  }
  Rational avg_eq(const Point& x, Label y) const {
    return Rational(BigInt(weight_for(x, y)), BigInt(total_weight_));
  }

  /// The label holding at least `frac` of the weight, if any.
  std::optional<Label> margin_vote(const Point& x, const Ratio& frac) const {
    if (!(Ratio(1, 2) < frac)) throw ConfigError("margin vote fraction must exceed 1/2");
    const std::uint64_t pos = weight_for(x, Label::Positive);
    if (fraction_at_least(pos, total_weight_, frac)) return Label::Positive;
    if (fraction_at_least(total_weight_ - pos, total_weight_, frac)) return Label::Negative;
    return std::nullopt;
  }

  /// Weighted majority; exact ties go to +1.
  Label majority_vote(const Point& x) const {
    const std::uint64_t pos = weight_for(x, Label::Positive);
    return 2 * pos >= total_weight_ ? Label::Positive : Label::Negative;
  }

  Label predict(const Point& x) const { return majority_vote(x); }

  /// CSV rows: member,leaf,weight,kind,p1,p2
  void write_csv(std::ostream& os) const {
    os << "member,leaf,weight,kind,p1,p2\n";
    for (std::size_t i = 0; i < members_.size(); ++i)
      os << i << ',' << members_[i].leaf << ',' << members_[i].weight << ','
         << members_[i].hypothesis.params_csv() << '\n';
  }

 private:
  std::vector<EnsembleMember> members_;
  std::uint64_t total_weight_ = 0;
  std::size_t leaf_count_ = 0;
  std::uint64_t erm_calls_ = 0;
  std::optional<SeedSpec> seed_;
};

inline Hypothesis erm_on_leaf(const HypothesisClass& cls, const SplitFamily& family, std::size_t leaf,
                              ErmTie tie) {
  return erm_visit(cls, [&](auto&& visit) { family.for_each_example(leaf, visit); }, tie).hypothesis;
}

/// A(S;T): ERM on every leaf of split(S, T), unit weights, leaf order.
inline WeightedEnsemble train_full_ensemble(const HypothesisClass& cls, const LabeledSequence& s,
                                            const LabeledSequence& t, const SplitParams& params,
                                            ErmTie tie = ErmTie::Best) {
  const SplitFamily family = split(s, t, params);
  std::vector<EnsembleMember> members;
  members.reserve(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) members.push_back({erm_on_leaf(cls, family, i, tie), 1, i});
  return WeightedEnsemble(std::move(members), family.size(), family.size());
}

/// Â_t(S;T): t leaf indices drawn i.i.d. uniformly; members are the distinct
/// sampled leaves weighted by multiplicity. ERM runs once per distinct leaf.
inline WeightedEnsemble subsample_ensemble(const HypothesisClass& cls, const LabeledSequence& s,
                                           const LabeledSequence& t, const SplitParams& params,
                                           const VoterConfig& cfg, const SeedSpec& seed,
                                           ErmTie tie = ErmTie::Best) {
  const SplitFamily family = split(s, t, params);
  const std::uint64_t voters = cfg.resolve(s.size(), cls.vc_dim());
  if (voters < 1) throw ConfigError("voter count must be >= 1", "voter");
  std::vector<std::uint64_t> counts(family.size(), 0);
  Stream rng(seed);
  const std::uint64_t n = family.size();
  for (std::uint64_t i = 0; i < voters; ++i) ++counts[n == 1 ? 0 : rng.below(n)];

  std::vector<EnsembleMember> members;
  std::uint64_t calls = 0;
  for (std::size_t leaf = 0; leaf < family.size(); ++leaf) {
    if (counts[leaf] == 0) continue;
    members.push_back({erm_on_leaf(cls, family, leaf, tie), counts[leaf], leaf});
    ++calls;
  }
  return WeightedEnsemble(std::move(members), family.size(), calls, seed);
}

/// L_D^alpha(E) = P[avg_neq(E)(x, y) >= alpha], exactly.
inline Rational margin_loss(const WeightedEnsemble& e, const FiniteDistribution& d, const Ratio& alpha) {
  Rational loss = 0;
  for (const auto& a : d.support())
    if (fraction_at_least(e.wrong_weight(a.x, a.y), e.total_weight(), alpha)) loss += a.mass;
  return loss;
}

}  // namespace agnostic
