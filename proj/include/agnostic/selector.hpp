#pragma once

#include <functional>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>

#include "json.hpp"

#include "agnostic/data.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/random.hpp"
#include "agnostic/split_scheme.hpp"
#include "agnostic/tie_learner.hpp"

namespace agnostic {

/// Type-erased total classifier.
class AnyClassifier {
 public:
  AnyClassifier() = default;
  template <Predictor C>
    requires(!std::same_as<std::remove_cvref_t<C>, AnyClassifier>)
  explicit AnyClassifier(C classifier)
      : impl_(std::make_shared<const C>(std::move(classifier))),
        predict_([](const void* p, const Point& x) { return static_cast<const C*>(p)->predict(x); }) {}

  Label predict(const Point& x) const { return predict_(impl_.get(), x); }
  explicit operator bool() const { return static_cast<bool>(impl_); }

 private:
  std::shared_ptr<const void> impl_;
  Label (*predict_)(const void*, const Point&) = nullptr;
};

/// Learner trained on the second shard. It only ever sees that shard.
class CompetitorLearner {
 public:
  virtual ~CompetitorLearner() = default;
  virtual std::string name() const = 0;
  virtual AnyClassifier train(const HypothesisClass& cls, const LabeledSequence& shard,
                              const SeedSpec& seed) const = 0;
};

/// ERM on the whole shard. Stands in for the optimal agnostic learner the
/// selection step is designed around.
class PlainErm final : public CompetitorLearner {
 public:
  explicit PlainErm(ErmTie tie = ErmTie::Best) : tie_(tie) {}
  std::string name() const override { return "plain_erm"; }
  AnyClassifier train(const HypothesisClass& cls, const LabeledSequence& shard, const SeedSpec&) const override {
    return AnyClassifier(erm(cls, shard, tie_).hypothesis);
  }

 private:
  ErmTie tie_;
};

enum class ChosenSide : std::uint8_t { Tie, Competitor };

inline const char* to_string(ChosenSide s) { return s == ChosenSide::Tie ? "tie" : "competitor"; }

class SelectedClassifier {
 public:
  SelectedClassifier(TieClassifier tie, AnyClassifier competitor, std::string competitor_name,
                     Rational holdout_tie, Rational holdout_competitor)
      : tie_(std::move(tie)),
        competitor_(std::move(competitor)),
        competitor_name_(std::move(competitor_name)),
        holdout_tie_(std::move(holdout_tie)),
        holdout_competitor_(std::move(holdout_competitor)),
        side_(holdout_competitor_ < holdout_tie_ ? ChosenSide::Competitor : ChosenSide::Tie) {}

  Label predict(const Point& x) const {
    return side_ == ChosenSide::Tie ? tie_.predict(x) : competitor_.predict(x);
  }

  ChosenSide chosen_side() const { return side_; }
  const TieClassifier& tie() const { return tie_; }
  const AnyClassifier& competitor() const { return competitor_; }
  const Rational& holdout_tie() const { return holdout_tie_; }
  const Rational& holdout_competitor() const { return holdout_competitor_; }
  const Rational& holdout_chosen() const {
    return side_ == ChosenSide::Tie ? holdout_tie_ : holdout_competitor_;
  }

  nlohmann::json to_json() const {
    auto frac = [](const Rational& r) {
      return nlohmann::json{{"num", numerator(r).str()}, {"den", denominator(r).str()}};
    };
    return {{"tie", tie_.diagnostics().to_json()},
            {"competitor", competitor_name_},
            {"holdout_tie", frac(holdout_tie_)},
            {"holdout_competitor", frac(holdout_competitor_)},
            {"chosen_side", to_string(side_)}};
  }

 private:
  TieClassifier tie_;
  AnyClassifier competitor_;
  std::string competitor_name_;
  Rational holdout_tie_;
  Rational holdout_competitor_;
  ChosenSide side_;
};

template <Predictor C>
Rational holdout_error(const C& c, const LabeledSequence& holdout) {
  if (holdout.empty()) throw PreconditionError("holdout error on an empty sequence");
  std::uint64_t wrong = 0;
  for (const auto& e : holdout) wrong += c.predict(e.x) != e.y;
  return Rational(BigInt(wrong), BigInt(holdout.size()));
}

/// Splits S (|S| = 3^k, k >= 2) into contiguous thirds: tie learner on the
/// first, competitor on the second, and keeps whichever has the smaller
/// empirical error on the third. Equal errors keep the tie learner.
inline SelectedClassifier train_select(const HypothesisClass& cls, const LabeledSequence& s,
                                       const CompetitorLearner& competitor, const TieTrainConfig& cfg) {
  const auto k = exact_log3(s.size());
  if (!k || *k < 2) throw StructuralError("selection needs |S| = 3^k with k >= 2, got " + std::to_string(s.size()));
  const std::size_t third = s.size() / 3;
  const LabeledSequence s1 = subsequence(s, 1, third);
  const LabeledSequence s2 = subsequence(s, third + 1, 2 * third);
  const LabeledSequence s3 = subsequence(s, 2 * third + 1, s.size());

  TieTrainConfig tie_cfg = cfg;
  tie_cfg.seed = derive_rng(cfg.seed, 1);
  TieClassifier tie = train_tie(cls, s1, tie_cfg);
  AnyClassifier other = competitor.train(cls, s2, derive_rng(cfg.seed, 2));

  Rational h1 = holdout_error(tie, s3);
  Rational h2 = holdout_error(other, s3);
  return SelectedClassifier(std::move(tie), std::move(other), competitor.name(), std::move(h1), std::move(h2));
}

}  // namespace agnostic
