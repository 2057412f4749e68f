#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "agnostic/data.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/errors.hpp"
#include "agnostic/random.hpp"
#include "agnostic/rational.hpp"

namespace agnostic {

/// Anything with a total `predict(Point) -> Label`.
template <class C>
concept Predictor = requires(const C& c, const Point& x) {
  { c.predict(x) } -> std::convertible_to<Label>;
};

struct SupportAtom {
  Point x;
  Label y;
  Rational mass;
};

namespace detail {

// Exact minimum of L_D(h) over the class, by structured scan of the support.
inline Rational min_class_error(const HypothesisClass& cls, const std::vector<SupportAtom>& support) {
  if (cls.kind() == HypothesisKind::Finite) {
    const auto& table = cls.table();
    std::vector<Rational> pos(table.domain_size()), neg(table.domain_size());
    for (const auto& a : support) (a.y == Label::Positive ? pos : neg)[a.x.index()] += a.mass;
    Rational best = 2;
    for (std::size_t h = 0; h < table.hypothesis_count(); ++h) {
      Rational err = 0;
      for (std::size_t x = 0; x < table.domain_size(); ++x)
        err += table.label(h, x) == Label::Positive ? neg[x] : pos[x];
      best = std::min(best, err);
    }
    return best;
  }

  // Distinct support values with their positive/negative masses.
  struct Bin {
    double v;
    Rational pos, neg;
  };
  std::vector<Bin> bins;
  for (const auto& a : support) {  // support is sorted by point
    if (bins.empty() || bins.back().v != a.x.value()) bins.push_back({a.x.value(), 0, 0});
    (a.y == Label::Positive ? bins.back().pos : bins.back().neg) += a.mass;
  }
  const std::size_t r = bins.size();
  Rational total_pos = 0, total_neg = 0;
  for (const auto& b : bins) {
    total_pos += b.pos;
    total_neg += b.neg;
  }
  Rational best = 2;
  if (cls.kind() == HypothesisKind::Threshold) {
    Rational pos_left = 0, neg_left = 0;
    for (std::size_t j = 0; j <= r; ++j) {
      if (j > 0) {
        pos_left += bins[j - 1].pos;
        neg_left += bins[j - 1].neg;
      }
      best = std::min(best, Rational(pos_left + (total_neg - neg_left)));
      if (cls.both_orientations()) best = std::min(best, Rational(neg_left + (total_pos - pos_left)));
    }
    return best;
  }
  // Intervals: all O(r^2) cut pairs, plus the empty interval.
  best = total_pos;
  for (std::size_t i = 0; i < r; ++i) {
    Rational inside = 0;
    for (std::size_t j = i; j < r; ++j) {
      inside += bins[j].neg - bins[j].pos;
      best = std::min(best, Rational(total_pos + inside));
    }
  }
  return best;
}

}  // namespace detail

/// Finite-support distribution over (point, label) with exact rational masses
/// and a class-optimal witness h_star, tau = L_D(h_star).
class FiniteDistribution {
 public:
  FiniteDistribution(std::vector<SupportAtom> support, HypothesisClass cls, Hypothesis h_star)
      : class_(std::move(cls)), h_star_(std::move(h_star)) {
    if (support.empty()) throw StructuralError("distribution needs a nonempty support");
    std::sort(support.begin(), support.end(), [](const SupportAtom& a, const SupportAtom& b) {
      return Example{a.x, a.y} < Example{b.x, b.y};
    });
    Rational total = 0;
    for (auto& a : support) {
      class_.check_point(a.x);
      if (a.mass <= 0) throw StructuralError("support masses must be positive");
      total += a.mass;
      if (!support_.empty() && support_.back().x == a.x && support_.back().y == a.y)
        support_.back().mass += a.mass;
      else
        support_.push_back(std::move(a));
    }
    if (total != 1) throw StructuralError("support masses sum to " + to_string(total) + ", not 1");
    tau_ = error_of(h_star_);
    if (detail::min_class_error(class_, support_) < tau_)
      throw StructuralError("h_star is not optimal in its class");
    build_sampler();
  }

  const std::vector<SupportAtom>& support() const { return support_; }
  const HypothesisClass& class_ref() const { return class_; }
  const Hypothesis& h_star() const { return h_star_; }
  const Rational& tau() const { return tau_; }

  template <Predictor C>
  Rational error_of(const C& c) const {
    Rational err = 0;
    for (const auto& a : support_)
      if (c.predict(a.x) != a.y) err += a.mass;
    return err;
  }

  /// m i.i.d. draws by inverse CDF over the sorted support, exact in the
  /// rational masses.
  LabeledSequence sample(std::size_t m, const SeedSpec& seed) const {
    Stream rng(seed);
    LabeledSequence out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint64_t u = rng.below(common_den_);
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto& a = support_[static_cast<std::size_t>(it - cumulative_.begin())];
      out.push_back({a.x, a.y});
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& a : support_) {
      nlohmann::json row;
      if (a.x.kind() == DomainKind::Scalar)
        row["point"] = a.x.value();
      else
        row["point"] = a.x.index();
      row["label"] = to_sign(a.y);
      row["mass_num"] = numerator(a.mass).str();
      row["mass_den"] = denominator(a.mass).str();
      rows.push_back(std::move(row));
    }
    return {{"support", rows},
            {"class", class_.describe()},
            {"h_star", h_star_.params_csv()},
            {"tau_num", numerator(tau_).str()},
            {"tau_den", denominator(tau_).str()}};
  }

 private:
  void build_sampler() {
    BigInt lcm = 1;
    for (const auto& a : support_) lcm = boost::multiprecision::lcm(lcm, denominator(a.mass));
    if (lcm > BigInt(std::numeric_limits<std::uint64_t>::max()))
      throw StructuralError("mass denominators have a common denominator above 2^64");
    common_den_ = lcm.convert_to<std::uint64_t>();
    BigInt acc = 0;
    for (const auto& a : support_) {
      acc += numerator(a.mass) * (lcm / denominator(a.mass));
      cumulative_.push_back(acc.convert_to<std::uint64_t>());
    }
  }

  std::vector<SupportAtom> support_;
  HypothesisClass class_;
  Hypothesis h_star_;
  Rational tau_;
  std::uint64_t common_den_ = 1;
  std::vector<std::uint64_t> cumulative_;  // numerators over common_den_
};

/// L_D of any total classifier, exactly.
template <Predictor C>
Rational exact_error(const C& c, const FiniteDistribution& d) {
  return d.error_of(c);
}

inline LabeledSequence sample(const FiniteDistribution& d, std::size_t m, const SeedSpec& seed) {
  return d.sample(m, seed);
}

/// Random classification noise around h_star: each marginal point carries
/// h_star's label with mass (1 - eta) and the flipped label with mass eta.
inline FiniteDistribution make_rcn(const HypothesisClass& cls, const Hypothesis& h_star,
                                   const std::vector<std::pair<Point, Rational>>& marginal,
                                   const Ratio& eta) {
  if (eta.num < 0 || !(eta < Ratio(1, 2)))
    throw ConfigError("RCN noise rate must satisfy 0 <= eta < 1/2", "eta");
  const Rational e = eta.to_rational();
  std::vector<SupportAtom> support;
  for (std::size_t i = 0; i < marginal.size(); ++i) {
    const auto& [x, mass] = marginal[i];
    for (std::size_t j = 0; j < i; ++j)
      if (marginal[j].first == x) throw StructuralError("marginal lists a point twice");
    const Label y = h_star.predict(x);
    support.push_back({x, y, mass * (1 - e)});
    if (e > 0) support.push_back({x, flip(y), mass * e});
  }
  return FiniteDistribution(std::move(support), cls, h_star);
}

namespace detail {

// Hypothesis j gives -1 to light point i (i >= 1) iff bit i-1 of j is set;
// the heavy point 0 is always +1. Row 0 is the all-(+1) labeling.
inline std::shared_ptr<const FiniteTable> light_labelings_table(std::size_t n) {
  const std::size_t h_count = std::size_t{1} << (n - 1);
  std::vector<Label> labels;
  labels.reserve(h_count * n);
  for (std::size_t j = 0; j < h_count; ++j)
    for (std::size_t x = 0; x < n; ++x)
      labels.push_back(x > 0 && ((j >> (x - 1)) & 1) ? Label::Negative : Label::Positive);
  return std::make_shared<const FiniteTable>(h_count, n, std::move(labels));
}

}  // namespace detail

/// Realizable instance where ERM tie-breaking matters: one heavy point of
/// mass 1 - p and n - 1 light points of mass p/(n-1) each, all labeled +1.
/// The class contains every labeling of the light points.
inline std::pair<FiniteDistribution, HypothesisClass> make_hard_realizable(std::size_t n, const Ratio& p) {
  if (n < 2 || n > 17) throw ConfigError("hard_realizable needs 2 <= n <= 17", "n");
  if (!(Ratio(0, 1) < p) || !(p < Ratio(1, 1))) throw ConfigError("hard_realizable needs 0 < p < 1", "p");
  auto table = detail::light_labelings_table(n);
  auto cls = HypothesisClass::finite(table, static_cast<int>(n - 1));
  const Rational pm = p.to_rational();
  std::vector<SupportAtom> support;
  support.push_back({Point::index(0), Label::Positive, 1 - pm});
  for (std::uint32_t x = 1; x < n; ++x)
    support.push_back({Point::index(x), Label::Positive, pm / static_cast<unsigned>(n - 1)});
  FiniteDistribution d(std::move(support), cls, Hypothesis::finite(table, 0));
  return {std::move(d), std::move(cls)};
}

/// Two-point domain with all four labelings as the class, marginal (1 - p, p)
/// and RCN noise eta around the all-(+1) labeling.
inline std::pair<FiniteDistribution, HypothesisClass> make_two_point(const Ratio& p, const Ratio& eta) {
  if (!(Ratio(0, 1) < p) || !(p < Ratio(1, 1))) throw ConfigError("two_point needs 0 < p < 1", "p");
  std::vector<Label> labels;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t x = 0; x < 2; ++x) labels.push_back(((j >> x) & 1) ? Label::Negative : Label::Positive);
  auto table = std::make_shared<const FiniteTable>(4, 2, std::move(labels));
  auto cls = HypothesisClass::finite(table);
  const Rational pm = p.to_rational();
  auto d = make_rcn(cls, Hypothesis::finite(table, 0), {{Point::index(0), 1 - pm}, {Point::index(1), pm}}, eta);
  return {std::move(d), std::move(cls)};
}

}  // namespace agnostic
