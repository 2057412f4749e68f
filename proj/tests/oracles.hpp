#pragma once

// Slow, obviously-correct reference computations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "agnostic/data.hpp"
#include "agnostic/distributions.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/random.hpp"
#include "agnostic/split_scheme.hpp"

namespace oracle {

using namespace agnostic;

// 3^e without the library helper.
inline std::uint64_t p3(int e) {
  std::uint64_t v = 1;
  while (e-- > 0) v *= 3;
  return v;
}

inline std::vector<Example> slice(const std::vector<Example>& v, std::size_t from, std::size_t to) {
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(to)};
}

inline std::vector<Example> join(std::vector<Example> a, const std::vector<Example>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Direct transcription of the recursion with materialized copies:
// cells of size 3^(k-h); child = (cell[0 : 3^(k-a)], cell[3^(k-a) : ] ++ T).
inline void split_copies(const std::vector<Example>& s, const std::vector<Example>& t, int k, int branches,
                         int a, int h, int floor, std::vector<std::vector<Example>>& out) {
  if (k < floor) {
    out.push_back(join(s, t));
    return;
  }
  const std::size_t cell = p3(k - h), act = p3(k - a);
  for (int i = 0; i < branches; ++i) {
    const auto c = slice(s, i * cell, (i + 1) * cell);
    split_copies(slice(c, 0, act), join(slice(c, act, cell), t), k - a, branches, a, h, floor, out);
  }
}

inline std::vector<std::vector<Example>> split_copies(const LabeledSequence& s, const LabeledSequence& t,
                                                      const SplitParams& p) {
  int k = 0;
  while (p3(k) < s.size()) ++k;
  std::vector<std::vector<Example>> out;
  split_copies(s.examples(), t.examples(), k, p.branch_count, p.active_exp_drop, p.history_exp_drop, p.min_exp,
               out);
  return out;
}

// Minimum empirical error over the class by enumerating every labeling the
// class can produce on the sample's distinct points.
inline std::uint64_t min_errors(const HypothesisClass& cls, const LabeledSequence& s) {
  auto count = [&](auto&& h) {
    std::uint64_t e = 0;
    for (const auto& ex : s) e += h(ex.x) != ex.y;
    return e;
  };
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  if (cls.kind() == HypothesisKind::Finite) {
    const auto& t = cls.table();
    for (std::size_t j = 0; j < t.hypothesis_count(); ++j)
      best = std::min(best, count([&](const Point& x) { return t.label(j, x.index()); }));
    return best;
  }
  std::vector<double> xs;
  for (const auto& ex : s) xs.push_back(ex.x.value());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const double inf = std::numeric_limits<double>::infinity();
  if (cls.kind() == HypothesisKind::Threshold) {
    std::vector<double> cuts{-inf, inf};
    cuts.insert(cuts.end(), xs.begin(), xs.end());  // x > x_i puts x_i on the negative side
    for (double c : cuts) {
      best = std::min(best, count([&](const Point& x) { return x.value() > c ? Label::Positive : Label::Negative; }));
      if (cls.both_orientations())
        best = std::min(best, count([&](const Point& x) { return x.value() > c ? Label::Negative : Label::Positive; }));
    }
    return best;
  }
  best = count([](const Point&) { return Label::Negative; });
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i; j < xs.size(); ++j)
      best = std::min(best, count([&](const Point& x) {
                        return xs[i] <= x.value() && x.value() <= xs[j] ? Label::Positive : Label::Negative;
                      }));
  return best;
}

// Probability of misclassification by stepping through the support.
template <class C>
Rational error(const C& c, const FiniteDistribution& d) {
  Rational e = 0;
  for (const auto& a : d.support())
    if (c.predict(a.x) != a.y) e += a.mass;
  return e;
}

// Independent recomputation of the theory voter count, written as
// ln(2m) - ln(delta) - ln(d + ln(1/delta)).
inline std::uint64_t voter_count(std::uint64_t m, int d, long double delta) {
  const long double lnv = std::log(2.0L * static_cast<long double>(m)) - std::log(delta) -
                          std::log(static_cast<long double>(d) - std::log(delta));
  const long double t = std::ceil(236196.0L * lnv);
  return t < 1 ? 1 : static_cast<std::uint64_t>(t);
}

// Random finite class over `domain` points with `rows` distinct-or-not rows.
inline std::shared_ptr<const FiniteTable> random_table(Stream& rng, std::size_t rows, std::size_t domain) {
  std::vector<Label> labels;
  for (std::size_t i = 0; i < rows * domain; ++i) labels.push_back(rng.below(2) ? Label::Positive : Label::Negative);
  return std::make_shared<const FiniteTable>(rows, domain, std::move(labels));
}

}  // namespace oracle
