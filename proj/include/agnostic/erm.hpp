#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "agnostic/data.hpp"
#include "agnostic/errors.hpp"
#include "agnostic/rational.hpp"

namespace agnostic {

enum class HypothesisKind : std::uint8_t { Finite, Threshold, Interval };

inline const char* to_string(HypothesisKind k) {
  switch (k) {
    case HypothesisKind::Finite: return "finite";
    case HypothesisKind::Threshold: return "threshold";
    case HypothesisKind::Interval: return "interval";
  }
  return "?";
}

// Tie-breaking among empirical risk minimizers. Best takes the first optimum
// in each class's documented total order, Worst the last one.
enum class ErmTie : std::uint8_t { Best, Worst };

/// Label matrix of a finite class: entry (h, x) is h's label on domain point x.
class FiniteTable {
 public:
  static constexpr std::size_t kMaxDomain = 4096;
  static constexpr std::size_t kMaxHypotheses = 65536;

  FiniteTable(std::size_t hypotheses, std::size_t domain_size, std::vector<Label> labels)
      : rows_(hypotheses), cols_(domain_size), labels_(std::move(labels)) {
    if (rows_ == 0 || cols_ == 0) throw StructuralError("finite class needs >= 1 hypothesis and point");
    if (rows_ > kMaxHypotheses) throw StructuralError("finite class exceeds 65536 hypotheses");
    if (cols_ > kMaxDomain) throw StructuralError("finite domain exceeds 4096 points");
    if (labels_.size() != rows_ * cols_) throw StructuralError("label matrix size mismatch");
  }

  static FiniteTable from_rows(const std::vector<std::vector<Label>>& rows) {
    if (rows.empty()) throw StructuralError("finite class needs >= 1 hypothesis");
    std::vector<Label> flat;
    for (const auto& r : rows) {
      if (r.size() != rows.front().size()) throw StructuralError("ragged label matrix");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return FiniteTable(rows.size(), rows.front().size(), std::move(flat));
  }

  // One hypothesis per line, comma-separated -1/1 entries, no header.
  static FiniteTable from_csv(std::istream& is) {
    std::vector<std::vector<Label>> rows;
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<Label> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) row.push_back(parse_label(cell));
      rows.push_back(std::move(row));
    }
    return from_rows(rows);
  }

  std::size_t hypothesis_count() const { return rows_; }
  std::size_t domain_size() const { return cols_; }
  Label label(std::size_t h, std::size_t x) const { return labels_[h * cols_ + x]; }
  const Label* row(std::size_t h) const { return labels_.data() + h * cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Label> labels_;
};

namespace detail {

// Largest d such that some d-subset of the domain is shattered.
inline int exhaustive_vc_dim(const FiniteTable& table) {
  const std::size_t n = table.domain_size();
  int best = 0;
  std::vector<std::size_t> subset;
  for (std::size_t d = 1; d <= n && d <= 16; ++d) {
    if ((std::size_t{1} << d) > table.hypothesis_count()) break;
    bool found = false;
    subset.assign(d, 0);
    for (std::size_t i = 0; i < d; ++i) subset[i] = i;
    std::vector<char> seen(std::size_t{1} << d);
    while (!found) {
      std::fill(seen.begin(), seen.end(), 0);
      std::size_t distinct = 0;
      for (std::size_t h = 0; h < table.hypothesis_count() && distinct < seen.size(); ++h) {
        std::size_t pattern = 0;
        for (std::size_t i = 0; i < d; ++i)
          if (table.label(h, subset[i]) == Label::Positive) pattern |= std::size_t{1} << i;
        if (!seen[pattern]) {
          seen[pattern] = 1;
          ++distinct;
        }
      }
      if (distinct == seen.size()) {
        found = true;
        break;
      }
      // next combination
      std::size_t i = d;
      while (i > 0 && subset[i - 1] == n - d + i - 1) --i;
      if (i == 0) break;
      ++subset[i - 1];
      for (std::size_t j = i; j < d; ++j) subset[j] = subset[j - 1] + 1;
    }
    if (!found) break;
    best = static_cast<int>(d);
  }
  return best;
}

}  // namespace detail

class Hypothesis;

/// A hypothesis class with an exact ERM oracle: an explicit finite class,
/// 1-D thresholds (one or both orientations) or 1-D closed intervals.
class HypothesisClass {
 public:
  // Domains up to this size get their VC dimension by exhaustive shattering.
  static constexpr std::size_t kExhaustiveVcDomain = 12;

  static HypothesisClass finite(std::shared_ptr<const FiniteTable> table,
                                std::optional<int> vc_dim = std::nullopt) {
    if (!table) throw PreconditionError("finite class needs a label table");
    HypothesisClass c(HypothesisKind::Finite);
    if (table->domain_size() <= kExhaustiveVcDomain) {
      const int computed = detail::exhaustive_vc_dim(*table);
      if (vc_dim && *vc_dim != computed)
        throw ConfigError("supplied VC dimension " + std::to_string(*vc_dim) +
                          " differs from shattering check (" + std::to_string(computed) + ")");
      c.vc_dim_ = computed;
    } else {
      if (!vc_dim) throw ConfigError("VC dimension must be supplied for domains above 12 points");
      if (*vc_dim < 0 || *vc_dim > 63 ||
          (std::uint64_t{1} << *vc_dim) > table->hypothesis_count())
        throw ConfigError("supplied VC dimension exceeds log2(number of hypotheses)");
      c.vc_dim_ = *vc_dim;
    }
    c.table_ = std::move(table);
    return c;
  }

  static HypothesisClass threshold(bool both_orientations = false) {
    HypothesisClass c(HypothesisKind::Threshold);
    c.both_orientations_ = both_orientations;
    c.vc_dim_ = both_orientations ? 2 : 1;
    return c;
  }

  static HypothesisClass interval() {
    HypothesisClass c(HypothesisKind::Interval);
    c.vc_dim_ = 2;
    return c;
  }

  HypothesisKind kind() const { return kind_; }
  int vc_dim() const { return vc_dim_; }
  bool both_orientations() const { return both_orientations_; }
  DomainKind domain_kind() const {
    return kind_ == HypothesisKind::Finite ? DomainKind::Finite : DomainKind::Scalar;
  }
  const FiniteTable& table() const {
    if (!table_) throw StructuralError("class has no label table");
    return *table_;
  }
  const std::shared_ptr<const FiniteTable>& table_ptr() const { return table_; }

  void check_point(const Point& x) const {
    if (x.kind() != domain_kind())
      throw StructuralError(std::string("point of kind ") + to_string(x.kind()) + " given to " +
                            to_string(kind_) + " class");
    if (kind_ == HypothesisKind::Finite && x.index() >= table_->domain_size())
      throw StructuralError("domain index " + std::to_string(x.index()) + " outside [0, " +
                            std::to_string(table_->domain_size()) + ")");
  }

  std::string describe() const {
    switch (kind_) {
      case HypothesisKind::Finite:
        return "finite(" + std::to_string(table_->hypothesis_count()) + "x" +
               std::to_string(table_->domain_size()) + ")";
      case HypothesisKind::Threshold: return both_orientations_ ? "threshold(both)" : "threshold";
      case HypothesisKind::Interval: return "interval";
    }
    return "?";
  }

 private:
  explicit HypothesisClass(HypothesisKind kind) : kind_(kind) {}

  HypothesisKind kind_;
  std::shared_ptr<const FiniteTable> table_;
  bool both_orientations_ = false;
  int vc_dim_ = 0;
};

/// A member of one of the classes above.
///   Finite:    row `index` of the label table.
///   Threshold: orientation on points x > theta, flip(orientation) otherwise.
///   Interval:  +1 on [lo, hi], -1 outside.
class Hypothesis {
 public:
  static Hypothesis finite(std::shared_ptr<const FiniteTable> table, std::uint32_t index) {
    if (!table || index >= table->hypothesis_count())
      throw PreconditionError("finite hypothesis index out of range");
    Hypothesis h(HypothesisKind::Finite);
    h.table_ = std::move(table);
    h.index_ = index;
    return h;
  }
  static Hypothesis threshold(double theta, Label orientation = Label::Positive) {
    if (std::isnan(theta)) throw PreconditionError("threshold must not be NaN");
    Hypothesis h(HypothesisKind::Threshold);
    h.lo_ = theta;
    h.orientation_ = orientation;
    return h;
  }
  static Hypothesis interval(double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi)
      throw PreconditionError("interval needs lo <= hi");
    Hypothesis h(HypothesisKind::Interval);
    h.lo_ = lo;
    h.hi_ = hi;
    return h;
  }

  HypothesisKind kind() const { return kind_; }
  std::uint32_t index() const { return index_; }
  double theta() const { return lo_; }
  Label orientation() const { return orientation_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  Label predict(const Point& x) const {
    switch (kind_) {
      case HypothesisKind::Finite: {
        if (x.kind() != DomainKind::Finite) throw StructuralError("finite hypothesis needs an index point");
        const auto i = x.index();
        if (i >= table_->domain_size()) throw StructuralError("domain index out of range");
        return table_->label(index_, i);
      }
      case HypothesisKind::Threshold: {
        if (x.kind() != DomainKind::Scalar) throw StructuralError("threshold needs a scalar point");
        return x.value() > lo_ ? orientation_ : flip(orientation_);
      }
      case HypothesisKind::Interval: {
        if (x.kind() != DomainKind::Scalar) throw StructuralError("interval needs a scalar point");
        const double v = x.value();
        return (lo_ <= v && v <= hi_) ? Label::Positive : Label::Negative;
      }
    }
    throw StructuralError("unknown hypothesis kind");
  }

  // "kind,p1,p2" for CSV export.
  std::string params_csv() const {
    switch (kind_) {
      case HypothesisKind::Finite: return "finite," + std::to_string(index_) + ",";
      case HypothesisKind::Threshold:
        return "threshold," + format_bound(lo_) + "," + to_string(orientation_);
      case HypothesisKind::Interval: return "interval," + format_bound(lo_) + "," + format_bound(hi_);
    }
    return "?,,";
  }

  friend bool operator==(const Hypothesis& a, const Hypothesis& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
      case HypothesisKind::Finite: return a.table_ == b.table_ && a.index_ == b.index_;
      case HypothesisKind::Threshold: return a.lo_ == b.lo_ && a.orientation_ == b.orientation_;
      case HypothesisKind::Interval: return a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }
    return false;
  }

  static std::string format_bound(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_scalar(v);
  }

 private:
  explicit Hypothesis(HypothesisKind kind) : kind_(kind) {}

  HypothesisKind kind_;
  std::shared_ptr<const FiniteTable> table_;
  std::uint32_t index_ = 0;
  double lo_ = 0;
  double hi_ = 0;
  Label orientation_ = Label::Positive;
};

inline Label evaluate(const Hypothesis& h, const Point& x) { return h.predict(x); }

struct ErmResult {
  Hypothesis hypothesis;
  std::uint64_t empirical_errors = 0;
  std::uint64_t ties_broken = 0;  // optimal candidates other than the one returned
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScalarBin {
  double value;
  std::uint64_t pos;
  std::uint64_t neg;
};

// Cut position between consecutive distinct values a < b. When a and b are
// adjacent doubles the midpoint rounds onto one of them; fall back to a so
// that `x > theta` still separates them.
inline double midpoint(double a, double b) {
  const double m = a + (b - a) / 2;
  return (m > a && m < b) ? m : a;
}

inline double cut_at(const std::vector<ScalarBin>& bins, std::size_t j) {
  if (j == 0) return -kInf;
  if (j == bins.size()) return kInf;
  return midpoint(bins[j - 1].value, bins[j].value);
}

inline std::vector<ScalarBin> bin_scalars(std::vector<std::pair<double, Label>>& pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ScalarBin> bins;
  for (const auto& [v, y] : pts) {
    if (bins.empty() || bins.back().value != v) bins.push_back({v, 0, 0});
    (y == Label::Positive ? bins.back().pos : bins.back().neg) += 1;
  }
  return bins;
}

inline ErmResult erm_threshold(const std::vector<ScalarBin>& bins, bool both, ErmTie tie) {
  std::uint64_t total_pos = 0, total_neg = 0;
  for (const auto& b : bins) {
    total_pos += b.pos;
    total_neg += b.neg;
  }
  // Candidates in order (theta ascending, orientation +1 before -1).
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t optimal = 0;
  std::size_t best_j = 0;
  Label best_o = Label::Positive;
  std::uint64_t pos_left = 0, neg_left = 0;
  for (std::size_t j = 0; j <= bins.size(); ++j) {
    if (j > 0) {
      pos_left += bins[j - 1].pos;
      neg_left += bins[j - 1].neg;
    }
    const std::uint64_t err_pos = pos_left + (total_neg - neg_left);  // +1 right of the cut
    const std::uint64_t err_neg = neg_left + (total_pos - pos_left);  // -1 right of the cut
    const std::pair<std::uint64_t, Label> cands[2] = {{err_pos, Label::Positive}, {err_neg, Label::Negative}};
    for (int c = 0; c < (both ? 2 : 1); ++c) {
      const auto [err, o] = cands[c];
      if (err < best) {
        best = err;
        optimal = 1;
        best_j = j;
        best_o = o;
      } else if (err == best) {
        ++optimal;
        if (tie == ErmTie::Worst) {
          best_j = j;
          best_o = o;
        }
      }
    }
  }
  return {Hypothesis::threshold(cut_at(bins, best_j), best_o), best, optimal - 1};
}

// errors(i, j) = total_pos + P[j] - P[i] for the interval [cut_i, cut_j],
// with P the prefix sums of (neg - pos) over the distinct values.
inline ErmResult erm_interval(const std::vector<ScalarBin>& bins, ErmTie tie) {
  const std::size_t r = bins.size();
  std::vector<std::int64_t> prefix(r + 1, 0);
  std::uint64_t total_pos = 0;
  for (std::size_t k = 0; k < r; ++k) {
    prefix[k + 1] = prefix[k] + static_cast<std::int64_t>(bins[k].neg) - static_cast<std::int64_t>(bins[k].pos);
    total_pos += bins[k].pos;
  }
  std::vector<std::int64_t> suffix_min(r + 1);
  suffix_min[r] = prefix[r];
  for (std::size_t k = r; k-- > 0;) suffix_min[k] = std::min(prefix[k], suffix_min[k + 1]);
  std::int64_t gain = 0;  // min over i <= j of P[j] - P[i]; i == j gives 0
  for (std::size_t i = 0; i <= r; ++i) gain = std::min(gain, suffix_min[i] - prefix[i]);

  std::size_t bi = 0, bj = 0;
  if (tie == ErmTie::Best) {
    for (bi = 0; suffix_min[bi] - prefix[bi] != gain; ++bi) {}
    for (bj = bi; prefix[bj] != prefix[bi] + gain; ++bj) {}
  } else {
    for (bi = r; suffix_min[bi] - prefix[bi] != gain; --bi) {}
    for (bj = r; prefix[bj] != prefix[bi] + gain; --bj) {}
  }

  std::uint64_t optimal = 0;
  std::unordered_map<std::int64_t, std::uint64_t> seen;
  for (std::size_t j = 0; j <= r; ++j) {
    ++seen[prefix[j]];
    if (auto it = seen.find(prefix[j] - gain); it != seen.end()) optimal += it->second;
  }
  const auto errors = static_cast<std::uint64_t>(static_cast<std::int64_t>(total_pos) + gain);
  return {Hypothesis::interval(cut_at(bins, bi), cut_at(bins, bj)), errors, optimal - 1};
}

}  // namespace detail

/// Exact ERM over the examples produced by `for_each(visitor)`.
template <class ForEach>
ErmResult erm_visit(const HypothesisClass& cls, ForEach&& for_each, ErmTie tie = ErmTie::Best) {
  if (cls.kind() == HypothesisKind::Finite) {
    const auto& table = cls.table();
    std::vector<std::uint64_t> pos(table.domain_size(), 0), neg(table.domain_size(), 0);
    std::size_t n = 0;
    for_each([&](const Example& e) {
      cls.check_point(e.x);
      (e.y == Label::Positive ? pos : neg)[e.x.index()] += 1;
      ++n;
    });
    if (n == 0) throw PreconditionError("ERM on an empty sequence");
    std::vector<std::uint32_t> touched;
    for (std::uint32_t x = 0; x < table.domain_size(); ++x)
      if (pos[x] + neg[x] > 0) touched.push_back(x);
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max(), optimal = 0;
    std::size_t best_h = 0;
    for (std::size_t h = 0; h < table.hypothesis_count(); ++h) {
      const Label* row = table.row(h);
      std::uint64_t err = 0;
      for (auto x : touched) err += row[x] == Label::Positive ? neg[x] : pos[x];
      if (err < best) {
        best = err;
        optimal = 1;
        best_h = h;
      } else if (err == best) {
        ++optimal;
        if (tie == ErmTie::Worst) best_h = h;
      }
    }
    return {Hypothesis::finite(cls.table_ptr(), static_cast<std::uint32_t>(best_h)), best, optimal - 1};
  }

  std::vector<std::pair<double, Label>> pts;
  for_each([&](const Example& e) {
    cls.check_point(e.x);
    pts.emplace_back(e.x.value(), e.y);
  });
  if (pts.empty()) throw PreconditionError("ERM on an empty sequence");
  const auto bins = detail::bin_scalars(pts);
  if (cls.kind() == HypothesisKind::Threshold) return detail::erm_threshold(bins, cls.both_orientations(), tie);
  return detail::erm_interval(bins, tie);
}

/// A(S): an empirical risk minimizer with deterministic tie-breaking.
///   Finite:    lowest hypothesis index.
///   Threshold: smallest theta (cuts at -inf, midpoints of consecutive
///              distinct values, +inf), orientation +1 first.
///   Interval:  lexicographically smallest (lo, hi) over the same cuts.
/// ErmTie::Worst reverses each order.
inline ErmResult erm(const HypothesisClass& cls, const LabeledSequence& s, ErmTie tie = ErmTie::Best) {
  return erm_visit(cls, [&](auto&& visit) {
    for (const auto& e : s) visit(e);
  }, tie);
}

inline std::uint64_t error_count(const Hypothesis& h, const LabeledSequence& s) {
  std::uint64_t n = 0;
  for (const auto& e : s) n += h.predict(e.x) != e.y;
  return n;
}

/// L_S(h) as an exact rational.
inline Rational empirical_error(const Hypothesis& h, const LabeledSequence& s) {
  if (s.empty()) throw PreconditionError("empirical error on an empty sequence");
  return Rational(BigInt(error_count(h, s)), BigInt(s.size()));
}

}  // namespace agnostic
