#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "agnostic/errors.hpp"

namespace agnostic {

enum class DomainKind : std::uint8_t { Scalar, Finite };

inline const char* to_string(DomainKind kind) {
  return kind == DomainKind::Scalar ? "scalar" : "finite";
}

/// A domain point: a finite real scalar (1-D classes) or an index into a
/// finite domain. Equality is exact (bit equality for scalars).
class Point {
 public:
  static Point scalar(double value) {
    if (!std::isfinite(value)) throw PreconditionError("scalar point must be finite");
    // -0.0 and 0.0 are the same point.
    if (value == 0.0) value = 0.0;
    return Point(DomainKind::Scalar, std::bit_cast<std::uint64_t>(value));
  }
  static Point index(std::uint32_t i) { return Point(DomainKind::Finite, i); }

  DomainKind kind() const { return kind_; }
  double value() const {
    if (kind_ != DomainKind::Scalar) throw StructuralError("finite-domain point has no scalar value");
    return std::bit_cast<double>(bits_);
  }
  std::uint32_t index() const {
    if (kind_ != DomainKind::Finite) throw StructuralError("scalar point has no domain index");
    return static_cast<std::uint32_t>(bits_);
  }

  friend bool operator==(const Point& a, const Point& b) {
    return a.kind_ == b.kind_ && a.bits_ == b.bits_;
  }
  friend bool operator<(const Point& a, const Point& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
    if (a.kind_ == DomainKind::Scalar) return a.value() < b.value();
    return a.bits_ < b.bits_;
  }

 private:
  Point(DomainKind kind, std::uint64_t bits) : bits_(bits), kind_(kind) {}

  std::uint64_t bits_;
  DomainKind kind_;
};

enum class Label : std::int8_t { Negative = -1, Positive = 1 };

constexpr Label flip(Label y) { return y == Label::Positive ? Label::Negative : Label::Positive; }
constexpr int to_sign(Label y) { return y == Label::Positive ? 1 : -1; }
inline const char* to_string(Label y) { return y == Label::Positive ? "1" : "-1"; }

inline Label parse_label(std::string_view text) {
  if (text == "1" || text == "+1") return Label::Positive;
  if (text == "-1") return Label::Negative;
  throw StructuralError("label must be -1 or 1, got '" + std::string(text) + "'");
}

struct Example {
  Point x;
  Label y;

  friend bool operator==(const Example&, const Example&) = default;
  friend bool operator<(const Example& a, const Example& b) {
    if (a.x == b.x) return a.y < b.y;
    return a.x < b.x;
  }
};

/// Ordered multiset of labeled examples, homogeneous in domain kind.
class LabeledSequence {
 public:
  LabeledSequence() = default;
  LabeledSequence(std::initializer_list<Example> examples) {
    reserve(examples.size());
    for (const auto& e : examples) push_back(e);
  }
  explicit LabeledSequence(std::vector<Example> examples) : examples_(std::move(examples)) {
    for (const auto& e : examples_) check_kind(e.x.kind());
  }

  void push_back(const Example& e) {
    check_kind(e.x.kind());
    examples_.push_back(e);
  }
  void reserve(std::size_t n) { examples_.reserve(n); }

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  auto begin() const { return examples_.begin(); }
  auto end() const { return examples_.end(); }
  const std::vector<Example>& examples() const { return examples_; }

  // Domain kind shared by all elements; nullopt for an empty sequence.
  std::optional<DomainKind> domain_kind() const { return kind_; }

  friend bool operator==(const LabeledSequence& a, const LabeledSequence& b) {
    return a.examples_ == b.examples_;
  }

 private:
  void check_kind(DomainKind k) {
    if (kind_ && *kind_ != k) throw StructuralError("mixed domain kinds in one sequence");
    kind_ = k;
  }

  std::vector<Example> examples_;
  std::optional<DomainKind> kind_;
};

inline void check_same_domain(const LabeledSequence& a, const LabeledSequence& b) {
  if (a.domain_kind() && b.domain_kind() && *a.domain_kind() != *b.domain_kind())
    throw StructuralError("sequences have different domain kinds");
}

/// S[i:j], 1-indexed and inclusive.
inline LabeledSequence subsequence(const LabeledSequence& s, std::size_t i, std::size_t j) {
  if (i < 1 || i > j || j > s.size()) {
    throw PreconditionError("subsequence [" + std::to_string(i) + ":" + std::to_string(j) +
                            "] out of range for length " + std::to_string(s.size()));
  }
  return LabeledSequence(std::vector<Example>(s.begin() + static_cast<std::ptrdiff_t>(i - 1),
                                              s.begin() + static_cast<std::ptrdiff_t>(j)));
}

inline LabeledSequence concat(const LabeledSequence& s, const LabeledSequence& t) {
  check_same_domain(s, t);
  std::vector<Example> out;
  out.reserve(s.size() + t.size());
  out.insert(out.end(), s.begin(), s.end());
  out.insert(out.end(), t.begin(), t.end());
  return LabeledSequence(std::move(out));
}

/// S ⊓ A: the elements of S satisfying the predicate, in original order.
template <class Predicate>
LabeledSequence intersect_set(const LabeledSequence& s, Predicate&& in_set) {
  LabeledSequence out;
  for (const auto& e : s)
    if (std::invoke(in_set, e)) out.push_back(e);
  return out;
}

/// S ⊑ S': every element occurs in S' at least as often as in S.
inline bool is_contained_in(const LabeledSequence& s, const LabeledSequence& super) {
  std::vector<Example> a(s.begin(), s.end());
  std::vector<Example> b(super.begin(), super.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// ---------------------------------------------------------------------------
// CSV: header `point,label`; labels -1/1; finite points as integer indices.

inline std::string format_scalar(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline void write_csv(std::ostream& os, const LabeledSequence& s) {
  os << "point,label\n";
  for (const auto& e : s) {
    if (e.x.kind() == DomainKind::Scalar)
      os << format_scalar(e.x.value());
    else
      os << e.x.index();
    os << ',' << to_string(e.y) << '\n';
  }
}

inline Point parse_point(std::string_view text, DomainKind kind) {
  if (kind == DomainKind::Finite) {
    std::uint32_t idx = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), idx);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw StructuralError("bad domain index '" + std::string(text) + "'");
    return Point::index(idx);
  }
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw StructuralError("bad scalar point '" + std::string(text) + "'");
  return Point::scalar(v);
}

inline LabeledSequence read_csv(std::istream& is, DomainKind kind) {
  std::string line;
  if (!std::getline(is, line) || (line != "point,label" && line != "point,label\r"))
    throw StructuralError("expected CSV header 'point,label'");
  LabeledSequence out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw StructuralError("line " + std::to_string(lineno) + ": expected 'point,label'");
    std::string_view view(line);
    out.push_back({parse_point(view.substr(0, comma), kind), parse_label(view.substr(comma + 1))});
  }
  return out;
}

}  // namespace agnostic
