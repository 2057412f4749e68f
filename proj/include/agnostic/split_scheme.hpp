#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agnostic/data.hpp"
#include "agnostic/errors.hpp"
#include "agnostic/rational.hpp"

namespace agnostic {

constexpr std::uint64_t pow3(int k) {
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) r *= 3;
  return r;
}

/// k with m == 3^k, or nullopt.
constexpr std::optional<int> exact_log3(std::uint64_t m) {
  if (m == 0) return std::nullopt;
  int k = 0;
  while (m % 3 == 0) {
    m /= 3;
    ++k;
  }
  if (m != 1) return std::nullopt;
  return k;
}

/// Parameters of the recursive ternary splitting family. A node with
/// |S| = 3^k, k >= min_exp, is cut into `branch_count` cells of size
/// 3^(k - history_exp_drop); the first 3^(k - active_exp_drop) examples of a
/// cell stay active and the rest of the cell joins the history.
struct SplitParams {
  int branch_count = 27;
  int active_exp_drop = 6;
  int history_exp_drop = 3;
  int min_exp = 6;

  static constexpr SplitParams alg1() { return {3, 4, 1, 6}; }
  static constexpr SplitParams alg2() { return {27, 6, 3, 6}; }

  void validate() const {
    if (history_exp_drop < 1 || active_exp_drop <= history_exp_drop)
      throw ConfigError("split params need active_exp_drop > history_exp_drop >= 1");
    if (static_cast<std::uint64_t>(branch_count) != pow3(history_exp_drop))
      throw ConfigError("split params need branch_count = 3^history_exp_drop");
    if (min_exp < active_exp_drop)
      throw ConfigError("split params need min_exp >= active_exp_drop");
  }

  std::string name() const {
    if (*this == alg1()) return "ALG1";
    if (*this == alg2()) return "ALG2";
    return "custom(" + std::to_string(branch_count) + "," + std::to_string(active_exp_drop) + "," +
           std::to_string(history_exp_drop) + "," + std::to_string(min_exp) + ")";
  }

  friend constexpr bool operator==(const SplitParams&, const SplitParams&) = default;
};

/// Number of recursion levels for |S| = 3^k.
constexpr int split_depth(int k, const SplitParams& p) {
  return k < p.min_exp ? 0 : (k - p.min_exp) / p.active_exp_drop + 1;
}

/// Closed-form leaf count for |S| = m = 3^k.
inline std::uint64_t leaf_count(std::uint64_t m, const SplitParams& params) {
  const auto k = exact_log3(m);
  if (!k) throw StructuralError("|S| = " + std::to_string(m) + " is not a power of 3");
  std::uint64_t count = 1;
  for (int l = split_depth(*k, params); l > 0; --l) count *= static_cast<std::uint64_t>(params.branch_count);
  return count;
}

/// s_cap = |S| / |S_{1,cap}| = 3^a / (3^(a-h) - 1), independent of k.
inline Ratio s_cap(const SplitParams& params) {
  params.validate();
  const auto a = params.active_exp_drop;
  const auto h = params.history_exp_drop;
  return Ratio(static_cast<std::int64_t>(pow3(a)), static_cast<std::int64_t>(pow3(a - h) - 1));
}

struct LevelSizes {
  int k;                      // exponent of the active set at this level
  std::uint64_t cell_size;    // |S_i|
  std::uint64_t active_size;  // |S_{i,cup}|
  std::uint64_t history_size; // |S_{i,cap}|
};

struct SplitDiagnostics {
  int depth = 0;
  std::uint64_t leaf_size = 0;
  std::vector<LevelSizes> levels;
};

inline SplitDiagnostics split_diagnostics(std::uint64_t s_size, std::uint64_t t_size,
                                          const SplitParams& params) {
  const auto k0 = exact_log3(s_size);
  if (!k0) throw StructuralError("|S| = " + std::to_string(s_size) + " is not a power of 3");
  SplitDiagnostics d;
  int k = *k0;
  std::uint64_t history = t_size;
  while (k >= params.min_exp) {
    LevelSizes lv{k, pow3(k - params.history_exp_drop), pow3(k - params.active_exp_drop), 0};
    lv.history_size = lv.cell_size - lv.active_size;
    history += lv.history_size;
    d.levels.push_back(lv);
    k -= params.active_exp_drop;
  }
  d.depth = static_cast<int>(d.levels.size());
  d.leaf_size = pow3(k) + history;
  return d;
}

/// Half-open range [begin, end) into the split's storage S ⊔ T.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// One leaf training sequence, stored as contiguous ranges into the storage.
/// Its content is the concatenation of the ranges in order.
struct Leaf {
  std::vector<IndexRange> ranges;
  std::vector<int> path;  // branch index taken at each level, 0-based

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& r : ranges) n += r.size();
    return n;
  }
};

namespace detail {

inline void append_range(std::vector<IndexRange>& out, IndexRange r) {
  if (r.size() == 0) return;
  if (!out.empty() && out.back().end == r.begin)
    out.back().end = r.end;
  else
    out.push_back(r);
}

inline void split_recurse(IndexRange active, const std::vector<IndexRange>& history, int k,
                          const SplitParams& p, std::vector<int>& path, std::vector<Leaf>& out) {
  if (k < p.min_exp) {
    Leaf leaf;
    leaf.path = path;
    append_range(leaf.ranges, active);
    for (const auto& r : history) append_range(leaf.ranges, r);
    out.push_back(std::move(leaf));
    return;
  }
  const std::size_t cell = pow3(k - p.history_exp_drop);
  const std::size_t act = pow3(k - p.active_exp_drop);
  for (int i = 0; i < p.branch_count; ++i) {
    const std::size_t begin = active.begin + static_cast<std::size_t>(i) * cell;
    std::vector<IndexRange> child_history;
    child_history.reserve(history.size() + 1);
    child_history.push_back({begin + act, begin + cell});
    child_history.insert(child_history.end(), history.begin(), history.end());
    path.push_back(i);
    split_recurse({begin, begin + act}, child_history, k - p.active_exp_drop, p, path, out);
    path.pop_back();
  }
}

}  // namespace detail

/// Leaf layout for |S| = s_size, |T| = t_size, with S occupying storage
/// indices [0, s_size) and T occupying [s_size, s_size + t_size).
inline std::vector<Leaf> split_layout(std::size_t s_size, std::size_t t_size,
                                      const SplitParams& params) {
  params.validate();
  const auto k = exact_log3(s_size);
  if (!k) throw StructuralError("|S| = " + std::to_string(s_size) + " is not a power of 3");
  std::vector<Leaf> leaves;
  leaves.reserve(leaf_count(s_size, params));
  std::vector<IndexRange> history;
  if (t_size > 0) history.push_back({s_size, s_size + t_size});
  std::vector<int> path;
  detail::split_recurse({0, s_size}, history, *k, params, path, leaves);
  return leaves;
}

/// The ordered family of leaf training sequences produced by split().
class SplitFamily {
 public:
  SplitFamily(std::shared_ptr<const LabeledSequence> storage, std::vector<Leaf> leaves,
              SplitParams params, std::size_t s_size, std::size_t t_size)
      : storage_(std::move(storage)),
        leaves_(std::move(leaves)),
        params_(params),
        s_size_(s_size),
        t_size_(t_size) {}

  std::size_t size() const { return leaves_.size(); }
  const Leaf& leaf(std::size_t i) const { return leaves_.at(i); }
  const std::vector<Leaf>& leaves() const { return leaves_; }
  const SplitParams& params() const { return params_; }
  std::pair<std::size_t, std::size_t> input_sizes() const { return {s_size_, t_size_}; }
  const LabeledSequence& storage() const { return *storage_; }

  template <class Visitor>
  void for_each_example(std::size_t i, Visitor&& visit) const {
    const auto& s = *storage_;
    for (const auto& r : leaves_.at(i).ranges)
      for (std::size_t j = r.begin; j < r.end; ++j) visit(s[j]);
  }

  LabeledSequence materialize(std::size_t i) const {
    LabeledSequence out;
    out.reserve(leaves_.at(i).size());
    for_each_example(i, [&](const Example& e) { out.push_back(e); });
    return out;
  }

  SplitDiagnostics diagnostics() const { return split_diagnostics(s_size_, t_size_, params_); }

 private:
  std::shared_ptr<const LabeledSequence> storage_;
  std::vector<Leaf> leaves_;
  SplitParams params_;
  std::size_t s_size_;
  std::size_t t_size_;
};

/// Recursive split of (S; T). Leaves are listed depth-first in ascending
/// branch order; a node below the recursion floor yields the single leaf S ⊔ T.
inline SplitFamily split(const LabeledSequence& s, const LabeledSequence& t, const SplitParams& params) {
  check_same_domain(s, t);
  auto leaves = split_layout(s.size(), t.size(), params);
  auto storage = std::make_shared<const LabeledSequence>(concat(s, t));
  return SplitFamily(std::move(storage), std::move(leaves), params, s.size(), t.size());
}

}  // namespace agnostic
