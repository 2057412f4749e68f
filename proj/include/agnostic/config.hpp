#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "agnostic/distributions.hpp"
#include "agnostic/ensemble.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/errors.hpp"
#include "agnostic/eval.hpp"
#include "agnostic/split_scheme.hpp"
#include "agnostic/tie_learner.hpp"

namespace agnostic {

struct OutputConfig {
  std::string csv;
  std::string svg;
  bool timing = false;
};

/// Parsed run configuration. Every field has the library default unless the
/// document sets it.
struct RunConfig {
  std::shared_ptr<const FiniteDistribution> distribution;
  std::string distribution_kind;
  std::vector<LearnerId> learners;
  std::vector<std::uint64_t> m_grid;
  std::size_t trials = 1;
  TieTrainConfig learner;
  std::uint64_t master_seed = 0;
  OutputConfig output;
  unsigned jobs = 0;

  ExperimentPlan plan() const {
    ExperimentPlan p;
    p.distribution = distribution;
    p.learners = learners;
    p.m_grid = m_grid;
    p.trials = trials;
    p.learner_config = learner;
    p.master_seed = master_seed;
    p.record_timing = output.timing;
    return p;
  }
};

namespace detail {

using nlohmann::json;

// Walks a JSON object, tracks the field path for messages, and rejects keys
// nobody asked about.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, path_); }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items())
      if (!ok.count(key)) throw ConfigError("unknown key", child_path(key));
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  Node at(const char* key) const {
    if (!has(key)) throw ConfigError("missing required key", child_path(key));
    return Node(j_.at(key), child_path(key));
  }
  std::optional<Node> find(const char* key) const {
    if (!has(key)) return std::nullopt;
    return Node(j_.at(key), child_path(key));
  }
  std::vector<Node> elements() const {
    if (!j_.is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_.size(); ++i) out.emplace_back(j_[i], path_ + "[" + std::to_string(i) + "]");
    return out;
  }

  std::string str() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::int64_t integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<std::int64_t>();
  }
  std::uint64_t uinteger() const {
    if (j_.is_number_unsigned()) return j_.get<std::uint64_t>();
    if (j_.is_number_integer() && j_.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j_.get<std::int64_t>());
    fail("expected a nonnegative integer");
  }
  // Plain number, or the strings "inf" / "-inf" for threshold cuts.
  double real() const {
    if (j_.is_number()) return j_.get<double>();
    if (j_.is_string()) {
      const auto s = j_.get<std::string>();
      if (s == "inf") return kInf;
      if (s == "-inf") return -kInf;
    }
    fail("expected a number");
  }
  // Rationals are {"num": integer, "den": integer}.
  Ratio ratio() const {
    expect_object({"num", "den"});
    const auto num = at("num").integer();
    const auto den = at("den").integer();
    if (den <= 0) at("den").fail("denominator must be positive");
    return Ratio(num, den);
  }
  Label label() const {
    const auto v = integer();
    if (v == 1) return Label::Positive;
    if (v == -1) return Label::Negative;
    fail("expected a label 1 or -1");
  }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& j_;
  std::string path_;
};

template <class Enum>
Enum parse_choice(const Node& n, std::initializer_list<std::pair<const char*, Enum>> choices) {
  const auto s = n.str();
  std::string names;
  for (const auto& [name, value] : choices) {
    if (s == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  n.fail("expected one of: " + names);
}

inline std::shared_ptr<const FiniteTable> parse_table(const Node& cls, const std::filesystem::path& base_dir) {
  if (cls.has("matrix") == cls.has("csv")) cls.fail("finite class needs exactly one of matrix or csv");
  if (auto csv = cls.find("csv")) {
    const auto path = base_dir / csv->str();
    std::ifstream in(path);
    if (!in) throw IoError("cannot read class table " + path.string());
    try {
      return std::make_shared<const FiniteTable>(FiniteTable::from_csv(in));
    } catch (const std::invalid_argument& e) {
      csv->fail(e.what());
    } catch (const std::domain_error& e) {
      csv->fail(e.what());
    }
  }
  const Node matrix = cls.at("matrix");
  std::vector<std::vector<Label>> rows;
  for (const auto& row : matrix.elements()) {
    std::vector<Label> labels;
    for (const auto& cell : row.elements()) labels.push_back(cell.label());
    rows.push_back(std::move(labels));
  }
  try {
    return std::make_shared<const FiniteTable>(FiniteTable::from_rows(rows));
  } catch (const std::invalid_argument& e) {
    matrix.fail(e.what());
  } catch (const std::domain_error& e) {
    matrix.fail(e.what());
  }
}

inline HypothesisClass parse_class(const Node& cls, const std::filesystem::path& base_dir) {
  const auto kind = parse_choice<HypothesisKind>(
      cls.at("kind"),
      {{"threshold", HypothesisKind::Threshold}, {"interval", HypothesisKind::Interval}, {"finite", HypothesisKind::Finite}});
  switch (kind) {
    case HypothesisKind::Threshold: {
      cls.expect_object({"kind", "orientations"});
      bool both = false;
      if (auto o = cls.find("orientations"))
        both = parse_choice<bool>(*o, {{"positive", false}, {"both", true}});
      return HypothesisClass::threshold(both);
    }
    case HypothesisKind::Interval:
      cls.expect_object({"kind"});
      return HypothesisClass::interval();
    case HypothesisKind::Finite: {
      cls.expect_object({"kind", "matrix", "csv", "vc_dim"});
      auto table = parse_table(cls, base_dir);
      std::optional<int> vc;
      if (auto v = cls.find("vc_dim")) vc = static_cast<int>(v->integer());
      try {
        return HypothesisClass::finite(std::move(table), vc);
      } catch (const ConfigError& e) {
        cls.fail(e.what());
      }
    }
  }
  cls.fail("unknown class kind");
}

inline Hypothesis parse_h_star(const Node& h, const HypothesisClass& cls) {
  switch (cls.kind()) {
    case HypothesisKind::Threshold: {
      h.expect_object({"theta", "orientation"});
      const Label o = h.has("orientation") ? h.at("orientation").label() : Label::Positive;
      if (o == Label::Negative && !cls.both_orientations())
        h.at("orientation").fail("class has only the positive orientation");
      return Hypothesis::threshold(h.at("theta").real(), o);
    }
    case HypothesisKind::Interval: {
      h.expect_object({"lo", "hi"});
      const double lo = h.at("lo").real(), hi = h.at("hi").real();
      if (!(lo <= hi)) h.fail("need lo <= hi");
      return Hypothesis::interval(lo, hi);
    }
    case HypothesisKind::Finite: {
      h.expect_object({"index"});
      const auto idx = h.at("index").uinteger();
      if (idx >= cls.table().hypothesis_count()) h.at("index").fail("hypothesis index out of range");
      return Hypothesis::finite(cls.table_ptr(), static_cast<std::uint32_t>(idx));
    }
  }
  h.fail("unknown hypothesis kind");
}

inline std::vector<std::pair<Point, Rational>> parse_marginal(const Node& n, const HypothesisClass& cls) {
  std::vector<std::pair<Point, Rational>> out;
  for (const auto& row : n.elements()) {
    row.expect_object({"point", "mass"});
    const Node p = row.at("point");
    Point x = Point::index(0);
    try {
      if (cls.domain_kind() == DomainKind::Finite) {
        const auto i = p.uinteger();
        if (i > 0xFFFFFFFFu) p.fail("point index too large");
        x = Point::index(static_cast<std::uint32_t>(i));
      } else {
        x = Point::scalar(p.real());
      }
      cls.check_point(x);
    } catch (const std::invalid_argument& e) {
      p.fail(e.what());
    } catch (const std::domain_error& e) {
      p.fail(e.what());
    }
    const Ratio mass = row.at("mass").ratio();
    if (mass.num <= 0) row.at("mass").fail("mass must be positive");
    out.emplace_back(x, mass.to_rational());
  }
  return out;
}

inline std::shared_ptr<const FiniteDistribution> parse_distribution(const Node& root, std::string& kind_out,
                                                                    const std::filesystem::path& base_dir) {
  const Node d = root.at("distribution");
  const auto kind = d.at("kind").str();
  kind_out = kind;
  auto guard = [&](auto&& build) -> std::shared_ptr<const FiniteDistribution> {
    try {
      return build();
    } catch (const ConfigError& e) {
      if (!e.path().empty()) throw ConfigError(e.reason(), d.path() + "." + e.path());
      d.fail(e.what());
    } catch (const std::invalid_argument& e) {
      d.fail(e.what());
    } catch (const std::domain_error& e) {
      d.fail(e.what());
    }
  };
  if (kind == "rcn") {
    d.expect_object({"kind", "eta", "marginal", "h_star"});
    if (!root.has("class")) throw ConfigError("rcn needs a class section", "class");
    const HypothesisClass cls = parse_class(root.at("class"), base_dir);
    const Hypothesis h = parse_h_star(d.at("h_star"), cls);
    const auto marginal = parse_marginal(d.at("marginal"), cls);
    const Ratio eta = d.has("eta") ? d.at("eta").ratio() : Ratio(0, 1);
    return guard([&] { return std::make_shared<const FiniteDistribution>(make_rcn(cls, h, marginal, eta)); });
  }
  if (root.has("class")) throw ConfigError("this distribution builds its own class; remove the section", "class");
  if (kind == "hard_realizable") {
    d.expect_object({"kind", "n", "p"});
    const auto n = d.at("n").uinteger();
    const Ratio p = d.at("p").ratio();
    return guard([&] {
      return std::make_shared<const FiniteDistribution>(make_hard_realizable(static_cast<std::size_t>(n), p).first);
    });
  }
  if (kind == "two_point") {
    d.expect_object({"kind", "p", "eta"});
    const Ratio p = d.at("p").ratio();
    const Ratio eta = d.has("eta") ? d.at("eta").ratio() : Ratio(0, 1);
    return guard([&] { return std::make_shared<const FiniteDistribution>(make_two_point(p, eta).first); });
  }
  d.at("kind").fail("expected one of: rcn, hard_realizable, two_point");
}

}  // namespace detail

/// Parses a run configuration. `base_dir` resolves relative table paths.
inline RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".") {
  using detail::Node;
  const Node root(doc, "");
  root.expect_object({"distribution", "class", "learners", "plan", "thresholds", "voter", "split", "erm_tie",
                      "filter", "seeds", "output", "jobs"});
  RunConfig cfg;
  cfg.distribution = detail::parse_distribution(root, cfg.distribution_kind, base_dir);

  for (const auto& n : root.at("learners").elements()) {
    const auto id = parse_learner(n.str());
    if (!id) n.fail("expected one of: plain_erm, full_vote, subsampled_vote, tie, selected");
    if (std::find(cfg.learners.begin(), cfg.learners.end(), *id) != cfg.learners.end()) n.fail("learner listed twice");
    cfg.learners.push_back(*id);
  }
  if (cfg.learners.empty()) root.at("learners").fail("need at least one learner");

  const Node plan = root.at("plan");
  plan.expect_object({"m", "trials"});
  for (const auto& n : plan.at("m").elements()) {
    const auto m = n.uinteger();
    if (!exact_log3(m)) n.fail("m = " + std::to_string(m) + " is not a power of 3");
    cfg.m_grid.push_back(m);
  }
  if (cfg.m_grid.empty()) plan.at("m").fail("need at least one m");
  if (auto t = plan.find("trials")) {
    cfg.trials = t->uinteger();
    if (cfg.trials < 1) t->fail("trials must be >= 1");
  }

  if (auto th = root.find("thresholds")) {
    th->expect_object({"filter", "agree", "analysis"});
    if (auto f = th->find("filter")) cfg.learner.thresholds.filter = f->ratio();
    if (auto a = th->find("agree")) cfg.learner.thresholds.agree = a->ratio();
    if (auto a = th->find("analysis")) cfg.learner.thresholds.analysis = a->ratio();
    cfg.learner.thresholds.validate();
  }

  if (auto v = root.find("voter")) {
    v->expect_object({"t_mode", "fixed_t", "delta"});
    if (auto mode = v->find("t_mode"))
      cfg.learner.voter.mode = detail::parse_choice<VoterMode>(*mode, {{"theory", VoterMode::Theory}, {"fixed", VoterMode::Fixed}});
    if (auto t = v->find("fixed_t")) cfg.learner.voter.fixed_t = t->uinteger();
    if (auto dl = v->find("delta")) {
      cfg.learner.voter.delta = dl->ratio();
      if (!(Ratio(0, 1) < cfg.learner.voter.delta && cfg.learner.voter.delta < Ratio(1, 1)))
        dl->fail("delta must lie in (0, 1)");
    }
    if (cfg.learner.voter.mode == VoterMode::Fixed && cfg.learner.voter.fixed_t < 1)
      throw ConfigError("fixed mode needs fixed_t >= 1", "voter.fixed_t");
  }

  if (auto s = root.find("split"))
    cfg.learner.split = detail::parse_choice<SplitParams>(*s, {{"ALG1", SplitParams::alg1()}, {"ALG2", SplitParams::alg2()}});
  if (auto e = root.find("erm_tie"))
    cfg.learner.erm_tie = detail::parse_choice<ErmTie>(*e, {{"best", ErmTie::Best}, {"worst", ErmTie::Worst}});
  if (auto f = root.find("filter"))
    cfg.learner.filter =
        detail::parse_choice<FilterMode>(*f, {{"label", FilterMode::Label}, {"disagreement", FilterMode::Disagreement}});

  if (auto s = root.find("seeds")) {
    s->expect_object({"master"});
    if (auto m = s->find("master")) cfg.master_seed = m->uinteger();
  }
  if (auto o = root.find("output")) {
    o->expect_object({"csv", "svg", "timing"});
    if (auto c = o->find("csv")) cfg.output.csv = c->str();
    if (auto c = o->find("svg")) cfg.output.svg = c->str();
    if (auto t = o->find("timing")) cfg.output.timing = t->boolean();
  }
  if (auto j = root.find("jobs")) cfg.jobs = static_cast<unsigned>(j->uinteger());
  return cfg;
}

/// Reads and parses a config file. Unreadable files are I/O errors, bad JSON
/// and bad fields are config errors.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(), "");
  }
  return parse_run_config(doc, path.parent_path());
}

}  // namespace agnostic
