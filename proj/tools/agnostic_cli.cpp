// Command-line front end: split-demo, train, eval, sweep, plot.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "agnostic/config.hpp"
#include "agnostic/eval.hpp"
#include "agnostic/selector.hpp"
#include "agnostic/split_scheme.hpp"
#include "agnostic/svg_plot.hpp"
#include "agnostic/tie_learner.hpp"

namespace {

using namespace agnostic;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json fraction(const Rational& r) { return {{"num", numerator(r).str()}, {"den", denominator(r).str()}}; }

json ensemble_json(const WeightedEnsemble& e) {
  return {{"t", e.total_weight()}, {"leaf_count", e.leaf_count()}, {"erm_calls", e.erm_calls()},
          {"members", e.members().size()}};
}

int cmd_split_demo(std::uint64_t m, const std::string& preset) {
  SplitParams params;
  if (preset == "ALG1")
    params = SplitParams::alg1();
  else if (preset == "ALG2")
    params = SplitParams::alg2();
  else
    throw ConfigError("expected ALG1 or ALG2", "--preset");
  const auto k = exact_log3(m);
  if (!k) throw ConfigError("m = " + std::to_string(m) + " is not a power of 3 (m must equal 3^k)", "--m");
  const auto diag = split_diagnostics(m, 0, params);
  std::cout << "m,preset,k,depth,leaves,leaf_size\n"
            << m << ',' << params.name() << ',' << *k << ',' << diag.depth << ',' << leaf_count(m, params) << ','
            << diag.leaf_size << "\n\n";
  std::cout << "level,k,cell_size,active_size,history_size\n";
  for (std::size_t i = 0; i < diag.levels.size(); ++i) {
    const auto& lv = diag.levels[i];
    std::cout << i + 1 << ',' << lv.k << ',' << lv.cell_size << ',' << lv.active_size << ',' << lv.history_size
              << '\n';
  }
  return 0;
}

int cmd_train(const std::string& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  if (cfg.learners.size() != 1) throw ConfigError("train needs exactly one learner", "learners");
  if (cfg.m_grid.size() != 1) throw ConfigError("train needs exactly one m", "plan.m");
  const LearnerId learner = cfg.learners.front();
  const std::uint64_t m = cfg.m_grid.front();
  if (auto reason = infeasible_reason(learner, m)) throw ConfigError(*reason, "plan.m");

  const auto& dist = *cfg.distribution;
  const auto& cls = dist.class_ref();
  const auto k = static_cast<std::uint32_t>(*exact_log3(m));
  const LabeledSequence s = dist.sample(m, sample_seed_for(cfg.master_seed, k, 0));
  TieTrainConfig lc = cfg.learner;
  lc.seed = learner_seed_for(cfg.master_seed, learner, k, 0);

  json out = {{"learner", to_string(learner)}, {"m", m}, {"tau", fraction(dist.tau())}};
  switch (learner) {
    case LearnerId::PlainErm: {
      const auto h = erm(cls, s, lc.erm_tie).hypothesis;
      out["hypothesis"] = h.params_csv();
      out["err"] = fraction(exact_error(h, dist));
      out["erm_calls"] = 1;
      break;
    }
    case LearnerId::FullVote:
    case LearnerId::SubsampledVote: {
      const auto e = learner == LearnerId::FullVote
                         ? train_full_ensemble(cls, s, {}, lc.split, lc.erm_tie)
                         : subsample_ensemble(cls, s, {}, lc.split, lc.voter, lc.seed, lc.erm_tie);
      out["ensemble"] = ensemble_json(e);
      out["erm_calls"] = e.erm_calls();
      out["err"] = fraction(exact_error(e, dist));
      break;
    }
    case LearnerId::Tie: {
      const auto c = train_tie(cls, s, lc);
      out.update(c.diagnostics().to_json());
      out["h_tie"] = c.h_tie().params_csv();
      out["err"] = fraction(exact_error(c, dist));
      break;
    }
    case LearnerId::Selected: {
      const PlainErm competitor(lc.erm_tie);
      const auto c = train_select(cls, s, competitor, lc);
      out.update(c.to_json());
      out["erm_calls"] = c.tie().diagnostics().erm_calls() + 1;
      out["err"] = fraction(exact_error(c, dist));
      break;
    }
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

unsigned pick_jobs(const RunConfig& cfg, std::optional<unsigned> flag) { return flag ? *flag : cfg.jobs; }

void print_fits(const std::vector<SummaryRow>& rows, const std::vector<LearnerId>& roster) {
  for (auto id : roster) {
    const auto fit = fit_rate(rows, id);
    if (fit.ok)
      std::cerr << "fit_rate " << to_string(id) << ": slope " << fit.slope << " over " << fit.points
                << " points (approximate, double precision)\n";
    else
      std::cerr << "fit_rate " << to_string(id) << ": no fit (" << fit.reason << ")\n";
  }
}

int cmd_eval(const std::string& config_path, std::optional<unsigned> jobs) {
  const RunConfig cfg = load_run_config(config_path);
  const auto result = run_plan(cfg.plan(), pick_jobs(cfg, jobs));
  const auto rows = aggregate(result.records, result.skipped);
  write_summary_csv(std::cout, rows);
  print_fits(rows, cfg.learners);
  return 0;
}

std::string render_svg(const std::vector<TrialRecord>& records, const std::vector<LearnerId>& roster,
                       const std::string& title) {
  std::ostringstream svg;
  write_svg(svg, excess_series(aggregate(records), roster), title);
  return svg.str();
}

int cmd_sweep(const std::string& config_path, bool plot, std::string csv_path, std::string svg_path,
              std::optional<unsigned> jobs) {
  const RunConfig cfg = load_run_config(config_path);
  if (csv_path.empty()) csv_path = cfg.output.csv;
  if (svg_path.empty()) svg_path = cfg.output.svg;
  if (csv_path.empty()) throw ConfigError("sweep needs an output CSV path", "output.csv");
  if (plot && svg_path.empty()) throw ConfigError("--plot needs an output SVG path", "output.svg");

  const auto result = run_plan(cfg.plan(), pick_jobs(cfg, jobs));
  std::ostringstream csv;
  write_records_csv(csv, result.records);
  write_file(csv_path, csv.str());
  for (const auto& s : result.skipped)
    std::cerr << "skipped " << to_string(s.learner) << " m=" << s.m << ": " << s.reason << '\n';
  if (plot) write_file(svg_path, render_svg(result.records, cfg.learners, "mean excess error, " + cfg.distribution_kind));
  return 0;
}

int cmd_plot(const std::string& csv_path, const std::string& out_path) {
  std::istringstream in(read_file(csv_path));
  std::vector<TrialRecord> records;
  try {
    records = read_records_csv(in);
  } catch (const StructuralError& e) {
    throw ConfigError(e.what(), "--csv");
  }
  write_file(out_path, render_svg(records, roster_of(records), "mean excess error"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agnostic PAC learner experiments"};
  app.require_subcommand(1);

  std::uint64_t demo_m = 0;
  std::string demo_preset = "ALG2";
  auto* demo = app.add_subcommand("split-demo", "Print leaf count and level sizes of the split for m = 3^k");
  demo->add_option("--m", demo_m, "Sample size (power of 3)")->required();
  demo->add_option("--preset", demo_preset, "ALG1 or ALG2")->capture_default_str();

  std::string config_path;
  std::optional<unsigned> jobs;
  auto* train = app.add_subcommand("train", "Train one (learner, m) cell and print diagnostics JSON");
  train->add_option("--config", config_path, "Run config JSON")->required();

  auto* eval = app.add_subcommand("eval", "Run the plan and print summary CSV");
  eval->add_option("--config", config_path, "Run config JSON")->required();
  eval->add_option("--jobs", jobs, "Worker threads (default: available parallelism)");

  bool plot = false;
  std::string csv_override, svg_override;
  auto* sweep = app.add_subcommand("sweep", "Run the plan and write the trial CSV");
  sweep->add_option("--config", config_path, "Run config JSON")->required();
  sweep->add_flag("--plot", plot, "Also write the SVG plot");
  sweep->add_option("--csv", csv_override, "Override output.csv");
  sweep->add_option("--svg", svg_override, "Override output.svg");
  sweep->add_option("--jobs", jobs, "Worker threads (default: available parallelism)");

  std::string plot_csv, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "Render an SVG from a trial CSV");
  plot_cmd->add_option("--csv", plot_csv, "Trial CSV")->required();
  plot_cmd->add_option("--out", plot_out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*demo) return cmd_split_demo(demo_m, demo_preset);
    if (*train) return cmd_train(config_path);
    if (*eval) return cmd_eval(config_path, jobs);
    if (*sweep) return cmd_sweep(config_path, plot, csv_override, svg_override, jobs);
    if (*plot_cmd) return cmd_plot(plot_csv, plot_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {  // ConfigError, PreconditionError
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {  // StructuralError
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
