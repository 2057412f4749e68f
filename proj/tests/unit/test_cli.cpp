#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "agnostic/split_scheme.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run run(const std::string& args) {
  const std::string cmd = std::string(AGNOSTIC_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// Runs the CLI and captures stdout only.
Run run_stdout(const std::string& args) {
  const std::string cmd = std::string(AGNOSTIC_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string config(const std::string& name) { return std::string(AGNOSTIC_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("agnostic_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_F(Cli, SplitDemoTwelve) {
  const auto r = run_stdout("split-demo --m 531441 --preset ALG2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("531441,ALG2,12,2,729,"), std::string::npos) << r.out;
}

TEST_F(Cli, SplitDemoBaseCase) {
  const auto r = run_stdout("split-demo --m 243");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("243,ALG2,5,0,1,243"), std::string::npos) << r.out;
}

TEST_F(Cli, SplitDemoRejectsNonPowerOfThree) {
  const auto r = run("split-demo --m 100");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("power of 3"), std::string::npos) << r.out;
}

TEST_F(Cli, SweepMinimalHasOneDataRow) {
  const auto csv = dir_ / "out.csv";
  const auto r = run("sweep --config " + config("minimal.json") + " --csv " + csv.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto text = slurp(csv);
  EXPECT_EQ(count_lines(text), 2u) << text;
  EXPECT_EQ(text.rfind("trial,learner,m,tau_num,tau_den,err_num,err_den,excess_num,excess_den,margin10_num,"
                       "margin10_den,margin11_num,margin11_den,s3neq,fallback,erm_calls,ms\n",
                       0),
            0u);
}

TEST_F(Cli, SweepPlotHasPolylinePerLearnerAndIsDeterministic) {
  const auto cfg = dir_ / "cfg.json";
  std::ifstream in(config("standard_sweep.json"));
  json doc = json::parse(in);
  doc["plan"]["m"] = {27, 81};
  doc["plan"]["trials"] = 2;
  doc["voter"] = {{"t_mode", "fixed"}, {"fixed_t", 50}};
  std::ofstream(cfg) << doc.dump(2);
  const std::string args = "sweep --plot --config " + cfg.string();
  const auto a = run(args + " --csv " + (dir_ / "a.csv").string() + " --svg " + (dir_ / "a.svg").string() +
                     " --jobs 1");
  const auto b = run(args + " --csv " + (dir_ / "b.csv").string() + " --svg " + (dir_ / "b.svg").string() +
                     " --jobs 3");
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv"));
  const auto svg = slurp(dir_ / "a.svg");
  EXPECT_EQ(svg, slurp(dir_ / "b.svg"));
  std::size_t polylines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, doc["learners"].size());
  // Every learner is feasible at 27 and 81, so every cell runs.
  std::ifstream csv(dir_ / "a.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 5u * 2u * 2u);

  const auto p = run("plot --csv " + (dir_ / "a.csv").string() + " --out " + (dir_ / "p.svg").string());
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_NE(slurp(dir_ / "p.svg").find("<polyline"), std::string::npos);
}

TEST_F(Cli, SweepErrors) {
  const auto cfg = dir_ / "bad.json";
  std::ofstream(cfg) << R"({"distribution": {"kind": "two_point", "p": {"num": 1, "den": 3}}, "learners": ["tie"],
                            "plan": {"m": [27]}, "bogus": 1})";
  const auto r = run("sweep --config " + cfg.string() + " --csv " + (dir_ / "x.csv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bogus"), std::string::npos) << r.out;
  const auto io = run("sweep --config " + config("minimal.json") + " --csv /nonexistent/dir/out.csv");
  EXPECT_EQ(io.code, 3) << io.out;
  EXPECT_EQ(run("sweep --config /nonexistent/config.json --csv x.csv").code, 3);
}

TEST_F(Cli, TrainTieJson) {
  const auto r = run_stdout("train --config " + config("train_tie.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(r.out);
  for (const char* key : {"t1", "t2", "s3neq", "fallback", "erm_calls"}) EXPECT_TRUE(j.contains(key)) << key;
  // With m = 3^8 each ensemble trains on one third, 3^7 examples.
  const std::uint64_t part = 6561 / 3;
  const auto leaves = agnostic::leaf_count(part, agnostic::SplitParams::alg2());
  EXPECT_EQ(j["leaves1"], leaves);
  EXPECT_LE(j["erm_calls1"].get<std::uint64_t>(), std::min(j["t1"].get<std::uint64_t>(), leaves));
  EXPECT_LE(j["erm_calls2"].get<std::uint64_t>(), std::min(j["t2"].get<std::uint64_t>(), leaves));
}

TEST_F(Cli, TrainSelectedJson) {
  const auto r = run_stdout("train --config " + config("train_selected.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(r.out);
  for (const char* key : {"holdout_tie", "holdout_competitor", "chosen_side"}) EXPECT_TRUE(j.contains(key)) << key;
  const std::string side = j["chosen_side"];
  EXPECT_TRUE(side == "tie" || side == "competitor");
}

TEST_F(Cli, TrainNeedsSingleCell) {
  EXPECT_EQ(run("train --config " + config("standard_sweep.json")).code, 2);
}

TEST_F(Cli, EvalPrintsSummary) {
  const auto r = run_stdout("eval --config " + config("minimal.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("learner,m,count,mean_err", 0), 0u);
  EXPECT_NE(r.out.find("plain_erm,27,1,"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("split-demo").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}
