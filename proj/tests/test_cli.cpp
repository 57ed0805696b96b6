#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lpdist/cli.hpp"
#include "lpdist/distortion.hpp"

using namespace lpdist;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string temp_path(const std::string& name) { return ::testing::TempDir() + name; }

}  // namespace

TEST(Cli, GroupInfoSol) {
  Result r = call({"group", "info", "--family", "sol-fin", "--n", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["oA"], 10);
  EXPECT_EQ(j["order"], 250);
}

TEST(Cli, ScanLamplighter) {
  std::vector<std::string> args = {"scan", "--family", "lamplighter-fin", "--m", "2", "--p", "2",
                                   "--n", "4,6,8,10,12", "--format", "csv"};
  Result r = call(args);
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "order", "diam", "C_hat", "dist_emp", "dist_bound",
                                                "log_diam_pow", "ratio"}));
  double lo = 1e300, hi = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 8u);
    const double ratio = std::stod(rows[i][7]);
    EXPECT_NEAR(ratio, std::stod(rows[i][4]) / std::stod(rows[i][6]), 1e-12);
    EXPECT_NEAR(std::stod(rows[i][6]), std::sqrt(std::log(std::stod(rows[i][2]))), 1e-12);
    lo = std::min(lo, ratio), hi = std::max(hi, ratio);
  }
  EXPECT_LE(hi / lo, 3.0);
  // Bit-identical on a second run.
  EXPECT_EQ(call(args).out, r.out);
}

TEST(Cli, ScanRowsMatchLibrary) {
  Result r = call({"scan", "--family", "bs-fin", "--n", "5", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = csv_rows(r.out);
  Group g(make_spec(Family::BsFin, {.m = 2, .n = 5}));
  EmbeddingBundle b = build_bundle(g, 2);
  DistortionReport rep = distortion_equivariant(b, bfs_ball(g, kWholeGroup));
  EXPECT_EQ(std::stod(rows[1][4]), rep.dist);
  EXPECT_EQ(std::stod(rows[1][5]), apriori_bound(b).dist_bound);
}

TEST(Cli, PlotScript) {
  const std::string path = temp_path("lpdist_plot.py");
  Result r = call({"scan", "--n", "4,5", "--plot-script", path});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_NE(ss.str().find("matplotlib"), std::string::npos);
  std::remove(path.c_str());
}

TEST(Cli, ZeroedBlockExitsNumerical) {
  Result r = call({"distort", "--n", "4", "--radius", "2", "--zero-block", "0"});
  EXPECT_EQ(r.code, kExitNumerical);
  EXPECT_NE(r.err.find("ZeroNorm"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(call({"group", "info", "--n", "4", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(call({}).code, kExitUsage);
  EXPECT_EQ(call({"group", "info", "--family", "nope", "--n", "4"}).code, kExitUsage);
  EXPECT_EQ(call({"group", "info", "--n", "30"}).code, kExitCap);
  EXPECT_EQ(call({"embed", "--n", "4", "--p", "9"}).code, kExitUsage);
  EXPECT_EQ(call({"embed", "--n", "4", "--p", "1.5"}).code, kExitUsage);
  EXPECT_EQ(call({"profile", "--n", "4", "--p", "1.5", "--radius", "2"}).code, kExitOk);
  EXPECT_EQ(call({"--help"}).code, kExitOk);
}

TEST(Cli, Subcommands) {
  EXPECT_EQ(call({"cayley", "ball", "--n", "4", "--radius", "2", "--format", "csv"}).code, 0);
  Result d = call({"cayley", "diam", "--family", "lamplighter-fin", "--n", "2"});
  ASSERT_EQ(d.code, 0);
  EXPECT_EQ(nlohmann::json::parse(d.out)["diameter"], 4);
  Result g = call({"girth", "--n", "8", "--radius", "3"});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(nlohmann::json::parse(g.out)["g_lower"], girth(Group(make_spec(Family::LamplighterInf, {})),
                                                           Group(make_spec(Family::LamplighterFin, {.n = 8})), 3)
                                                         .g_lower);
  EXPECT_EQ(call({"expradical", "--family", "sol-inf", "--radius", "8"}).code, 0);
  EXPECT_EQ(call({"embed", "--family", "sol-fin", "--n", "7"}).code, 0);
  Result c = call({"c2", "--metric", "cycle:4", "--tol", "1e-5"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NEAR(nlohmann::json::parse(c.out)["c2"].get<double>(), std::sqrt(2.0), 1e-4);
  EXPECT_EQ(call({"c2"}).code, kExitUsage);
}

TEST(Cli, MetricFile) {
  const std::string path = temp_path("lpdist_metric.json");
  std::ofstream(path) << R"({"distances": [[0,1,2],[1,0,1],[2,1,0]]})";
  Result c = call({"c2", "--metric-file", path});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NEAR(nlohmann::json::parse(c.out)["c2"].get<double>(), 1.0, 1e-6);
  std::remove(path.c_str());
}

TEST(Cli, ConfigFile) {
  const std::string path = temp_path("lpdist_config.json");
  std::ofstream(path) << R"({"command": "group info", "family": "bs-fin", "m": 2, "n": 4})";
  Result r = call({"--config", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["q"], 15);
  std::ofstream(path) << R"({"command": "group info", "family": "bs-fin", "n": 4, "colour": 1})";
  EXPECT_EQ(call({"--config", path}).code, kExitUsage);
  std::ofstream(path) << R"({"command": "scan", "n": [4, 5], "format": "csv"})";
  Result s = call({"--config", path});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(csv_rows(s.out).size(), 3u);
  std::remove(path.c_str());
}

TEST(Cli, OutFile) {
  const std::string path = temp_path("lpdist_out.json");
  Result r = call({"group", "info", "--n", "4", "--out", path});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  EXPECT_EQ(nlohmann::json::parse(in)["order"], 64);
  std::remove(path.c_str());
}
