#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eiknet/env_io.hpp"
#include "eiknet/error.hpp"
#include "eiknet/eval.hpp"
#include "eiknet/field_io.hpp"
#include "test_util.hpp"

namespace eiknet {
namespace {

namespace fs = std::filesystem;

Config pt(double x, double y) { return (Config(2) << x, y).finished(); }

PlanResult fake(bool success, double time, std::vector<Config> wps) {
  PlanResult r;
  r.success = success;
  r.wall_time = time;
  r.waypoints = std::move(wps);
  r.path_length = path_length(r.waypoints);
  return r;
}

TEST(Summarize, Arithmetic) {
  const Environment env = load_environment(test::fixture("empty.txt"));
  std::vector<PlanResult> rs;
  rs.push_back(fake(true, 0.1, {pt(0.1, 0.1), pt(0.4, 0.5)}));  // length 0.5
  rs.push_back(fake(true, 0.3, {pt(0.1, 0.1), pt(0.1, 0.4)}));  // length 0.3
  rs.push_back(fake(false, 0.2, {pt(0.1, 0.1)}));
  rs.push_back(fake(false, 0.2, {pt(0.1, 0.1)}));
  const MethodRow row = summarize("mpc", rs, env, 0.01);
  EXPECT_EQ(row.method, "mpc");
  EXPECT_EQ(row.samples, 4u);
  EXPECT_EQ(row.successes, 2u);
  EXPECT_DOUBLE_EQ(row.success_rate, 50.0);
  EXPECT_DOUBLE_EQ(row.time_mean, 0.2);
  EXPECT_NEAR(row.time_std, std::sqrt(0.02 / 4), 1e-12);
  EXPECT_DOUBLE_EQ(row.length_mean, 0.4);
  EXPECT_NEAR(row.length_std, 0.1, 1e-12);
}

TEST(Summarize, InvalidPathIsNotASuccess) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  const MethodRow row = summarize("g", {fake(true, 0.0, {pt(0.1, 0.5), pt(0.9, 0.5)})}, env, 0.005);
  EXPECT_EQ(row.successes, 0u);
  EXPECT_EQ(row.success_rate, 0.0);
}

TEST(SpuriousMinima, FindsPlantedDip) {
  const GridShape s({9, 9, 1}, 2, 1.0);
  GridField f(s, 0.0);
  for (std::size_t i = 0; i < s.count(); ++i) f[i] = s.position(i).norm();
  const std::vector<std::uint8_t> free(s.count(), 1);
  EXPECT_TRUE(spurious_minima(f, free, s.index(0, 0), 1e-9).empty());
  f[s.index(5, 5)] -= 3.0;
  const auto found = spurious_minima(f, free, s.index(0, 0), 1e-9);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0], s.index(5, 5));
  EXPECT_TRUE(spurious_minima(f, free, s.index(0, 0), 10.0).empty());
}

TEST(Provenance, Format) {
  const std::string p = provenance("a = 1\n", 42);
  std::istringstream in(p);
  std::string name, ver, eig, ever, cfg, hash, seed, n;
  in >> name >> ver >> eig >> ever >> cfg >> hash >> seed >> n;
  EXPECT_EQ(name, "eiknet");
  EXPECT_EQ(ver, kVersion);
  EXPECT_EQ(eig, "eigen");
  EXPECT_EQ(cfg, "config");
  EXPECT_EQ(hash, fnv1a_hex("a = 1\n"));
  EXPECT_EQ(hash.size(), 16u);
  EXPECT_EQ(seed, "seed");
  EXPECT_EQ(n, "42");
  EXPECT_NE(provenance("a = 2\n", 42), p);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Pairs, SeededAndFree) {
  const Environment env = load_environment(test::fixture("maze.txt"));
  const auto a = random_free_pairs(env, 50, 3), b = random_free_pairs(env, 50, 3);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].second, b[i].second);
    EXPECT_TRUE(env.is_free(a[i].first));
    EXPECT_TRUE(env.is_free(a[i].second));
  }
  EXPECT_NE(random_free_pairs(env, 1, 4)[0].first, a[0].first);
}

TEST(BenchmarkSpec, Validation) {
  BenchmarkSpec s;
  s.env_file = test::fixture("maze.txt");
  EXPECT_NO_THROW(s.validate());
  s.n_pairs = 0;
  EXPECT_THROW(s.validate(), Error);
  s.n_pairs = 1;
  s.seeds.clear();
  EXPECT_THROW(s.validate(), Error);
  s.seeds = {0};
  s.env_file = "/nonexistent/env.txt";
  EXPECT_THROW(s.validate(), Error);
}

TEST(Output, JsonAndCsv) {
  PlanResult r = fake(true, 0.25, {pt(0, 0), pt(0.5, 0.25)});
  r.cost_trace = {1.0, 0.5};
  const std::string json = plan_to_json(r);
  EXPECT_NE(json.find("\"success\": true"), std::string::npos) << json;
  EXPECT_NE(json.find("\"waypoints\""), std::string::npos);
  EXPECT_EQ(waypoints_csv(r.waypoints).substr(0, 2), "q0");
  MetricsTable t;
  t.rows.push_back(summarize("mpc", {r}, load_environment(test::fixture("empty.txt")), 0.01));
  t.goal_tolerance = 0.05;
  t.mae = 0.125;
  const std::string csv = metrics_csv(t, "prov");
  EXPECT_EQ(csv.rfind("# prov", 0), 0u) << csv;
  EXPECT_NE(csv.find("0.05"), std::string::npos);
  EXPECT_NE(csv.find("0.125"), std::string::npos);
  EXPECT_NE(csv.find("mpc,1,1,100"), std::string::npos) << csv;
}

// CLI ---------------------------------------------------------------------

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(EIKNET_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, UsageErrorsExitOne) {
  const fs::path dir = test::scratch_dir("cli_usage");
  EXPECT_EQ(run("", dir / "log"), 1);
  EXPECT_EQ(run("frobnicate", dir / "log"), 1);
  EXPECT_EQ(run("fmm --env " + test::fixture("maze.txt").string(), dir / "log"), 1);
  EXPECT_EQ(run("train --out " + dir.string(), dir / "log"), 1);
  EXPECT_EQ(run("--help", dir / "log"), 0);
}

TEST(Cli, FmmWritesFilesAndIsReproducible) {
  const fs::path dir = test::scratch_dir("cli_fmm");
  const std::string env = test::fixture("maze.txt").string();
  ASSERT_EQ(run("fmm --env " + env + " --source 0.05,0.05 --out " + (dir / "a").string(), dir / "log"), 0)
      << slurp(dir / "log");
  ASSERT_EQ(run("fmm --env " + env + " --source 0.05,0.05 --out " + (dir / "b").string(), dir / "log"), 0);
  for (const char* f : {"travel_time.csv", "travel_time.pgm", "travel_time.meta"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const GridField tt = field_from_csv(slurp(dir / "a" / "travel_time.csv"));
  EXPECT_EQ(tt.shape.size[0], 128);
  EXPECT_EQ(tt.shape.size[1], 128);
  const Environment e = load_environment(env);
  std::size_t finite = 0;
  for (std::size_t i = 0; i < tt.values.size(); ++i)
    finite += !e.grid().is_occupied(i) && std::isfinite(tt[i]);
  EXPECT_GT(finite, tt.values.size() / 2);
}

TEST(Cli, OccupiedSourceExitsTwo) {
  const fs::path dir = test::scratch_dir("cli_occupied");
  const std::string env = test::fixture("single_box.txt").string();
  EXPECT_EQ(run("fmm --env " + env + " --source 0.5,0.5 --out " + dir.string(), dir / "log"), 2);
  EXPECT_NE(slurp(dir / "log").find("source in obstacle"), std::string::npos);
}

TEST(Cli, TrainEvalPlanDump) {
  const fs::path dir = test::scratch_dir("cli_pipeline");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "env = " << test::fixture("single_box.txt").string() << "\n"
        << "env.source = 0.1,0.1\n"
        << "model.width = 16\nmodel.depth = 2\nmodel.a = 8\nmodel.b = 2\n"
        << "model.features = 8\n"
        << "train.epochs = 3\ntrain.batch = 64\n";
  }
  const std::string ck = (dir / "train" / "checkpoint.bin").string();
  ASSERT_EQ(run("train --config " + (dir / "run.cfg").string() + " --out " + (dir / "train").string(),
                dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "train" / "loss.csv"));
  const std::string env = " --env " + test::fixture("single_box.txt").string();
  ASSERT_EQ(run("eval" + env + " --checkpoint " + ck + " --pairs 3 --out " + (dir / "eval").string(),
                dir / "log"),
            0)
      << slurp(dir / "log");
  const std::string metrics = slurp(dir / "eval" / "metrics.csv");
  EXPECT_NE(metrics.find("mpc"), std::string::npos);
  EXPECT_NE(metrics.find("gradient"), std::string::npos);
  EXPECT_NE(metrics.find("mae"), std::string::npos) << metrics;
  ASSERT_EQ(run("plan" + env + " --checkpoint " + ck +
                    " --start 0.1,0.1 --goal 0.9,0.9 --dump-field --out " + (dir / "plan").string(),
                dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "plan" / "plan.json"));
  EXPECT_TRUE(fs::exists(dir / "plan" / "waypoints.csv"));
  EXPECT_TRUE(fs::exists(dir / "plan" / "field.csv"));
  ASSERT_EQ(run("dump-field" + env + " --checkpoint " + ck + " --goal 0.9,0.9 --out " +
                    (dir / "dump").string(),
                dir / "log"),
            0);
  EXPECT_EQ(slurp(dir / "dump" / "field.csv"), slurp(dir / "plan" / "field.csv"));
  // Wrong environment for the checkpoint.
  EXPECT_EQ(run("plan --env " + test::fixture("arm2.arm").string() + " --checkpoint " + ck +
                    " --start 0,0 --goal 1,1 --out " + (dir / "bad").string(),
                dir / "log"),
            2);
  EXPECT_EQ(run("plan" + env + " --checkpoint " + ck + " --start 0.5,0.5 --goal 0.9,0.9 --out " +
                    (dir / "bad").string(),
                dir / "log"),
            2);
}

}  // namespace
}  // namespace eiknet
