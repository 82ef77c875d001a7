#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "eiknet/checkpoint.hpp"
#include "eiknet/env_io.hpp"
#include "eiknet/error.hpp"
#include "eiknet/trainer.hpp"
#include "test_util.hpp"

namespace eiknet {
namespace {

TrainConfig tiny(int epochs) {
  TrainConfig c;
  c.model.width = 16;
  c.model.depth = 2;
  c.model.a = 8;
  c.model.b = 2;
  c.model.encoding_features = 8;
  c.epochs = epochs;
  c.batch_size = 64;
  c.steps_per_epoch = 1;
  c.seed = 7;
  c.model.seed = 7;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(TrainConfig, KeysRoundTrip) {
  TrainConfig c = tiny(12);
  c.weights.lambda_c = 0.25;
  c.adam.lr = 3e-4;
  c.checkpoint_every = 4;
  KeyValueFile kv;
  c.to_keys(kv);
  const TrainConfig back = TrainConfig::from_keys(kv, 2);
  KeyValueFile kv2;
  back.to_keys(kv2);
  EXPECT_EQ(kv.canonical(), kv2.canonical());
  EXPECT_EQ(back.weights.lambda_c, 0.25);
  EXPECT_EQ(back.epochs, 12);
}

TEST(TrainConfig, DefaultsAndNarrowPreset) {
  const TrainConfig d = TrainConfig::from_keys(KeyValueFile::parse(""), 2);
  EXPECT_EQ(d.weights.lambda_e, 1e-2);
  EXPECT_EQ(d.weights.lambda_td, 1e-3);
  EXPECT_EQ(d.weights.lambda_n, 1e-3);
  EXPECT_EQ(d.weights.lambda_c, 0.5);
  EXPECT_EQ(d.weights.dt, 0.02);
  const TrainConfig n = TrainConfig::from_keys(KeyValueFile::parse("loss.preset = narrow\n"), 2);
  EXPECT_EQ(n.weights.dt, 0.005);
  EXPECT_EQ(n.weights.lambda_n, 2e-4);
  const TrainConfig o =
      TrainConfig::from_keys(KeyValueFile::parse("loss.preset = narrow\nloss.dt = 0.01\n"), 2);
  EXPECT_EQ(o.weights.dt, 0.01);
  EXPECT_THROW(TrainConfig::from_keys(KeyValueFile::parse("loss.preset = other\n"), 2), Error);
  EXPECT_THROW(TrainConfig::from_keys(KeyValueFile::parse("loss.lambda_e = -1\n"), 2), Error);
  EXPECT_THROW(TrainConfig::from_keys(KeyValueFile::parse("train.batch = 0\n"), 2), Error);
}

TEST(Train, DeterministicLossTrajectory) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  const TrainResult a = train(env, tiny(10));
  const TrainResult b = train(env, tiny(10));
  ASSERT_EQ(a.history.size(), 10u);
  ASSERT_EQ(b.history.size(), 10u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].loss.eikonal, b.history[i].loss.eikonal);
    EXPECT_EQ(a.history[i].loss.td, b.history[i].loss.td);
    EXPECT_EQ(a.history[i].loss.normal, b.history[i].loss.normal);
    EXPECT_EQ(a.history[i].loss.total, b.history[i].loss.total);
  }
  EXPECT_EQ(a.model.params().values(), b.model.params().values());
  TrainConfig other = tiny(10);
  other.seed = 8;
  EXPECT_NE(train(env, other).history.back().loss.total, a.history.back().loss.total);
}

TEST(Train, ReducesTheObjective) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  for (std::uint64_t seed : {0, 1, 2, 7}) {
    TrainConfig c = tiny(100);
    c.seed = c.model.seed = seed;
    c.model.a = 32;
    c.model.b = 1;
    const TrainResult r = train(env, c);
    auto mean_total = [&](std::size_t from, std::size_t to) {
      double s = 0.0;
      for (std::size_t i = from; i < to; ++i) s += r.history[i].loss.total;
      return s / static_cast<double>(to - from);
    };
    const double head = mean_total(0, 10), tail = mean_total(90, 100);
    EXPECT_LT(tail, 0.85 * head) << "seed " << seed;
  }
}

TEST(Train, ZeroEpochsWritesInitialCheckpoint) {
  const Environment env = load_environment(test::fixture("empty.txt"));
  const auto dir = test::scratch_dir("zero_epochs");
  TrainOutput out;
  out.dir = dir;
  out.extra_hyper["env"] = "empty.txt";
  const TrainResult r = train(env, tiny(0), out);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(slurp(dir / "loss.csv"), loss_csv_header());
  const Checkpoint ck = load_checkpoint(dir / "checkpoint.bin");
  EXPECT_EQ(ck.epoch, 0);
  EXPECT_EQ(ck.hyper.at("env"), "empty.txt");
  EXPECT_EQ(ck.hyper.at("train.epochs"), "0");
  const TravelTimeModel fresh(tiny(0).model, env.lower(), env.upper());
  EXPECT_EQ(ck.params.values(), fresh.params().values());
}

TEST(Train, CsvAndPeriodicCheckpoints) {
  const Environment env = load_environment(test::fixture("empty.txt"));
  const auto dir = test::scratch_dir("periodic");
  TrainConfig c = tiny(5);
  c.checkpoint_every = 2;
  TrainOutput out;
  out.dir = dir;
  std::vector<long> seen;
  out.on_epoch = [&](const EpochReport& r) { seen.push_back(r.epoch); };
  const TrainResult r = train(env, c, out);
  EXPECT_EQ(seen, (std::vector<long>{1, 2, 3, 4, 5}));
  std::istringstream csv(slurp(dir / "loss.csv"));
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  EXPECT_EQ(line + "\n", loss_csv_header());
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 5);
  const Checkpoint ck = load_checkpoint(r.checkpoint);
  EXPECT_EQ(ck.epoch, 5);
  EXPECT_EQ(ck.params.values(), r.model.params().values());
}

TEST(Train, BlowupAbortsWithLastGoodState) {
  const Environment env = load_environment(test::fixture("empty.txt"));
  const auto dir = test::scratch_dir("blowup");
  TrainConfig c = tiny(40);
  c.adam.lr = 1e150;
  TrainOutput out;
  out.dir = dir;
  const TrainResult r = train(env, c, out);
  ASSERT_TRUE(r.abort_reason.has_value());
  EXPECT_LT(r.history.size(), 40u);
  const Checkpoint ck = load_checkpoint(r.checkpoint);
  EXPECT_EQ(ck.epoch, static_cast<long>(r.history.size()));
  for (double v : ck.params.values()) ASSERT_TRUE(std::isfinite(v));
  EXPECT_EQ(ck.params.values(), r.model.params().values());
}

TEST(Ablation, VariantsAndSuiteBookkeeping) {
  const auto variants = standard_ablation(LossWeights{});
  ASSERT_EQ(variants.size(), 6u);
  EXPECT_EQ(variants[0].name, "full");
  EXPECT_EQ(variants[1].weights.lambda_e, 0.0);
  EXPECT_EQ(variants[2].weights.lambda_td, 0.0);
  EXPECT_EQ(variants[3].weights.lambda_n, 0.0);
  EXPECT_EQ(variants[4].weights.lambda_c, 0.0);
  EXPECT_EQ(variants[5].head, HeadKind::Factorized);

  const Environment env = load_environment(test::fixture("single_box.txt"));
  TrainConfig c = tiny(3);
  AblationOptions opts;
  opts.seeds = {0, 1};
  opts.source = Config::Constant(2, 0.1);
  opts.triangle_triples = 500;
  opts.variants = {variants[0], variants[5]};
  const AblationTable t = ablation_suite(env, c, opts);
  ASSERT_EQ(t.runs.size(), 4u);
  EXPECT_EQ(t.row("full").runs, 2u);
  EXPECT_FALSE(t.row("full").triangle_violations.has_value());
  EXPECT_TRUE(t.row(variants[5].name).triangle_violations.has_value());
  for (const auto& run : t.runs) {
    EXPECT_TRUE(run.ok) << run.status;
    EXPECT_GT(run.mae, 0.0);
  }
  EXPECT_THROW(t.row("missing"), Error);
}

}  // namespace
}  // namespace eiknet
