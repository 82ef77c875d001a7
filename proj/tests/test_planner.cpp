#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "eiknet/env_io.hpp"
#include "eiknet/error.hpp"
#include "eiknet/field.hpp"
#include "eiknet/fmm.hpp"
#include "eiknet/planner.hpp"
#include "test_util.hpp"

namespace eiknet {
namespace {

Config pt(double x, double y) { return (Config(2) << x, y).finished(); }

Environment empty_env() { return load_environment(test::fixture("empty.txt")); }

TEST(Mpc, StartAtGoal) {
  const Environment env = empty_env();
  const RadialField radial(2);
  const MpcConfig cfg = default_mpc_config(env, radial);
  const PlanResult p = mpc_plan(pt(0.5, 0.5), pt(0.5, 0.5) + Config::Constant(2, 0.01), radial, env, cfg);
  EXPECT_TRUE(p.success);
  EXPECT_EQ(p.waypoints.size(), 1u);
  EXPECT_EQ(p.path_length, 0.0);
  EXPECT_TRUE(p.status.empty());
}

TEST(Mpc, DefaultsFollowTheDomain) {
  const Environment env = empty_env();
  const RadialField radial(2);
  const MpcConfig cfg = default_mpc_config(env, radial);
  EXPECT_NEAR(cfg.step, 0.02 * std::sqrt(2.0), 1e-15);
  EXPECT_EQ(cfg.sigma, cfg.step);
  EXPECT_EQ(cfg.goal_tolerance, 2 * cfg.step);
  EXPECT_EQ(cfg.sub_step, 0.5 * env.grid().shape.h);
  // Mean distance between uniform points of the unit square is about 0.52.
  EXPECT_NEAR(cfg.beta, 10.0 / 0.52, 2.0);
}

TEST(Mpc, NearlyStraightOnRadialField) {
  const Environment env = empty_env();
  const RadialField radial(2);
  const auto pts = sample_free_configurations(env, 100, 11);
  std::vector<double> ratio;
  for (std::size_t i = 0; i < pts.size(); i += 2) {
    const double direct = (pts[i] - pts[i + 1]).norm();
    if (direct < 0.2) continue;
    MpcConfig cfg = default_mpc_config(env, radial, i);
    const PlanResult p = mpc_plan(pts[i], pts[i + 1], radial, env, cfg);
    ASSERT_TRUE(p.success) << p.status;
    ratio.push_back(p.path_length / (direct - cfg.goal_tolerance));
  }
  std::nth_element(ratio.begin(), ratio.begin() + ratio.size() / 2, ratio.end());
  EXPECT_LE(ratio[ratio.size() / 2], 1.1);
}

TEST(Mpc, CostTraceMostlyDecreases) {
  const Environment env = empty_env();
  const RadialField radial(2);
  const PlanResult p = mpc_plan(pt(0.1, 0.1), pt(0.9, 0.7), radial, env, default_mpc_config(env, radial, 3));
  ASSERT_TRUE(p.success);
  std::size_t down = 0;
  for (std::size_t i = 1; i < p.cost_trace.size(); ++i) down += p.cost_trace[i] <= p.cost_trace[i - 1];
  EXPECT_GE(down, static_cast<std::size_t>(0.9 * (p.cost_trace.size() - 1)));
}

TEST(Mpc, DeterministicGivenSeed) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  const RadialField radial(2);
  const MpcConfig cfg = default_mpc_config(env, radial, 5);
  const PlanResult a = mpc_plan(pt(0.1, 0.5), pt(0.9, 0.5), radial, env, cfg);
  const PlanResult b = mpc_plan(pt(0.1, 0.5), pt(0.9, 0.5), radial, env, cfg);
  ASSERT_EQ(a.waypoints.size(), b.waypoints.size());
  for (std::size_t i = 0; i < a.waypoints.size(); ++i) EXPECT_EQ(a.waypoints[i], b.waypoints[i]);
  EXPECT_EQ(a.cost_trace, b.cost_trace);
  EXPECT_EQ(a.success, b.success);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.path_length, b.path_length);
}

TEST(Mpc, SuccessesAreCollisionFree) {
  // The radial field ignores the obstacle, so the planner leans on its
  // collision checks to get around it.
  const Environment env = load_environment(test::fixture("single_box.txt"));
  const RadialField radial(2);
  const auto pts = sample_free_configurations(env, 40, 12);
  int wins = 0;
  for (std::size_t i = 0; i < pts.size(); i += 2) {
    const PlanResult p = mpc_plan(pts[i], pts[i + 1], radial, env, default_mpc_config(env, radial, i));
    if (!p.success) continue;
    ++wins;
    EXPECT_TRUE(validate_path(p.waypoints, env, 0.5 * env.grid().shape.h).valid);
  }
  EXPECT_GT(wins, 0);
}

TEST(Mpc, RejectsOccupiedEndpoints) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  const RadialField radial(2);
  const MpcConfig cfg = default_mpc_config(env, radial);
  EXPECT_THROW(mpc_plan(pt(0.5, 0.5), pt(0.1, 0.1), radial, env, cfg), Error);
  EXPECT_THROW(mpc_plan(pt(0.1, 0.1), pt(0.5, 0.5), radial, env, cfg), Error);
  MpcConfig bad = cfg;
  bad.n_samples = 0;
  EXPECT_THROW(mpc_plan(pt(0.1, 0.1), pt(0.9, 0.1), radial, env, bad), Error);
}

TEST(Gradient, StraightOnRadialField) {
  const Environment env = empty_env();
  const RadialField radial(2);
  GradientPlanConfig cfg;
  const Config qs = pt(0.1, 0.2), qg = pt(0.8, 0.9);
  const PlanResult p = gradient_plan(qs, qg, radial, env, cfg);
  ASSERT_TRUE(p.success) << p.status;
  EXPECT_LE(p.path_length, (qs - qg).norm());
  EXPECT_GE(p.path_length, (qs - qg).norm() - cfg.goal_tolerance - cfg.step);
  for (const Config& w : p.waypoints) {
    // Every waypoint sits on the segment.
    const Config d = (qg - qs).normalized();
    const Config r = w - qs;
    EXPECT_LE((r - r.dot(d) * d).norm(), 1e-12);
  }
}

// Radial field with a narrow dip on the way: a spurious local minimum.
FunctionField bump_field(const Config& centre) {
  return FunctionField(2, [centre](const Config& q, const Config& g) {
    return (q - g).norm() - 0.05 * std::exp(-(q - centre).squaredNorm() / (2 * 0.02 * 0.02));
  });
}

TEST(Planners, MpcEscapesSpuriousMinimumGradientStalls) {
  const Environment env = empty_env();
  const Config qs = pt(0.1, 0.5), qg = pt(0.9, 0.5);
  const FunctionField bump = bump_field(pt(0.4, 0.5));
  const MpcConfig base = default_mpc_config(env, bump);

  const PlanResult g = gradient_plan(qs, qg, bump, env, gradient_config_from(base));
  EXPECT_FALSE(g.success);
  EXPECT_EQ(g.status, "stalled");
  EXPECT_LT((g.waypoints.back() - pt(0.4, 0.5)).norm(), 0.05);

  int escaped = 0;
  const int trials = 20;
  for (int s = 0; s < trials; ++s) {
    MpcConfig cfg = base;
    cfg.seed = static_cast<std::uint64_t>(s);
    escaped += mpc_plan(qs, qg, bump, env, cfg).success;
  }
  RecordProperty("mpc_escapes", escaped);
  EXPECT_GE(escaped, trials / 2);
}

TEST(ValidatePath, Cases) {
  const Environment env = test::grid_env(
      ".....\n"
      "..#..\n"
      ".....\n",
      0.1, 1.0);
  EXPECT_TRUE(validate_path({pt(0, 0)}, env, 0.1).valid);
  const PathCheck bad = validate_path({pt(0, 1), pt(4, 1)}, env, 0.1);
  ASSERT_FALSE(bad.valid);
  ASSERT_TRUE(bad.first_violation.has_value());
  EXPECT_EQ(bad.first_violation->segment, 0u);
  EXPECT_GT(bad.first_violation->t, 0.0);
  EXPECT_LT(bad.first_violation->t, 1.0);
  EXPECT_FALSE(env.is_free(bad.first_violation->point));
  EXPECT_TRUE(validate_path({pt(0, 0), pt(4, 0), pt(4, 2)}, env, 0.1).valid);
  EXPECT_FALSE(validate_path({pt(0, 0), pt(5, 0)}, env, 0.1).valid);
}

TEST(ValidatePath, FmmPathOnMazeIsValid) {
  const Environment env = load_environment(test::fixture("maze.txt"));
  const double h = env.grid().shape.h;
  const auto pts = sample_free_configurations(env, 20, 2);
  const FmmSolution sol = fmm_solve(env, pts[0]);
  int checked = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!std::isfinite(sol.travel_time.interpolate(pts[i]))) continue;
    const PlanResult p = fmm_backtrack(sol, env, pts[i], 0.5 * h);
    if (!p.success) continue;
    EXPECT_TRUE(validate_path(p.waypoints, env, 0.5 * h).valid) << i;
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

}  // namespace
}  // namespace eiknet
