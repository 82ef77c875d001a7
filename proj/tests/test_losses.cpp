#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "eiknet/env_io.hpp"
#include "eiknet/error.hpp"
#include "eiknet/field.hpp"
#include "eiknet/losses.hpp"
#include "gradient_gate.hpp"
#include "reference_model.hpp"
#include "test_util.hpp"

namespace eiknet {
namespace {

Eigen::RowVectorXd r2(double x, double y) { return Eigen::RowVector2d(x, y); }

TEST(EikonalTerm, Examples) {
  EXPECT_EQ(eikonal_term(0.5, r2(2.0, 0.0)), 0.0);
  // S* = 1, predicted S = 4 (|grad| = 1/4): (sqrt(1/4) - 1)^2.
  EXPECT_DOUBLE_EQ(eikonal_term(1.0, r2(0.25, 0.0)) + eikonal_term(1.0, r2(0.0, 1.0)), 0.25);
}

TEST(NormalTerm, Examples) {
  double t = -1.0;
  EXPECT_TRUE(normal_term(1.0, r2(0.3, 0.1), r2(1.0, 0.0), t));
  EXPECT_EQ(t, 0.0);
  // S* = 0.5, S* grad T = -n.
  EXPECT_TRUE(normal_term(0.5, r2(-2.0, 0.0), r2(3.0, 0.0), t));
  EXPECT_EQ(t, 0.0);
  // S* grad T perpendicular to n with unit length.
  EXPECT_TRUE(normal_term(0.5, r2(0.0, 2.0), r2(3.0, 0.0), t));
  EXPECT_DOUBLE_EQ(t, 1.0);
  EXPECT_FALSE(normal_term(0.5, r2(0.0, 2.0), r2(0.0, 0.0), t));
  EXPECT_EQ(t, 0.0);
}

TEST(Causality, WeightsAndMonotonicity) {
  EXPECT_EQ(causality_weight(0.0, 0.5), 1.0);
  EXPECT_NEAR(causality_weight(2.0, 0.5), 0.36788, 1e-5);
  EXPECT_EQ(causality_weight(7.0, 0.0), 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  Eigen::VectorXd T(1000);
  for (auto& t : T) t = u(rng);
  std::sort(T.begin(), T.end());
  const Eigen::VectorXd w = causality_weights(T, 0.5);
  for (Eigen::Index i = 1; i < w.size(); ++i) ASSERT_LE(w[i], w[i - 1]);
}

TEST(Actions, OptimalActionsAndClamp) {
  Eigen::MatrixXd g(2, 2);
  g << 3, 4, 0, -2;
  const Eigen::MatrixXd u = optimal_actions(g);
  EXPECT_NEAR(u(0, 0), -0.6, 1e-15);
  EXPECT_NEAR(u(1, 1), 1.0, 1e-15);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Constant(2, 2, 0.99);
  const Eigen::MatrixXd s = step_and_clamp(q, -u, 0.1, Config::Zero(2), Config::Ones(2));
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_NEAR(s(1, 1), 0.89, 1e-15);
  g.row(1).setZero();
  EXPECT_THROW(optimal_actions(g), Error);
}

Environment empty_env() { return load_environment(test::fixture("empty.txt")); }

TEST(RadialField, EikonalAndTdVanish) {
  const Environment env = empty_env();
  const TrainBatch raw = sample_batch(env, 256, 3);
  // A step of dt overshoots the other endpoint for pairs closer than dt.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < raw.qs.rows(); ++i)
    if ((raw.qs.row(i) - raw.qg.row(i)).norm() > 0.05) keep.push_back(i);
  ASSERT_GE(keep.size(), 240u);
  const TrainBatch batch = make_batch(env, raw.qs(keep, Eigen::all), raw.qg(keep, Eigen::all));
  const RadialField radial(2);
  EXPECT_LE(loss_eikonal(batch, radial), 1e-20);
  for (double dt : {0.04, 0.02, 0.005}) {
    EXPECT_LE(loss_td(batch, radial, env, dt), 1e-24) << dt;
  }
  EXPECT_EQ(loss_normal(batch, radial), 0.0);
}

TEST(Td, DegenerateGradientIsAnError) {
  const Environment env = empty_env();
  const TrainBatch batch = sample_batch(env, 4, 1);
  const FunctionField flat(2, [](const Config&, const Config&) { return 1.0; });
  try {
    loss_td(batch, flat, env, 0.02);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "degenerate gradient");
  }
}

TEST(Td, ResidualIsSecondOrderInStep) {
  // Fixed smooth (non-metric) model: the Euclidean head is smooth away from
  // coincident latents.
  ModelConfig c;
  c.head = HeadKind::Euclidean;
  c.width = 32;
  c.depth = 2;
  c.seed = 5;
  const Environment env = empty_env();
  const TravelTimeModel m(c, env.lower(), env.upper());
  const ModelField field(m);
  const TrainBatch batch = sample_batch(env, 512, 9);
  // Subtract the first-order part so that what remains is the Taylor
  // remainder: T - dt |grad T| - T(stepped).
  auto remainder = [&](double dt) {
    const PairValues pv = field.evaluate(batch.qs, batch.qg);
    const Eigen::MatrixXd us = optimal_actions(pv.grad_qs);
    const Eigen::MatrixXd stepped = step_and_clamp(batch.qs, us, dt, env.lower(), env.upper());
    const PairValues ps = field.evaluate(stepped, batch.qg);
    double acc = 0.0;
    for (int i = 0; i < batch.size(); ++i) {
      const double r = pv.T[i] - dt * pv.grad_qs.row(i).norm() - ps.T[i];
      acc += r * r;
    }
    return acc / batch.size();
  };
  for (double dt : {0.04, 0.02}) {
    const double ratio = std::sqrt(remainder(dt) / remainder(dt / 2));
    EXPECT_NEAR(ratio, 4.0, 0.5) << dt;
  }
}

TEST(Td, LossScalesWithStepSquared) {
  ModelConfig c;
  c.width = 32;
  c.depth = 2;
  c.seed = 6;
  const Environment env = empty_env();
  const TravelTimeModel m(c, env.lower(), env.upper());
  const TrainBatch batch = sample_batch(env, 512, 10);
  const ModelField field(m);
  const double l04 = loss_td(batch, field, env, 0.04);
  const double l02 = loss_td(batch, field, env, 0.02);
  const double l01 = loss_td(batch, field, env, 0.01);
  EXPECT_NEAR(l04 / l02, 4.0, 0.5);
  EXPECT_NEAR(l02 / l01, 4.0, 0.5);
}

TEST(Objective, ReducesToEikonalBitwise) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  ModelConfig c;
  c.width = 16;
  c.depth = 2;
  c.seed = 2;
  const TravelTimeModel m(c, env.lower(), env.upper());
  const TrainBatch batch = sample_batch(env, 300, 4);
  LossWeights w;
  w.lambda_e = 1.0;
  w.lambda_td = 0.0;
  w.lambda_n = 0.0;
  w.lambda_c = 0.0;
  const double plain = loss_eikonal(batch, ModelField(m));
  EXPECT_EQ(evaluate_objective(batch, ModelField(m), env, w).total, plain);
  ad::Tape tape(m.params());
  const Objective obj = record_objective(tape, m, batch, env, w);
  EXPECT_EQ(tape.value(obj.loss).data(0, 0), plain);
  EXPECT_EQ(obj.report.total, plain);
  EXPECT_TRUE(std::isnan(obj.report.td));
  EXPECT_TRUE(std::isnan(obj.report.normal));
}

TEST(Objective, TapeAgreesWithFieldEvaluation) {
  const Environment env = load_environment(test::fixture("u_trap.txt"));
  ModelConfig c;
  c.width = 16;
  c.depth = 3;
  c.seed = 8;
  const TravelTimeModel m(c, env.lower(), env.upper());
  const TrainBatch batch = sample_batch(env, 200, 5);
  const LossWeights w;
  const LossReport a = evaluate_objective(batch, ModelField(m), env, w);
  ad::Tape tape(m.params());
  const LossReport b = record_objective(tape, m, batch, env, w).report;
  EXPECT_NEAR(a.total, b.total, 1e-14 * std::abs(a.total));
  EXPECT_NEAR(a.eikonal, b.eikonal, 1e-12);
  EXPECT_NEAR(a.td, b.td, 1e-12);
  EXPECT_NEAR(a.normal, b.normal, 1e-12);
  EXPECT_EQ(a.normal_skipped, b.normal_skipped);
}

TEST(Objective, NestedGradientGate) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  double worst = 0.0;
  for (const auto& r : test::run_gradient_gate(env, 100, 17)) {
    EXPECT_LE(r.value_gap, 1e-12) << "instance " << r.index;
    EXPECT_LE(r.relative_error, 1e-4) << "instance " << r.index;
    worst = std::max(worst, r.relative_error);
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Objective, BlowupNamesBatchIndex) {
  const Environment env = empty_env();
  const TrainBatch batch = sample_batch(env, 3, 2);
  const FunctionField bad(2, [](const Config& s, const Config&) {
    return s[0] > 0.0 ? std::nan("") : 1.0;
  });
  try {
    LossWeights w;
    w.lambda_td = 0.0;
    w.lambda_n = 0.0;
    evaluate_objective(batch, bad, env, w);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("loss blowup at batch index", 0), 0u) << e.what();
  }
}

TEST(Batch, RejectsOccupiedEndpoints) {
  const Environment env = load_environment(test::fixture("single_box.txt"));
  Eigen::MatrixXd qs(1, 2), qg(1, 2);
  qs << 0.5, 0.5;
  qg << 0.1, 0.1;
  EXPECT_THROW(make_batch(env, qs, qg), Error);
}

}  // namespace
}  // namespace eiknet
