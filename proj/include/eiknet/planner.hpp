#pragma once

#include <cstdint>

#include "eiknet/environment.hpp"
#include "eiknet/field.hpp"
#include "eiknet/path.hpp"

namespace eiknet {

struct MpcConfig {
  int n_samples = 64;
  int horizon = 10;
  int n_rollouts = 8;
  /// Length of every action, configuration units.
  double step = 0.02;
  /// Softmax sharpness, 1 / time units.
  double beta = 10.0;
  int max_iterations = 500;
  double goal_tolerance = 0.04;
  /// Standard deviation of the action proposal.
  double sigma = 0.02;
  /// Spacing of collision checks along each action.
  double sub_step = 0.005;
  std::uint64_t seed = 0;

  void validate() const;
};

/// step = 0.02 * diagonal, sigma = step, goal_tolerance = 2 step,
/// beta = 10 / mean T over random free pairs, sub_step = h / 2 on grids
/// (step / 8 otherwise).
MpcConfig default_mpc_config(const Environment& env, const CostField& field, std::uint64_t seed = 0);

/// Sampling-based receding-horizon planner over a cost-to-go field.
PlanResult mpc_plan(const Config& qs, const Config& qg, const CostField& field, const Environment& env,
                    const MpcConfig& cfg);

struct GradientPlanConfig {
  double step = 0.02;
  int max_iterations = 500;
  double goal_tolerance = 0.04;
  double sub_step = 0.005;
  /// Give up when the best cost-to-go has not improved for this many steps.
  int patience = 50;

  void validate() const;
};

GradientPlanConfig gradient_config_from(const MpcConfig& mpc);

/// Normalized gradient descent on T(., q_g) starting at q_s.
PlanResult gradient_plan(const Config& qs, const Config& qg, const CostField& field,
                         const Environment& env, const GradientPlanConfig& cfg);

}  // namespace eiknet
