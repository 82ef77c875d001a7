#pragma once

#include <cstdint>
#include <vector>

#include "eiknet/environment.hpp"
#include "eiknet/field.hpp"
#include "eiknet/model.hpp"
#include "eiknet/tape.hpp"

namespace eiknet {

struct LossWeights {
  double lambda_e = 1e-2;
  double lambda_td = 1e-3;
  double lambda_n = 1e-3;
  double lambda_c = 0.5;
  double dt = 0.02;

  void validate() const;
  /// Smaller step and weaker normal term for narrow passages.
  static LossWeights narrow_passage();
};

/// Training pairs plus the speed field at both endpoints. S* and grad S*
/// never depend on the parameters, so they are computed once per batch.
struct TrainBatch {
  Eigen::MatrixXd qs, qg;              // n x dof
  Eigen::VectorXd speed_s, speed_g;    // S*
  Eigen::MatrixXd dspeed_s, dspeed_g;  // grad S*, n x dof

  int size() const { return static_cast<int>(qs.rows()); }
};

/// Throws if any endpoint is outside free space.
TrainBatch make_batch(const Environment& env, const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg);
/// n pairs with endpoints drawn independently from free space.
TrainBatch sample_batch(const Environment& env, int n, std::uint64_t seed);

/// Batch means of the unweighted terms plus the objective actually minimised.
struct LossReport {
  double eikonal = 0.0;
  double td = 0.0;
  double normal = 0.0;
  double total = 0.0;
  /// Endpoint terms of the normal loss skipped because |grad S*| was ~0.
  std::size_t normal_skipped = 0;
};

/// Below this |grad S*| the normal term is skipped.
inline constexpr double kFlatSpeedGradient = 1e-9;

/// (sqrt(S* / S) - 1)^2 with S = 1 / max(|g|, guard).
double eikonal_term(double speed_star, const Eigen::Ref<const Eigen::RowVectorXd>& grad);
/// T - dt / S* - T(stepped).
double td_residual(double T, double dt, double speed_star, double T_stepped);
/// (1 - S*) |S* g + n|^2, n = grad S* / |grad S*|. Returns false (and sets
/// `term` to 0) when grad S* is flat.
bool normal_term(double speed_star, const Eigen::Ref<const Eigen::RowVectorXd>& grad,
                 const Eigen::Ref<const Eigen::RowVectorXd>& dspeed, double& term);
/// exp(-lambda_c T).
double causality_weight(double T, double lambda_c);
Eigen::VectorXd causality_weights(const Eigen::VectorXd& T, double lambda_c);

/// q + dt * u, projected onto the box.
Eigen::MatrixXd step_and_clamp(const Eigen::MatrixXd& q, const Eigen::MatrixXd& u, double dt,
                               const Config& lower, const Config& upper);
/// -g / |g| per row; throws "degenerate gradient".
Eigen::MatrixXd optimal_actions(const Eigen::MatrixXd& grad);

double loss_eikonal(const TrainBatch& batch, const CostField& field);
double loss_td(const TrainBatch& batch, const CostField& field, const Environment& env, double dt);
double loss_normal(const TrainBatch& batch, const CostField& field, std::size_t* skipped = nullptr);

/// The combined objective evaluated without a tape.
LossReport evaluate_objective(const TrainBatch& batch, const CostField& field,
                              const Environment& env, const LossWeights& w);

struct Objective {
  ad::Tape::Node loss;
  LossReport report;
};

/// Records mean_i[(l_E LE_i + l_TD LTD_i + l_N LN_i) w_i] on the tape. The
/// TD action and stepped points and the causality weights are treated as
/// constants.
Objective record_objective(ad::Tape& tape, const TravelTimeModel& model, const TrainBatch& batch,
                           const Environment& env, const LossWeights& w);

}  // namespace eiknet
