#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "eiknet/config_file.hpp"
#include "eiknet/grid.hpp"
#include "eiknet/param_store.hpp"
#include "eiknet/tape.hpp"

namespace eiknet {

enum class HeadKind {
  /// Sum over a rows of the max over b columns of |x - y|.
  L1Linf,
  /// |q_s - q_g| / tau(q_s, q_g), tau = exp(h(q_s) + h(q_g)).
  Factorized,
  /// |x - y|_2 over the latent.
  Euclidean,
};

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(const std::string& s);
std::string to_string(ad::Activation kind);
ad::Activation activation_from_string(const std::string& s);

struct ModelConfig {
  int dof = 2;
  HeadKind head = HeadKind::L1Linf;
  int a = 16;
  int b = 8;
  int width = 128;
  /// Hidden layers: one input layer followed by depth - 1 residual blocks.
  int depth = 4;
  int encoding_features = 64;
  double encoding_sigma = 1.0;
  ad::Activation activation = ad::Activation::Softplus;
  std::uint64_t seed = 0;

  int latent_width() const { return head == HeadKind::Factorized ? 1 : a * b; }
  void validate() const;

  /// Reads model.* keys (missing keys keep the defaults above).
  static ModelConfig from_keys(const KeyValueFile& kv, int dof);
  void to_keys(KeyValueFile& kv) const;
};

/// Guard on |grad T| when converting to a predicted speed.
inline constexpr double kGradientGuard = 1e-8;

struct FieldEvaluation {
  double T = 0.0;
  Config grad_qs;
  Config grad_qg;
  double speed_qs = 0.0;
  double speed_qg = 0.0;
};

/// Batched travel times: row r of each matrix belongs to pair r.
struct PairValues {
  Eigen::VectorXd T;
  Eigen::MatrixXd grad_qs;  // n x dof
  Eigen::MatrixXd grad_qg;  // n x dof
};

/// D(x, y) = sum_i max_j |x_ij - y_ij| for a x b latents stored row-major.
double metric_distance(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                       const Eigen::Ref<const Eigen::RowVectorXd>& y, int a, int b);

enum class Endpoint { Start, Goal };

/// -grad / |grad| at the chosen endpoint. Throws "degenerate gradient" when
/// |grad| <= kGradientGuard.
Config optimal_action(const FieldEvaluation& eval, Endpoint at);

/// Fourier features [sin(2 pi z), cos(2 pi z)], z = ((q - lower) / extent) B,
/// with exact tangents along each configuration axis when requested.
ad::DualBatch positional_encoding(const Eigen::MatrixXd& q, const Eigen::MatrixXd& B,
                                  const Config& lower, const Config& extent, bool tangents);

/// Residual MLP encoder plus a distance head.
class TravelTimeModel {
 public:
  /// Fresh initialisation from cfg.seed.
  TravelTimeModel(ModelConfig cfg, Config lower, Config upper);
  /// Restored parameters (checkpoint path).
  TravelTimeModel(ModelConfig cfg, Config lower, Config upper, ad::ParamStore params,
                  Eigen::MatrixXd encoding);

  const ModelConfig& config() const { return cfg_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }
  const Eigen::MatrixXd& encoding_matrix() const { return encoding_; }
  const Config& lower() const { return lower_; }
  const Config& upper() const { return upper_; }

  /// Latents for each row of q (n x dof), recorded on the tape.
  ad::Tape::Node encode(ad::Tape& tape, const Eigen::MatrixXd& q, bool tangents) const;

  /// Head over pairs: starts are rows [s_off, s_off + n) of node `starts`,
  /// goals rows [g_off, g_off + n) of node `goals`. Output is n x 1 (T) or,
  /// with gradients, n x (1 + 2 dof): T, grad_qs, grad_qg. qs / qg are the
  /// raw configurations (used by the factorized head).
  ad::Tape::Node head(ad::Tape& tape, ad::Tape::Node starts, int s_off, ad::Tape::Node goals,
                      int g_off, int n, bool gradients, const Eigen::MatrixXd& qs,
                      const Eigen::MatrixXd& qg) const;

  struct PairGraph {
    ad::Tape::Node latents;  // [qs; qg] with tangents
    ad::Tape::Node output;   // T, grad_qs, grad_qg
  };
  /// The graph the trainer and evaluate() share.
  PairGraph forward_pairs(ad::Tape& tape, const Eigen::MatrixXd& qs,
                          const Eigen::MatrixXd& qg) const;

  PairValues evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const;
  FieldEvaluation evaluate(const Config& qs, const Config& qg) const;
  /// Values-only latent (no tape).
  Eigen::MatrixXd latent(const Eigen::MatrixXd& q) const;
  /// Values-only T(q_r, goal) for every row q_r; goal_latent from latent().
  Eigen::VectorXd values_to(const Eigen::MatrixXd& q, const Config& goal,
                            const Eigen::RowVectorXd& goal_latent) const;

 private:
  void init_params();

  ModelConfig cfg_;
  Config lower_, upper_, extent_;
  ad::ParamStore params_;
  Eigen::MatrixXd encoding_;  // dof x features, frozen
  std::vector<ad::ParamEntry> weights_, biases_;
};

FieldEvaluation make_evaluation(const PairValues& pv, int row);

}  // namespace eiknet
