#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eiknet/adam.hpp"
#include "eiknet/checkpoint.hpp"
#include "eiknet/config_file.hpp"
#include "eiknet/environment.hpp"
#include "eiknet/fmm.hpp"
#include "eiknet/losses.hpp"
#include "eiknet/model.hpp"

namespace eiknet {

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  ad::AdamOptions adam;
  int epochs = 500;
  int batch_size = 2048;
  /// Optimizer steps per epoch, each on a freshly sampled batch.
  int steps_per_epoch = 1;
  std::uint64_t seed = 0;
  /// Write a checkpoint every this many epochs (0: only at the end).
  int checkpoint_every = 0;

  void validate() const;
  /// train.*, loss.* and model.* keys; `loss.preset = narrow` switches the
  /// loss defaults to the narrow-passage values before explicit keys apply.
  static TrainConfig from_keys(const KeyValueFile& kv, int dof);
  void to_keys(KeyValueFile& kv) const;
};

struct EpochReport {
  long epoch = 0;
  LossReport loss;
  /// Seconds since the start of training.
  double wall_time = 0.0;
};

std::string loss_csv_header();
std::string loss_csv_row(const EpochReport& r);

struct TrainOutput {
  /// Directory for checkpoint.bin and loss.csv; nothing is written if empty.
  std::filesystem::path dir;
  std::function<void(const EpochReport&)> on_epoch;
  /// Extra key-value pairs stored in the checkpoint header.
  std::map<std::string, std::string> extra_hyper;
};

struct TrainResult {
  TravelTimeModel model;
  std::vector<EpochReport> history;
  /// Set when training stopped on a blowup; the model holds the last good
  /// parameters.
  std::optional<std::string> abort_reason;
  std::filesystem::path checkpoint;
};

/// Seed for optimizer step `step` of epoch `epoch`.
std::uint64_t batch_seed(std::uint64_t seed, long epoch, int step);

/// One adaptive-moment step on the combined objective; returns the report.
LossReport train_step(TravelTimeModel& model, ad::AdamState& state, const TrainBatch& batch,
                      const Environment& env, const TrainConfig& cfg);

TrainResult train(const Environment& env, const TrainConfig& cfg, const TrainOutput& out = {});

struct AblationVariant {
  std::string name;
  LossWeights weights;
  HeadKind head = HeadKind::L1Linf;
};

/// full, -L_E, -L_TD, -L_N, -L_C and the factorized head under the full loss.
std::vector<AblationVariant> standard_ablation(const LossWeights& base);

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string status;
  double mae = 0.0;
  double initial_mae = 0.0;
  double train_seconds = 0.0;
  /// Filled for heads that are not metrics by construction.
  std::optional<TriangleCheck> triangle;
};

struct AblationRow {
  std::string variant;
  double median_mae = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::optional<std::size_t> triangle_violations;
};

struct AblationTable {
  std::vector<AblationRun> runs;
  std::vector<AblationRow> rows;

  const AblationRow& row(const std::string& variant) const;
};

struct AblationOptions {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<AblationVariant> variants;  // empty: standard_ablation(base.weights)
  /// Oracle source; the model is evaluated as T(q, source) on the lattice.
  Config source;
  std::size_t triangle_triples = 20000;
  /// Per-run output directories are created under this when set.
  std::filesystem::path dir;
  std::function<void(const AblationRun&)> on_run;
};

/// Trains every variant for every seed on a grid environment and reports
/// the median MAE against the Fast Marching oracle. A failing run becomes a
/// row with its status; the suite carries on.
AblationTable ablation_suite(const Environment& env, const TrainConfig& base, const AblationOptions& opts);

/// MAE of a trained model against a precomputed oracle on the free nodes.
double model_mae(const TravelTimeModel& model, const Environment& env, const FmmSolution& oracle);

}  // namespace eiknet
