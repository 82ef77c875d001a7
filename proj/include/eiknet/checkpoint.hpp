#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "eiknet/model.hpp"

namespace eiknet {

/// A saved model plus the training settings that produced it. The byte
/// layout is described in docs/checkpoint_format.md.
struct Checkpoint {
  ModelConfig config;
  Config lower, upper;
  ad::ParamStore params;
  Eigen::MatrixXd encoding;
  /// Free-form hyperparameters (loss weights, epochs, env path, ...).
  std::map<std::string, std::string> hyper;
  long epoch = 0;

  TravelTimeModel model() const;
};

Checkpoint make_checkpoint(const TravelTimeModel& model,
                           std::map<std::string, std::string> hyper = {}, long epoch = 0);

std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eiknet
