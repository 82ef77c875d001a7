#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "eiknet/environment.hpp"

namespace eiknet {

/// Overrides applied when building an environment from a file. Grids default
/// to a unit-normalized lattice (longest side spans [0, 1]) and the default
/// speed thresholds for their resolution.
struct EnvOptions {
  std::optional<double> resolution;
  std::optional<double> d_min;
  std::optional<double> d_max;
};

/// '#' occupied, '.' free, one lattice row per line, first line at the top
/// (largest y).
OccupancyGrid parse_text_map(const std::string& text, double resolution = 0.0);
/// 8-bit PGM (P2 or P5); pixels < 128 are occupied.
OccupancyGrid parse_pgm_map(const std::string& bytes, double resolution = 0.0);
PlanarArm parse_arm_config(const std::string& text);

/// Dispatches on extension: .txt/.map text grids, .pgm images, .arm arm
/// configs. Arm configs may carry d_min / d_max keys.
Environment load_environment(const std::filesystem::path& path, const EnvOptions& opts = {});

std::string read_file(const std::filesystem::path& path);

}  // namespace eiknet
