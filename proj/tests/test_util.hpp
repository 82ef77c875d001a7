#pragma once

#include <filesystem>
#include <string>

#include "eiknet/env_io.hpp"
#include "eiknet/environment.hpp"

namespace eiknet::test {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(EIKNET_FIXTURE_DIR) / name;
}

/// Lattice built from rows given top to bottom, h = 1, origin 0.
inline OccupancyGrid grid_from_rows(const std::string& text) {
  return parse_text_map(text, 1.0);
}

inline Environment grid_env(const std::string& text, double d_min, double d_max) {
  OccupancyGrid g = grid_from_rows(text);
  return Environment(std::move(g), SpeedParams{d_min, d_max});
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("eiknet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace eiknet::test
