#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eiknet/environment.hpp"

namespace eiknet {

struct PlanResult {
  std::vector<Config> waypoints;
  bool success = false;
  double path_length = 0.0;
  double wall_time = 0.0;
  /// Cost-to-go at each committed waypoint.
  std::vector<double> cost_trace;
  /// Empty on success; otherwise why planning stopped.
  std::string status;
};

double path_length(const std::vector<Config>& waypoints);

struct PathViolation {
  std::size_t segment = 0;  ///< waypoint index the segment starts from
  double t = 0.0;           ///< position along the segment in [0, 1]
  Config point;
};

struct PathCheck {
  bool valid = true;
  std::optional<PathViolation> first_violation;
};

/// Every waypoint and every point sampled at most sub_step apart along each
/// segment must have d_obs > 0 (and lie inside the configuration box).
PathCheck validate_path(const std::vector<Config>& waypoints, const Environment& env,
                        double sub_step);

/// Segment check used by the planners.
bool segment_free(const Config& a, const Config& b, const Environment& env, double sub_step);

}  // namespace eiknet
