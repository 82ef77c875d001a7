#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "eiknet/arm.hpp"
#include "eiknet/grid.hpp"

namespace eiknet {

/// Clearance thresholds of the ground-truth speed field, world units.
struct SpeedParams {
  double d_min = 0.0;
  double d_max = 1.0;

  void validate() const;
  double lower_speed() const { return d_min / d_max; }
};

/// Obstacle geometry plus the speed field derived from it. Configuration
/// space is a box: the lattice extent for grids, the joint limits for arms.
class Environment {
 public:
  Environment(OccupancyGrid grid, SpeedParams params);
  Environment(PlanarArm arm, SpeedParams params);

  /// d_max = 5 h, d_min = 0.2 d_max.
  static SpeedParams default_speed(const OccupancyGrid& grid);
  /// d_max = 0.2 * total arm length, d_min = 0.2 d_max.
  static SpeedParams default_speed(const PlanarArm& arm);

  int dof() const { return static_cast<int>(lower_.size()); }
  const Config& lower() const { return lower_; }
  const Config& upper() const { return upper_; }
  double diagonal() const { return (upper_ - lower_).norm(); }
  bool contains(const Config& q) const;
  Config clamp(const Config& q) const;

  bool is_grid() const { return std::holds_alternative<OccupancyGrid>(geometry_); }
  const OccupancyGrid& grid() const;
  const PlanarArm& arm() const;
  const SpeedParams& speed_params() const { return speed_; }

  /// Obstacle clearance at q; throws "out of domain" outside the box.
  double d_obs(const Config& q) const;
  double d_obs(const Config& q, Config& gradient) const;
  bool is_free(const Config& q) const { return d_obs(q) > 0.0; }

  /// clip(d_obs / d_max, d_min / d_max, 1).
  double speed(const Config& q) const;
  /// Exact gradient of speed(); zero wherever the clip is active.
  Config speed_gradient(const Config& q) const;
  double speed(const Config& q, Config& gradient) const;

 private:
  std::variant<OccupancyGrid, PlanarArm> geometry_;
  SpeedParams speed_;
  Config lower_;
  Config upper_;
};

/// n uniform samples from the box, rejection-filtered to d_obs > 0.
/// Throws "free space too small" when the acceptance rate stays below 0.1%
/// over 10^6 trials.
std::vector<Config> sample_free_configurations(const Environment& env, std::size_t n,
                                               std::uint64_t seed);

}  // namespace eiknet
