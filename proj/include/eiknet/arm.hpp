#pragma once

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "eiknet/grid.hpp"

namespace eiknet {

struct Disc {
  Eigen::Vector2d center{0.0, 0.0};
  double radius = 0.0;
};

struct Box {
  Eigen::Vector2d lo{0.0, 0.0};
  Eigen::Vector2d hi{0.0, 0.0};
};

using Obstacle = std::variant<Disc, Box>;

/// Planar serial chain with revolute joints. Joint angles are relative to
/// the previous link; the first is measured from the workspace x axis.
struct PlanarArm {
  std::vector<double> link_lengths;
  Eigen::Vector2d base{0.0, 0.0};
  std::vector<double> joint_lo;
  std::vector<double> joint_hi;
  std::vector<Obstacle> obstacles;

  int dof() const { return static_cast<int>(link_lengths.size()); }
  double total_length() const;
  void validate() const;

  /// Joint positions p_0 = base, ..., p_n = end effector (n + 1 points).
  std::vector<Eigen::Vector2d> forward_kinematics(const Config& q) const;

  /// Minimum link-to-obstacle distance, 0 on penetration, +inf without
  /// obstacles. When gradient is non-null it receives the derivative with
  /// respect to the joint angles (zero on penetration). Ties resolve to the
  /// first (link, obstacle) pair in declaration order.
  double clearance(const Config& q, Config* gradient = nullptr) const;
};

/// Distance from segment [a, b] to an obstacle, with the closest point on
/// the segment (as parameter t) and the unit direction from obstacle to
/// segment. Returns 0 when they intersect.
struct SegmentDistance {
  double distance = 0.0;
  double t = 0.0;
  Eigen::Vector2d normal{0.0, 0.0};
};

SegmentDistance segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                 const Obstacle& obstacle);

}  // namespace eiknet
