#include "eiknet/arm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "eiknet/error.hpp"

namespace eiknet {

double PlanarArm::total_length() const {
  return std::accumulate(link_lengths.begin(), link_lengths.end(), 0.0);
}

void PlanarArm::validate() const {
  if (link_lengths.empty()) throw Error("arm needs at least one link");
  if (joint_lo.size() != link_lengths.size() || joint_hi.size() != link_lengths.size())
    throw Error("joint limit count must match link count");
  for (double l : link_lengths)
    if (!(l > 0.0)) throw Error("link lengths must be positive");
  for (std::size_t i = 0; i < joint_lo.size(); ++i)
    if (!(joint_lo[i] < joint_hi[i])) throw Error("joint limits need lo < hi");
  for (const auto& o : obstacles) {
    if (const auto* d = std::get_if<Disc>(&o); d && !(d->radius > 0.0))
      throw Error("disc radius must be positive");
    if (const auto* b = std::get_if<Box>(&o); b && !(b->lo.array() < b->hi.array()).all())
      throw Error("box needs lo < hi");
  }
}

std::vector<Eigen::Vector2d> PlanarArm::forward_kinematics(const Config& q) const {
  if (q.size() != dof()) throw Error("configuration size does not match arm");
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(link_lengths.size() + 1);
  pts.push_back(base);
  double phi = 0.0;
  for (int i = 0; i < dof(); ++i) {
    phi += q[i];
    pts.push_back(pts.back() + link_lengths[i] * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
  }
  return pts;
}

namespace {

// Closest point on [a, b] to c as a segment parameter.
double project(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return 0.0;
  return std::clamp((c - a).dot(ab) / len2, 0.0, 1.0);
}

Eigen::Vector2d clamp_to_box(const Eigen::Vector2d& p, const Box& box) {
  return p.cwiseMax(box.lo).cwiseMin(box.hi);
}

bool segment_hits_box(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Box& box) {
  // Slab clipping.
  double t0 = 0.0, t1 = 1.0;
  const Eigen::Vector2d d = b - a;
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (a[k] < box.lo[k] || a[k] > box.hi[k]) return false;
      continue;
    }
    double ta = (box.lo[k] - a[k]) / d[k];
    double tb = (box.hi[k] - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

SegmentDistance segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                 const Obstacle& obstacle) {
  SegmentDistance out;
  if (const auto* disc = std::get_if<Disc>(&obstacle)) {
    out.t = project(a, b, disc->center);
    const Eigen::Vector2d p = a + out.t * (b - a);
    const Eigen::Vector2d r = p - disc->center;
    const double n = r.norm();
    out.distance = std::max(0.0, n - disc->radius);
    if (n > 0.0) out.normal = r / n;
    return out;
  }
  const Box& box = std::get<Box>(obstacle);
  if (segment_hits_box(a, b, box)) return out;

  double best = kInf;
  auto consider = [&](double t, const Eigen::Vector2d& on_box) {
    const Eigen::Vector2d p = a + t * (b - a);
    const Eigen::Vector2d r = p - on_box;
    const double n = r.norm();
    if (n < best) {
      best = n;
      out.t = t;
      out.normal = r / n;
    }
  };
  consider(0.0, clamp_to_box(a, box));
  consider(1.0, clamp_to_box(b, box));
  const std::array<Eigen::Vector2d, 4> corners{
      box.lo, Eigen::Vector2d(box.hi.x(), box.lo.y()), box.hi,
      Eigen::Vector2d(box.lo.x(), box.hi.y())};
  for (const auto& c : corners) consider(project(a, b, c), c);
  out.distance = best;
  return out;
}

double PlanarArm::clearance(const Config& q, Config* gradient) const {
  const auto pts = forward_kinematics(q);
  if (gradient) *gradient = Config::Zero(dof());
  if (obstacles.empty()) return kInf;

  double best = kInf;
  int best_link = -1;
  SegmentDistance best_sd;
  for (int i = 0; i < dof(); ++i) {
    for (const auto& o : obstacles) {
      const SegmentDistance sd = segment_distance(pts[i], pts[i + 1], o);
      if (sd.distance < best) {
        best = sd.distance;
        best_link = i;
        best_sd = sd;
      }
    }
  }
  if (best <= 0.0) return 0.0;
  if (gradient) {
    const Eigen::Vector2d p = pts[best_link] + best_sd.t * (pts[best_link + 1] - pts[best_link]);
    for (int j = 0; j <= best_link; ++j) {
      const Eigen::Vector2d r = p - pts[j];
      (*gradient)[j] = best_sd.normal.dot(Eigen::Vector2d(-r.y(), r.x()));
    }
  }
  return best;
}

}  // namespace eiknet
