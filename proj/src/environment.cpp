#include "eiknet/environment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "eiknet/error.hpp"

namespace eiknet {

void SpeedParams::validate() const {
  if (!(d_min > 0.0 && d_min < d_max)) throw Error("speed params need 0 < d_min < d_max");
}

Environment::Environment(OccupancyGrid grid, SpeedParams params)
    : geometry_(std::move(grid)), speed_(params) {
  speed_.validate();
  const auto& g = std::get<OccupancyGrid>(geometry_);
  if (g.occupied.size() != g.shape.count() || g.clearance.values.size() != g.shape.count() ||
      !(g.clearance.shape == g.shape))
    throw Error("occupancy and clearance lattices differ in shape");
  lower_ = g.shape.lower();
  upper_ = g.shape.upper();
}

Environment::Environment(PlanarArm arm, SpeedParams params)
    : geometry_(std::move(arm)), speed_(params) {
  speed_.validate();
  const auto& a = std::get<PlanarArm>(geometry_);
  a.validate();
  lower_ = Eigen::Map<const Config>(a.joint_lo.data(), a.dof());
  upper_ = Eigen::Map<const Config>(a.joint_hi.data(), a.dof());
}

SpeedParams Environment::default_speed(const OccupancyGrid& grid) {
  const double d_max = 5.0 * grid.shape.h;
  return {0.2 * d_max, d_max};
}

SpeedParams Environment::default_speed(const PlanarArm& arm) {
  const double d_max = 0.2 * arm.total_length();
  return {0.2 * d_max, d_max};
}

bool Environment::contains(const Config& q) const {
  if (q.size() != dof()) return false;
  return (q.array() >= lower_.array()).all() && (q.array() <= upper_.array()).all();
}

Config Environment::clamp(const Config& q) const { return q.cwiseMax(lower_).cwiseMin(upper_); }

const OccupancyGrid& Environment::grid() const {
  if (!is_grid()) throw Error("environment is not grid-backed");
  return std::get<OccupancyGrid>(geometry_);
}

const PlanarArm& Environment::arm() const {
  if (is_grid()) throw Error("environment is not an arm");
  return std::get<PlanarArm>(geometry_);
}

double Environment::d_obs(const Config& q) const {
  if (!contains(q)) throw Error("out of domain");
  if (is_grid()) return std::get<OccupancyGrid>(geometry_).clearance.interpolate(q);
  return std::get<PlanarArm>(geometry_).clearance(q);
}

double Environment::d_obs(const Config& q, Config& gradient) const {
  if (!contains(q)) throw Error("out of domain");
  if (is_grid()) {
    const double d = std::get<OccupancyGrid>(geometry_).clearance.interpolate(q, gradient);
    if (!std::isfinite(d)) gradient = Config::Zero(dof());
    return d;
  }
  return std::get<PlanarArm>(geometry_).clearance(q, &gradient);
}

double Environment::speed(const Config& q) const {
  return std::clamp(d_obs(q) / speed_.d_max, speed_.lower_speed(), 1.0);
}

double Environment::speed(const Config& q, Config& gradient) const {
  Config dg;
  const double d = d_obs(q, dg);
  const double s = d / speed_.d_max;
  if (s <= speed_.lower_speed() || s >= 1.0) {
    gradient = Config::Zero(dof());
    return std::clamp(s, speed_.lower_speed(), 1.0);
  }
  gradient = dg / speed_.d_max;
  return s;
}

Config Environment::speed_gradient(const Config& q) const {
  Config g;
  speed(q, g);
  return g;
}

std::vector<Config> sample_free_configurations(const Environment& env, std::size_t n,
                                               std::uint64_t seed) {
  if (n == 0) throw Error("sample count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Config span = env.upper() - env.lower();
  std::vector<Config> out;
  out.reserve(n);
  std::size_t trials = 0;
  constexpr std::size_t kCheckAfter = 1'000'000;
  while (out.size() < n) {
    Config q(env.dof());
    for (int d = 0; d < env.dof(); ++d) q[d] = env.lower()[d] + unit(rng) * span[d];
    ++trials;
    if (env.d_obs(q) > 0.0) out.push_back(std::move(q));
    if (trials == kCheckAfter && out.size() * 1000 < trials)
      throw Error("free space too small");
  }
  return out;
}

}  // namespace eiknet
