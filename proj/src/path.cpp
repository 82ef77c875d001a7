#include "eiknet/path.hpp"

#include <cmath>

#include "eiknet/error.hpp"

namespace eiknet {

double path_length(const std::vector<Config>& waypoints) {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
  return len;
}

namespace {

bool free_at(const Config& q, const Environment& env) {
  return env.contains(q) && env.d_obs(q) > 0.0;
}

}  // namespace

PathCheck validate_path(const std::vector<Config>& waypoints, const Environment& env,
                        double sub_step) {
  if (waypoints.empty()) throw Error("path has no waypoints");
  if (!(sub_step > 0.0)) throw Error("sub_step must be positive");
  PathCheck check;
  auto fail = [&](std::size_t seg, double t, const Config& p) {
    check.valid = false;
    check.first_violation = PathViolation{seg, t, p};
    return check;
  };
  if (!free_at(waypoints[0], env)) return fail(0, 0.0, waypoints[0]);
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Config& a = waypoints[i];
    const Config& b = waypoints[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / sub_step)));
    for (int k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      const Config p = a + t * (b - a);
      if (!free_at(p, env)) return fail(i, t, p);
    }
  }
  return check;
}

bool segment_free(const Config& a, const Config& b, const Environment& env, double sub_step) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / sub_step)));
  for (int k = 1; k <= n; ++k)
    if (!free_at(a + (static_cast<double>(k) / n) * (b - a), env)) return false;
  return true;
}

}  // namespace eiknet
