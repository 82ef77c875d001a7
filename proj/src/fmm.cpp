#include "eiknet/fmm.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "eiknet/error.hpp"

namespace eiknet {

GridField speed_lattice(const Environment& env) {
  const OccupancyGrid& g = env.grid();
  const SpeedParams& p = env.speed_params();
  GridField s(g.shape, 0.0);
  for (std::size_t i = 0; i < s.values.size(); ++i)
    s[i] = std::clamp(g.clearance[i] / p.d_max, p.lower_speed(), 1.0);
  return s;
}

std::vector<std::uint8_t> free_mask(const OccupancyGrid& grid) {
  std::vector<std::uint8_t> m(grid.occupied.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = grid.occupied[i] ? 0 : 1;
  return m;
}

namespace {

// Smallest accepted neighbour value along each axis.
std::array<double, 3> upwind_neighbours(const GridShape& s, const GridField& t,
                                        const std::vector<FmmState>& state, std::size_t idx) {
  std::array<double, 3> a{kInf, kInf, kInf};
  const auto c = s.coords(idx);
  for (int d = 0; d < s.dims; ++d) {
    for (int dir : {-1, 1}) {
      auto n = c;
      n[d] += dir;
      if (n[d] < 0 || n[d] >= s.size[d]) continue;
      const std::size_t ni = s.index(n[0], n[1], n[2]);
      if (state[ni] == FmmState::Accepted) a[d] = std::min(a[d], t[ni]);
    }
  }
  return a;
}

double solve_update(std::array<double, 3> a, int dims, double h, double speed) {
  std::sort(a.begin(), a.begin() + dims);
  const double f = h / speed;
  double value = a[0] + f;
  double sum = a[0], sum2 = a[0] * a[0];
  for (int m = 1; m < dims; ++m) {
    if (!std::isfinite(a[m]) || value <= a[m]) break;
    sum += a[m];
    sum2 += a[m] * a[m];
    const double k = m + 1;
    const double disc = sum * sum - k * (sum2 - f * f);
    value = (sum + std::sqrt(std::max(disc, 0.0))) / k;
  }
  return value;
}

}  // namespace

FmmSolution fmm_solve(const GridField& speed, const std::vector<std::uint8_t>& blocked,
                      const Config& source) {
  const GridShape& s = speed.shape;
  if (blocked.size() != s.count()) throw Error("speed and occupancy lattices differ in shape");
  if (!s.contains(source)) throw Error("out of domain");
  FmmSolution sol;
  sol.source = source;
  sol.source_index = s.nearest(source);
  if (blocked[sol.source_index]) throw Error("source in obstacle");
  sol.travel_time = GridField(s, kInf);
  sol.state.assign(s.count(), FmmState::Far);
  sol.accept_order.reserve(s.count());

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  sol.travel_time[sol.source_index] = 0.0;
  sol.state[sol.source_index] = FmmState::Considered;
  heap.emplace(0.0, sol.source_index);

  double last = 0.0;
  while (!heap.empty()) {
    const auto [t, idx] = heap.top();
    heap.pop();
    if (sol.state[idx] == FmmState::Accepted || t != sol.travel_time[idx]) continue;
    if (t < last) throw Error("fast marching lost causality");
    last = t;
    sol.state[idx] = FmmState::Accepted;
    sol.accept_order.push_back(idx);

    const auto c = s.coords(idx);
    for (int d = 0; d < s.dims; ++d) {
      for (int dir : {-1, 1}) {
        auto n = c;
        n[d] += dir;
        if (n[d] < 0 || n[d] >= s.size[d]) continue;
        const std::size_t ni = s.index(n[0], n[1], n[2]);
        if (blocked[ni] || sol.state[ni] == FmmState::Accepted) continue;
        const auto a = upwind_neighbours(s, sol.travel_time, sol.state, ni);
        const double v = solve_update(a, s.dims, s.h, speed[ni]);
        if (v < sol.travel_time[ni]) {
          sol.travel_time[ni] = v;
          sol.state[ni] = FmmState::Considered;
          heap.emplace(v, ni);
        }
      }
    }
  }
  return sol;
}

FmmSolution fmm_solve(const Environment& env, const Config& source) {
  const OccupancyGrid& g = env.grid();
  return fmm_solve(speed_lattice(env), g.occupied, source);
}

double upwind_residual(const FmmSolution& sol, const GridField& speed, std::size_t idx) {
  const GridShape& s = sol.travel_time.shape;
  const double t = sol.travel_time[idx];
  auto a = upwind_neighbours(s, sol.travel_time, sol.state, idx);
  double sum = 0.0;
  for (int d = 0; d < s.dims; ++d)
    if (std::isfinite(a[d]) && t > a[d]) sum += (t - a[d]) * (t - a[d]);
  const double f = s.h / speed[idx];
  return sum - f * f;
}

PlanResult fmm_backtrack(const FmmSolution& sol, const Environment& env, const Config& goal,
                         double step) {
  if (!(step > 0.0)) throw Error("step must be positive");
  const GridField& t = sol.travel_time;
  const GridShape& s = t.shape;
  if (!s.contains(goal)) throw Error("out of domain");
  const double t_goal = t[s.nearest(goal)];
  if (!std::isfinite(t_goal)) throw Error("unreachable");

  // Occupied/unreachable nodes act as a high plateau so descent stays in the
  // reachable region.
  double t_max = 0.0;
  for (double v : t.values)
    if (std::isfinite(v)) t_max = std::max(t_max, v);
  GridField filled = t;
  for (double& v : filled.values)
    if (!std::isfinite(v)) v = t_max + 1.0;

  PlanResult res;
  Config q = goal;
  res.waypoints.push_back(q);
  res.cost_trace.push_back(filled.interpolate(q));
  const long cap = static_cast<long>(std::ceil(4.0 * t_goal / step)) + 10;
  for (long it = 0; it <= cap; ++it) {
    if ((q - sol.source).norm() <= step) {
      if ((q - sol.source).norm() > 0.0) {
        res.waypoints.push_back(sol.source);
        res.cost_trace.push_back(0.0);
      }
      res.success = true;
      break;
    }
    Config grad;
    filled.interpolate(q, grad);
    const double gn = grad.norm();
    if (!(gn > 0.0)) break;
    q = env.clamp(q - step * grad / gn);
    res.waypoints.push_back(q);
    res.cost_trace.push_back(filled.interpolate(q));
  }
  if (!res.success) throw Error("backtrack stalled");
  for (const auto& w : res.waypoints)
    if (!(env.d_obs(w) > 0.0)) throw Error("backtrack left free space");
  res.path_length = path_length(res.waypoints);
  return res;
}

double mae_vs_oracle(const GridField& model, const FmmSolution& oracle,
                     const std::vector<std::uint8_t>& mask) {
  const GridField& t = oracle.travel_time;
  if (!(model.shape == t.shape) || mask.size() != t.values.size())
    throw Error("lattice shapes differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || !std::isfinite(t[i])) continue;
    sum += std::abs(model[i] - t[i]);
    ++n;
  }
  if (n == 0) throw Error("empty mask");
  return sum / static_cast<double>(n);
}

}  // namespace eiknet
