#include "eiknet/eval.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>

#include "eiknet/config_file.hpp"
#include "eiknet/error.hpp"

namespace eiknet {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace

std::string provenance(const std::string& config_text, std::uint64_t seed) {
  std::ostringstream os;
  os << "eiknet " << kVersion << " eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
     << EIGEN_MINOR_VERSION << " config " << fnv1a_hex(config_text) << " seed " << seed;
  return os.str();
}

void BenchmarkSpec::validate() const {
  if (!std::filesystem::exists(env_file)) throw Error("fixture not found: " + env_file.string());
  if (n_pairs < 1) throw Error("need at least one query pair");
  if (seeds.empty()) throw Error("need at least one seed");
}

std::vector<std::pair<Config, Config>> random_free_pairs(const Environment& env, std::size_t n,
                                                         std::uint64_t seed) {
  const auto pts = sample_free_configurations(env, 2 * n, seed);
  std::vector<std::pair<Config, Config>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(pts[2 * i], pts[2 * i + 1]);
  return out;
}

MethodRow summarize(const std::string& method, const std::vector<PlanResult>& results,
                    const Environment& env, double sub_step) {
  MethodRow row;
  row.method = method;
  row.samples = results.size();
  std::vector<double> times, lengths;
  for (const auto& r : results) {
    times.push_back(r.wall_time);
    if (r.success && validate_path(r.waypoints, env, sub_step).valid) {
      ++row.successes;
      lengths.push_back(r.path_length);
    }
  }
  row.success_rate =
      row.samples ? 100.0 * static_cast<double>(row.successes) / static_cast<double>(row.samples) : 0.0;
  std::tie(row.time_mean, row.time_std) = mean_std(times);
  std::tie(row.length_mean, row.length_std) = mean_std(lengths);
  return row;
}

PlannerComparison compare_planners(const Environment& env, const CostField& field,
                                   const std::vector<std::pair<Config, Config>>& pairs,
                                   const MpcConfig& mpc) {
  PlannerComparison out;
  const GradientPlanConfig gcfg = gradient_config_from(mpc);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    MpcConfig c = mpc;
    c.seed = mpc.seed + i;
    out.mpc.push_back(mpc_plan(pairs[i].first, pairs[i].second, field, env, c));
    out.gradient.push_back(gradient_plan(pairs[i].first, pairs[i].second, field, env, gcfg));
  }
  out.table.rows.push_back(summarize("mpc", out.mpc, env, mpc.sub_step));
  out.table.rows.push_back(summarize("gradient", out.gradient, env, mpc.sub_step));
  out.table.goal_tolerance = mpc.goal_tolerance;
  return out;
}

std::string metrics_csv(const MetricsTable& t, const std::string& provenance_line) {
  std::ostringstream os;
  os << "# " << provenance_line << "\n";
  os << "# goal_tolerance=" << num(t.goal_tolerance);
  if (t.mae) os << " mae=" << num(*t.mae);
  os << "\n";
  os << "method,samples,successes,success_rate,time_mean,time_std,length_mean,length_std\n";
  for (const auto& r : t.rows)
    os << r.method << ',' << r.samples << ',' << r.successes << ',' << num(r.success_rate) << ','
       << num(r.time_mean) << ',' << num(r.time_std) << ',' << num(r.length_mean) << ','
       << num(r.length_std) << "\n";
  return os.str();
}

std::string plan_to_json(const PlanResult& r) {
  nlohmann::ordered_json j;
  j["success"] = r.success;
  j["status"] = r.status;
  j["path_length"] = r.path_length;
  j["wall_time"] = r.wall_time;
  j["waypoint_count"] = r.waypoints.size();
  auto wp = nlohmann::ordered_json::array();
  for (const auto& q : r.waypoints) wp.push_back(std::vector<double>(q.data(), q.data() + q.size()));
  j["waypoints"] = wp;
  j["cost_trace"] = r.cost_trace;
  return j.dump(2) + "\n";
}

std::string waypoints_csv(const std::vector<Config>& waypoints) {
  std::ostringstream os;
  const Eigen::Index d = waypoints.empty() ? 0 : waypoints.front().size();
  for (Eigen::Index k = 0; k < d; ++k) os << (k ? "," : "") << 'q' << k;
  os << "\n";
  for (const auto& q : waypoints) {
    for (Eigen::Index k = 0; k < d; ++k) os << (k ? "," : "") << num(q[k]);
    os << "\n";
  }
  return os.str();
}

std::vector<std::size_t> spurious_minima(const GridField& field, const std::vector<std::uint8_t>& free,
                                         std::size_t goal_index, double depth) {
  const GridShape& s = field.shape;
  if (free.size() != s.count()) throw Error("mask does not match lattice");
  std::vector<std::size_t> out;
  const int kz = s.dims == 3 ? 1 : 0;
  for (std::size_t idx = 0; idx < s.count(); ++idx) {
    if (!free[idx] || idx == goal_index || !std::isfinite(field[idx])) continue;
    const auto c = s.coords(idx);
    bool interior = true, minimum = true;
    int neighbours = 0;
    for (int dz = -kz; dz <= kz && minimum; ++dz)
      for (int dy = -1; dy <= 1 && minimum; ++dy)
        for (int dx = -1; dx <= 1 && minimum; ++dx) {
          if (!dx && !dy && !dz) continue;
          const int x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
          if (x < 0 || y < 0 || z < 0 || x >= s.size[0] || y >= s.size[1] || z >= s.size[2]) {
            interior = false;
            continue;
          }
          const std::size_t n = s.index(x, y, z);
          if (!free[n]) continue;
          ++neighbours;
          if (!(field[n] - field[idx] > depth)) minimum = false;
        }
    if (interior && minimum && neighbours > 0) out.push_back(idx);
  }
  return out;
}

}  // namespace eiknet
