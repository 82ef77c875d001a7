#pragma once

#include <cstdint>
#include <optional>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eiknet/environment.hpp"
#include "eiknet/field.hpp"
#include "eiknet/fmm.hpp"
#include "eiknet/planner.hpp"

namespace eiknet {

/// Library version reported in provenance headers.
inline constexpr const char* kVersion = "1.0.0";

/// `eiknet <version> eigen <x.y.z> config <hash> seed <n>`.
std::string provenance(const std::string& config_text, std::uint64_t seed);

struct BenchmarkSpec {
  std::filesystem::path env_file;
  std::size_t n_pairs = 100;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir;

  void validate() const;
};

/// Seeded random (start, goal) pairs from free space.
std::vector<std::pair<Config, Config>> random_free_pairs(const Environment& env, std::size_t n,
                                                         std::uint64_t seed);

struct MethodRow {
  std::string method;
  std::size_t samples = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;  // percent
  double time_mean = 0.0, time_std = 0.0;
  /// Over successful queries only.
  double length_mean = 0.0, length_std = 0.0;
};

struct MetricsTable {
  std::vector<MethodRow> rows;
  /// Set when a grid oracle exists.
  std::optional<double> mae;
  double goal_tolerance = 0.0;
};

/// A success only counts when the path also passes validate_path.
MethodRow summarize(const std::string& method, const std::vector<PlanResult>& results,
                    const Environment& env, double sub_step);

struct PlannerComparison {
  MetricsTable table;
  std::vector<PlanResult> mpc, gradient;
};

PlannerComparison compare_planners(const Environment& env, const CostField& field,
                                   const std::vector<std::pair<Config, Config>>& pairs,
                                   const MpcConfig& mpc);

std::string metrics_csv(const MetricsTable& t, const std::string& provenance_line);

std::string plan_to_json(const PlanResult& r);
std::string waypoints_csv(const std::vector<Config>& waypoints);

/// Free interior nodes (other than `goal_index`) whose value is below every
/// free 8/26-neighbour by more than `depth`.
std::vector<std::size_t> spurious_minima(const GridField& field, const std::vector<std::uint8_t>& free,
                                         std::size_t goal_index, double depth);

}  // namespace eiknet
