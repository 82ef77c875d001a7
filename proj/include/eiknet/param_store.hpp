#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eiknet::ad {

struct ParamEntry {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// All trainable scalars in one flat array; matrices are column-major
/// blocks described by the layout table.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::uint64_t seed) : seed_(seed) {}

  /// Appends a rows x cols block initialised to zero.
  ParamEntry add(const std::string& name, int rows, int cols);

  std::size_t size() const { return values_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<ParamEntry>& layout() const { return layout_; }
  const ParamEntry& entry(const std::string& name) const;
  /// Name of the block holding flat index i.
  const std::string& owner(std::size_t i) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  Eigen::Map<Eigen::MatrixXd> matrix(const ParamEntry& e) {
    return {values_.data() + e.offset, e.rows, e.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> matrix(const ParamEntry& e) const {
    return {values_.data() + e.offset, e.rows, e.cols};
  }

  bool all_finite() const;

 private:
  std::vector<double> values_;
  std::vector<ParamEntry> layout_;
  std::uint64_t seed_ = 0;
};

}  // namespace eiknet::ad
