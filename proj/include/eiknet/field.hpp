#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "eiknet/grid.hpp"
#include "eiknet/model.hpp"

namespace eiknet {

/// Anything that yields a travel time T(q_s, q_g) with endpoint gradients.
/// Losses, planners and evaluation code are written against this so that
/// analytic fields can stand in for a trained model.
class CostField {
 public:
  virtual ~CostField() = default;
  virtual int dof() const = 0;
  /// Row r of qs / qg is one pair.
  virtual PairValues evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const = 0;
  /// T(q_r, goal) for every row; no gradients.
  virtual Eigen::VectorXd values_to(const Eigen::MatrixXd& q, const Config& goal) const;

  FieldEvaluation evaluate(const Config& qs, const Config& qg) const;
};

class ModelField final : public CostField {
 public:
  explicit ModelField(const TravelTimeModel& model) : model_(&model) {}
  int dof() const override { return model_->config().dof; }
  PairValues evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const override;
  Eigen::VectorXd values_to(const Eigen::MatrixXd& q, const Config& goal) const override;
  using CostField::evaluate;

  const TravelTimeModel& model() const { return *model_; }

 private:
  const TravelTimeModel* model_;
};

/// T = scale * |q_s - q_g|: the exact solution for constant speed 1 / scale.
class RadialField final : public CostField {
 public:
  explicit RadialField(int dof, double scale = 1.0) : dof_(dof), scale_(scale) {}
  int dof() const override { return dof_; }
  PairValues evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const override;
  Eigen::VectorXd values_to(const Eigen::MatrixXd& q, const Config& goal) const override;
  using CostField::evaluate;

 private:
  int dof_;
  double scale_;
};

/// User-supplied T with central-difference gradients.
class FunctionField final : public CostField {
 public:
  using Fn = std::function<double(const Config& qs, const Config& qg)>;
  FunctionField(int dof, Fn fn, double fd_step = 1e-6)
      : dof_(dof), fn_(std::move(fn)), step_(fd_step) {}
  int dof() const override { return dof_; }
  PairValues evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const override;
  Eigen::VectorXd values_to(const Eigen::MatrixXd& q, const Config& goal) const override;
  using CostField::evaluate;

 private:
  int dof_;
  Fn fn_;
  double step_;
};

/// Triples (x, y, z) drawn from `points` (seeded) for which
/// T(x, z) > T(x, y) + T(y, z) + tol.
struct TriangleCheck {
  std::size_t triples = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;
};
TriangleCheck check_triangle_inequality(const CostField& field, const std::vector<Config>& points,
                                        std::size_t triples, std::uint64_t seed, double tol);

/// T(q, goal) sampled at every lattice node.
GridField travel_time_grid(const CostField& field, const GridShape& shape, const Config& goal);

}  // namespace eiknet
