#include "eiknet/field.hpp"

#include <random>

#include "eiknet/error.hpp"

namespace eiknet {

Eigen::VectorXd CostField::values_to(const Eigen::MatrixXd& q, const Config& goal) const {
  const Eigen::MatrixXd goals = goal.transpose().replicate(q.rows(), 1);
  return evaluate(q, goals).T;
}

FieldEvaluation CostField::evaluate(const Config& qs, const Config& qg) const {
  return make_evaluation(evaluate(Eigen::MatrixXd(qs.transpose()), Eigen::MatrixXd(qg.transpose())), 0);
}

PairValues ModelField::evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const {
  return model_->evaluate(qs, qg);
}

Eigen::VectorXd ModelField::values_to(const Eigen::MatrixXd& q, const Config& goal) const {
  const Eigen::MatrixXd g = goal.transpose();
  const Eigen::RowVectorXd gl = model_->latent(g).row(0);
  Eigen::VectorXd t = model_->values_to(q, goal, gl);
  if (!t.allFinite()) throw Error("model diverged");
  return t;
}

PairValues RadialField::evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const {
  if (qs.cols() != dof_ || qg.cols() != dof_ || qs.rows() != qg.rows())
    throw Error("configuration batch has wrong shape");
  PairValues pv;
  const Eigen::Index n = qs.rows();
  pv.T.resize(n);
  pv.grad_qs.setZero(n, dof_);
  pv.grad_qg.setZero(n, dof_);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::RowVectorXd d = qs.row(r) - qg.row(r);
    const double len = d.norm();
    pv.T[r] = scale_ * len;
    if (len > 0.0) {
      pv.grad_qs.row(r) = scale_ * d / len;
      pv.grad_qg.row(r) = -scale_ * d / len;
    }
  }
  return pv;
}

Eigen::VectorXd RadialField::values_to(const Eigen::MatrixXd& q, const Config& goal) const {
  return scale_ * (q.rowwise() - goal.transpose()).rowwise().norm();
}

PairValues FunctionField::evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const {
  if (qs.cols() != dof_ || qg.cols() != dof_ || qs.rows() != qg.rows())
    throw Error("configuration batch has wrong shape");
  PairValues pv;
  const Eigen::Index n = qs.rows();
  pv.T.resize(n);
  pv.grad_qs.resize(n, dof_);
  pv.grad_qg.resize(n, dof_);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Config s = qs.row(r).transpose(), g = qg.row(r).transpose();
    pv.T[r] = fn_(s, g);
    for (int k = 0; k < dof_; ++k) {
      Config a = s, b = s;
      a[k] += step_;
      b[k] -= step_;
      pv.grad_qs(r, k) = (fn_(a, g) - fn_(b, g)) / (2 * step_);
      a = g;
      b = g;
      a[k] += step_;
      b[k] -= step_;
      pv.grad_qg(r, k) = (fn_(s, a) - fn_(s, b)) / (2 * step_);
    }
  }
  return pv;
}

Eigen::VectorXd FunctionField::values_to(const Eigen::MatrixXd& q, const Config& goal) const {
  Eigen::VectorXd t(q.rows());
  for (Eigen::Index r = 0; r < q.rows(); ++r) t[r] = fn_(q.row(r).transpose(), goal);
  return t;
}

TriangleCheck check_triangle_inequality(const CostField& field, const std::vector<Config>& points,
                                        std::size_t triples, std::uint64_t seed, double tol) {
  if (points.size() < 3) throw Error("need at least three points");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  const auto n = static_cast<Eigen::Index>(triples);
  const int d = field.dof();
  Eigen::MatrixXd x(n, d), y(n, d), z(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    x.row(r) = points[pick(rng)].transpose();
    y.row(r) = points[pick(rng)].transpose();
    z.row(r) = points[pick(rng)].transpose();
  }
  const Eigen::VectorXd xz = field.evaluate(x, z).T;
  const Eigen::VectorXd xy = field.evaluate(x, y).T;
  const Eigen::VectorXd yz = field.evaluate(y, z).T;
  TriangleCheck out;
  out.triples = triples;
  for (Eigen::Index r = 0; r < n; ++r) {
    const double excess = xz[r] - (xy[r] + yz[r]);
    if (excess > tol) ++out.violations;
    out.worst_excess = std::max(out.worst_excess, excess);
  }
  return out;
}

GridField travel_time_grid(const CostField& field, const GridShape& shape, const Config& goal) {
  if (field.dof() != shape.dims) throw Error("field and lattice dimensions differ");
  const std::size_t n = shape.count();
  Eigen::MatrixXd q(static_cast<Eigen::Index>(n), shape.dims);
  for (std::size_t i = 0; i < n; ++i) q.row(static_cast<Eigen::Index>(i)) = shape.position(i).transpose();
  GridField out(shape, 0.0);
  // Chunked to bound the latent buffer.
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < q.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, q.rows() - start);
    const Eigen::VectorXd t = field.values_to(q.middleRows(start, len), goal);
    for (Eigen::Index i = 0; i < len; ++i) out.values[static_cast<std::size_t>(start + i)] = t[i];
  }
  return out;
}

}  // namespace eiknet
