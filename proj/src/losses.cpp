#include "eiknet/losses.hpp"

#include <cmath>

#include "eiknet/error.hpp"

namespace eiknet {

void LossWeights::validate() const {
  if (lambda_e < 0 || lambda_td < 0 || lambda_n < 0 || lambda_c < 0)
    throw Error("loss weights must be non-negative");
  if (!(dt > 0.0)) throw Error("TD step must be positive");
}

LossWeights LossWeights::narrow_passage() {
  LossWeights w;
  w.dt = 0.005;
  w.lambda_n = 2e-4;
  return w;
}

TrainBatch make_batch(const Environment& env, const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) {
  if (qs.rows() != qg.rows() || qs.cols() != env.dof() || qg.cols() != env.dof())
    throw Error("batch shape mismatch");
  const Eigen::Index n = qs.rows();
  TrainBatch b;
  b.qs = qs;
  b.qg = qg;
  b.speed_s.resize(n);
  b.speed_g.resize(n);
  b.dspeed_s.resize(n, env.dof());
  b.dspeed_g.resize(n, env.dof());
  Config grad;
  for (Eigen::Index r = 0; r < n; ++r) {
    const Config s = qs.row(r).transpose(), g = qg.row(r).transpose();
    if (!env.is_free(s) || !env.is_free(g)) throw Error("batch endpoint outside free space");
    b.speed_s[r] = env.speed(s, grad);
    b.dspeed_s.row(r) = grad.transpose();
    b.speed_g[r] = env.speed(g, grad);
    b.dspeed_g.row(r) = grad.transpose();
  }
  return b;
}

TrainBatch sample_batch(const Environment& env, int n, std::uint64_t seed) {
  if (n < 1) throw Error("batch size must be positive");
  const auto pts = sample_free_configurations(env, 2 * static_cast<std::size_t>(n), seed);
  Eigen::MatrixXd qs(n, env.dof()), qg(n, env.dof());
  for (int r = 0; r < n; ++r) {
    qs.row(r) = pts[static_cast<std::size_t>(r)].transpose();
    qg.row(r) = pts[static_cast<std::size_t>(n + r)].transpose();
  }
  return make_batch(env, qs, qg);
}

double eikonal_term(double speed_star, const Eigen::Ref<const Eigen::RowVectorXd>& grad) {
  const double m = std::max(grad.norm(), kGradientGuard);
  const double q = std::sqrt(speed_star * m);
  return (q - 1.0) * (q - 1.0);
}

double td_residual(double T, double dt, double speed_star, double T_stepped) {
  return T - dt / speed_star - T_stepped;
}

bool normal_term(double speed_star, const Eigen::Ref<const Eigen::RowVectorXd>& grad,
                 const Eigen::Ref<const Eigen::RowVectorXd>& dspeed, double& term) {
  const double dn = dspeed.norm();
  if (dn < kFlatSpeedGradient) {
    term = 0.0;
    return false;
  }
  term = (1.0 - speed_star) * (speed_star * grad + dspeed / dn).squaredNorm();
  return true;
}

double causality_weight(double T, double lambda_c) { return std::exp(-lambda_c * T); }

Eigen::VectorXd causality_weights(const Eigen::VectorXd& T, double lambda_c) {
  return T.unaryExpr([lambda_c](double t) { return causality_weight(t, lambda_c); });
}

Eigen::MatrixXd step_and_clamp(const Eigen::MatrixXd& q, const Eigen::MatrixXd& u, double dt,
                               const Config& lower, const Config& upper) {
  Eigen::MatrixXd out = q + dt * u;
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    out.row(r) = out.row(r).cwiseMax(lower.transpose()).cwiseMin(upper.transpose());
  return out;
}

Eigen::MatrixXd optimal_actions(const Eigen::MatrixXd& grad) {
  Eigen::MatrixXd u(grad.rows(), grad.cols());
  for (Eigen::Index r = 0; r < grad.rows(); ++r) {
    const double n = grad.row(r).norm();
    if (!(n > kGradientGuard)) throw Error("degenerate gradient");
    u.row(r) = -grad.row(r) / n;
  }
  return u;
}

namespace {

Eigen::RowVectorXd eikonal_grad(double s, const Eigen::Ref<const Eigen::RowVectorXd>& g) {
  const double m = g.norm();
  if (!(m > kGradientGuard)) return Eigen::RowVectorXd::Zero(g.size());
  const double q = std::sqrt(s * m);
  return ((q - 1.0) * s / (q * m)) * g;
}

Eigen::RowVectorXd normal_grad(double s, const Eigen::Ref<const Eigen::RowVectorXd>& g,
                               const Eigen::Ref<const Eigen::RowVectorXd>& ds) {
  const double dn = ds.norm();
  if (dn < kFlatSpeedGradient) return Eigen::RowVectorXd::Zero(g.size());
  return (2.0 * (1.0 - s) * s) * (s * g + ds / dn);
}

struct Combined {
  LossReport report;
  // Adjoints of the objective with respect to the field outputs.
  Eigen::VectorXd dT, dT_goal_step, dT_start_step;
  Eigen::MatrixXd dgs, dgg;
};

/// Per-sample terms in a fixed order; `t_goal_step` is T(q_s, q_g'),
/// `t_start_step` is T(q_s', q_g). Null TD inputs leave the TD term out.
Combined combine(const TrainBatch& b, const PairValues& pv, const Eigen::VectorXd* t_goal_step,
                 const Eigen::VectorXd* t_start_step, const LossWeights& w, bool adjoints) {
  const int n = b.size();
  const Eigen::Index d = pv.grad_qs.cols();
  const bool with_td = t_goal_step != nullptr;
  const bool with_n = w.lambda_n > 0.0;
  Combined c;
  if (adjoints) {
    c.dT = Eigen::VectorXd::Zero(n);
    c.dT_goal_step = Eigen::VectorXd::Zero(n);
    c.dT_start_step = Eigen::VectorXd::Zero(n);
    c.dgs = Eigen::MatrixXd::Zero(n, d);
    c.dgg = Eigen::MatrixXd::Zero(n, d);
  }
  double sum_e = 0.0, sum_td = 0.0, sum_n = 0.0, total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double T = pv.T[i];
    const double le = eikonal_term(b.speed_s[i], pv.grad_qs.row(i)) +
                      eikonal_term(b.speed_g[i], pv.grad_qg.row(i));
    double ltd = 0.0, rs = 0.0, rg = 0.0;
    if (with_td) {
      rg = td_residual(T, w.dt, b.speed_g[i], (*t_goal_step)[i]);
      rs = td_residual(T, w.dt, b.speed_s[i], (*t_start_step)[i]);
      ltd = rg * rg + rs * rs;
    }
    double ln = 0.0;
    if (with_n) {
      double ts = 0.0, tg = 0.0;
      if (!normal_term(b.speed_s[i], pv.grad_qs.row(i), b.dspeed_s.row(i), ts)) ++c.report.normal_skipped;
      if (!normal_term(b.speed_g[i], pv.grad_qg.row(i), b.dspeed_g.row(i), tg)) ++c.report.normal_skipped;
      ln = ts + tg;
    }
    const double wi = causality_weight(T, w.lambda_c);
    const double term = (w.lambda_e * le + w.lambda_td * ltd + w.lambda_n * ln) * wi;
    if (!std::isfinite(term)) throw Error("loss blowup at batch index " + std::to_string(i));
    sum_e += le;
    sum_td += ltd;
    sum_n += ln;
    total += term;
    if (!adjoints) continue;
    const double scale = wi / n;
    c.dgs.row(i) = scale * w.lambda_e * eikonal_grad(b.speed_s[i], pv.grad_qs.row(i));
    c.dgg.row(i) = scale * w.lambda_e * eikonal_grad(b.speed_g[i], pv.grad_qg.row(i));
    if (with_n) {
      c.dgs.row(i) += scale * w.lambda_n * normal_grad(b.speed_s[i], pv.grad_qs.row(i), b.dspeed_s.row(i));
      c.dgg.row(i) += scale * w.lambda_n * normal_grad(b.speed_g[i], pv.grad_qg.row(i), b.dspeed_g.row(i));
    }
    if (with_td) {
      c.dT[i] = scale * w.lambda_td * 2.0 * (rg + rs);
      c.dT_goal_step[i] = -scale * w.lambda_td * 2.0 * rg;
      c.dT_start_step[i] = -scale * w.lambda_td * 2.0 * rs;
    }
  }
  c.report.eikonal = sum_e / n;
  c.report.td = with_td ? sum_td / n : std::nan("");
  c.report.normal = with_n ? sum_n / n : std::nan("");
  c.report.total = total / n;
  return c;
}

struct Stepped {
  Eigen::MatrixXd qs_step, qg_step;
};

Stepped stepped_points(const TrainBatch& b, const PairValues& pv, const Environment& env, double dt) {
  Stepped s;
  s.qs_step = step_and_clamp(b.qs, optimal_actions(pv.grad_qs), dt, env.lower(), env.upper());
  s.qg_step = step_and_clamp(b.qg, optimal_actions(pv.grad_qg), dt, env.lower(), env.upper());
  return s;
}

}  // namespace

double loss_eikonal(const TrainBatch& batch, const CostField& field) {
  LossWeights w;
  w.lambda_e = 1.0;
  w.lambda_td = w.lambda_n = w.lambda_c = 0.0;
  return combine(batch, field.evaluate(batch.qs, batch.qg), nullptr, nullptr, w, false).report.eikonal;
}

double loss_td(const TrainBatch& batch, const CostField& field, const Environment& env, double dt) {
  if (!(dt > 0.0)) throw Error("TD step must be positive");
  const PairValues pv = field.evaluate(batch.qs, batch.qg);
  const Stepped s = stepped_points(batch, pv, env, dt);
  const Eigen::VectorXd tg = field.evaluate(batch.qs, s.qg_step).T;
  const Eigen::VectorXd ts = field.evaluate(s.qs_step, batch.qg).T;
  LossWeights w;
  w.lambda_n = 0.0;
  w.dt = dt;
  return combine(batch, pv, &tg, &ts, w, false).report.td;
}

double loss_normal(const TrainBatch& batch, const CostField& field, std::size_t* skipped) {
  LossWeights w;
  w.lambda_n = 1.0;
  const Combined c = combine(batch, field.evaluate(batch.qs, batch.qg), nullptr, nullptr, w, false);
  if (skipped) *skipped = c.report.normal_skipped;
  return c.report.normal;
}

LossReport evaluate_objective(const TrainBatch& batch, const CostField& field,
                              const Environment& env, const LossWeights& w) {
  w.validate();
  const PairValues pv = field.evaluate(batch.qs, batch.qg);
  if (w.lambda_td > 0.0) {
    const Stepped s = stepped_points(batch, pv, env, w.dt);
    const Eigen::VectorXd tg = field.evaluate(batch.qs, s.qg_step).T;
    const Eigen::VectorXd ts = field.evaluate(s.qs_step, batch.qg).T;
    return combine(batch, pv, &tg, &ts, w, false).report;
  }
  return combine(batch, pv, nullptr, nullptr, w, false).report;
}

Objective record_objective(ad::Tape& tape, const TravelTimeModel& model, const TrainBatch& batch,
                           const Environment& env, const LossWeights& w) {
  w.validate();
  const int n = batch.size();
  const int d = model.config().dof;
  const auto graph = model.forward_pairs(tape, batch.qs, batch.qg);
  PairValues pv;
  {
    const ad::Matrix& out = tape.value(graph.output).data;
    pv.T = out.col(0);
    pv.grad_qs = out.middleCols(1, d);
    pv.grad_qg = out.middleCols(1 + d, d);
  }

  std::vector<ad::Tape::Node> inputs{graph.output};
  Combined c;
  if (w.lambda_td > 0.0) {
    const Stepped s = stepped_points(batch, pv, env, w.dt);
    Eigen::MatrixXd both(2 * n, d);
    both.topRows(n) = s.qs_step;
    both.bottomRows(n) = s.qg_step;
    const auto lat = model.encode(tape, both, false);
    const auto goal_step = model.head(tape, graph.latents, 0, lat, n, n, false, batch.qs, s.qg_step);
    const auto start_step = model.head(tape, lat, 0, graph.latents, n, n, false, s.qs_step, batch.qg);
    const Eigen::VectorXd tg = tape.value(goal_step).data.col(0);
    const Eigen::VectorXd ts = tape.value(start_step).data.col(0);
    c = combine(batch, pv, &tg, &ts, w, true);
    inputs.push_back(goal_step);
    inputs.push_back(start_step);
  } else {
    c = combine(batch, pv, nullptr, nullptr, w, true);
  }

  ad::DualBatch value(1, 0, 1);
  value.data(0, 0) = c.report.total;
  const bool td = inputs.size() == 3;
  auto node = tape.custom(
      inputs, std::move(value),
      [c = std::move(c), n, d, td](const ad::Matrix& adj, std::vector<ad::Matrix*>& in, Eigen::VectorXd&) {
        const double a = adj(0, 0);
        if (in[0]) {
          ad::Matrix& m = *in[0];
          if (td) m.col(0).head(n) += a * c.dT;
          m.block(0, 1, n, d) += a * c.dgs;
          m.block(0, 1 + d, n, d) += a * c.dgg;
        }
        if (td && in[1]) in[1]->col(0).head(n) += a * c.dT_goal_step;
        if (td && in[2]) in[2]->col(0).head(n) += a * c.dT_start_step;
      });
  return {node, c.report};
}

}  // namespace eiknet
