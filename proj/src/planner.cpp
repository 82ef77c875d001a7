#include "eiknet/planner.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "eiknet/error.hpp"

namespace eiknet {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require_free(const Config& q, const Environment& env, const char* what) {
  if (q.size() != env.dof()) throw Error(std::string(what) + " has the wrong dimension");
  if (!env.contains(q) || !env.is_free(q)) throw Error(std::string(what) + " is not in free space");
}

double cost_at(const CostField& field, const Config& q, const Config& goal) {
  return field.values_to(Eigen::MatrixXd(q.transpose()), goal)[0];
}

bool move_free(const Config& a, const Config& b, const Environment& env, double sub_step) {
  return env.contains(b) && segment_free(a, b, env, sub_step);
}

}  // namespace

void MpcConfig::validate() const {
  if (n_samples < 1 || horizon < 1 || n_rollouts < 1 || max_iterations < 1)
    throw Error("planner counts must be at least 1");
  if (!(step > 0.0) || !(goal_tolerance > 0.0) || !(sigma > 0.0) || !(sub_step > 0.0))
    throw Error("planner lengths must be positive");
  if (!(beta >= 0.0)) throw Error("softmax sharpness must be non-negative");
}

void GradientPlanConfig::validate() const {
  if (max_iterations < 1 || patience < 1) throw Error("planner counts must be at least 1");
  if (!(step > 0.0) || !(goal_tolerance > 0.0) || !(sub_step > 0.0))
    throw Error("planner lengths must be positive");
}

MpcConfig default_mpc_config(const Environment& env, const CostField& field, std::uint64_t seed) {
  MpcConfig c;
  c.step = 0.02 * env.diagonal();
  c.sigma = c.step;
  c.goal_tolerance = 2.0 * c.step;
  c.sub_step = env.is_grid() ? 0.5 * env.grid().shape.h : c.step / 8.0;
  c.seed = seed;
  constexpr std::size_t kPairs = 256;
  const auto pts = sample_free_configurations(env, 2 * kPairs, seed ^ 0x5eedULL);
  Eigen::MatrixXd a(kPairs, env.dof()), b(kPairs, env.dof());
  for (std::size_t i = 0; i < kPairs; ++i) {
    a.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    b.row(static_cast<Eigen::Index>(i)) = pts[kPairs + i].transpose();
  }
  const double mean_t = field.evaluate(a, b).T.mean();
  c.beta = mean_t > 0.0 ? 10.0 / mean_t : 10.0;
  return c;
}

GradientPlanConfig gradient_config_from(const MpcConfig& mpc) {
  GradientPlanConfig g;
  g.step = mpc.step;
  g.max_iterations = mpc.max_iterations;
  g.goal_tolerance = mpc.goal_tolerance;
  g.sub_step = mpc.sub_step;
  return g;
}

PlanResult mpc_plan(const Config& qs, const Config& qg, const CostField& field, const Environment& env,
                    const MpcConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  require_free(qs, env, "start");
  require_free(qg, env, "goal");
  const int d = env.dof();
  const int R = cfg.n_rollouts, N = cfg.n_samples;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  PlanResult res;
  Config q = qs;
  Config mu = Config::Zero(d);
  res.waypoints.push_back(q);
  res.cost_trace.push_back(cost_at(field, q, qg));

  // Proposal u ~ N(mean, sigma^2 I), rescaled to the action length.
  auto propose = [&](const Config& mean, double sigma) {
    Config u(d);
    for (int k = 0; k < d; ++k) u[k] = mean[k] + sigma * normal(rng);
    const double n = u.norm();
    if (n == 0.0) {
      u.setZero();
      u[0] = cfg.step;
      return u;
    }
    return Config(u * (cfg.step / n));
  };

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if ((q - qg).norm() <= cfg.goal_tolerance) {
      res.success = true;
      break;
    }
    Eigen::MatrixXd pos = q.transpose().replicate(R, 1);
    Eigen::MatrixXd mean = mu.transpose().replicate(R, 1);
    Eigen::MatrixXd first = Eigen::MatrixXd::Zero(R, d);
    std::vector<char> alive(static_cast<std::size_t>(R), 1), arrived(static_cast<std::size_t>(R), 0);

    for (int h = 0; h < cfg.horizon; ++h) {
      Eigen::MatrixXd cand(static_cast<Eigen::Index>(R) * N, d);
      std::vector<char> ok(static_cast<std::size_t>(R) * N, 0);
      for (int r = 0; r < R; ++r) {
        if (!alive[r] || arrived[r]) continue;
        const Config p = pos.row(r).transpose();
        const Config m = mean.row(r).transpose();
        bool any = false;
        for (int attempt = 0; attempt < 2 && !any; ++attempt) {
          const double sigma = attempt == 0 ? cfg.sigma : 3.0 * cfg.sigma;
          for (int s = 0; s < N; ++s) {
            const Config c = p + propose(m, sigma);
            const std::size_t idx = static_cast<std::size_t>(r) * N + s;
            cand.row(static_cast<Eigen::Index>(idx)) = c.transpose();
            ok[idx] = move_free(p, c, env, cfg.sub_step);
            any = any || ok[idx];
          }
        }
        if (!any) alive[r] = 0;
      }
      // One batched evaluation for every free candidate of every rollout.
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < ok.size(); ++i)
        if (ok[i] && alive[i / N] && !arrived[i / N]) rows.push_back(static_cast<Eigen::Index>(i));
      if (rows.empty()) break;
      Eigen::MatrixXd batch(static_cast<Eigen::Index>(rows.size()), d);
      for (std::size_t i = 0; i < rows.size(); ++i) batch.row(static_cast<Eigen::Index>(i)) = cand.row(rows[i]);
      const Eigen::VectorXd t = field.values_to(batch, qg);
      Eigen::VectorXd cost = Eigen::VectorXd::Constant(cand.rows(), kInf);
      for (std::size_t i = 0; i < rows.size(); ++i) cost[rows[i]] = t[static_cast<Eigen::Index>(i)];

      for (int r = 0; r < R; ++r) {
        if (!alive[r] || arrived[r]) continue;
        const Config p = pos.row(r).transpose();
        const auto seg = cost.segment(static_cast<Eigen::Index>(r) * N, N);
        Eigen::Index best = 0;
        const double tmin = seg.minCoeff(&best);
        Config avg = Config::Zero(d);
        double wsum = 0.0;
        for (int s = 0; s < N; ++s) {
          if (!std::isfinite(seg[s])) continue;
          const double w = std::exp(-cfg.beta * (seg[s] - tmin));
          avg += w * (cand.row(static_cast<Eigen::Index>(r) * N + s).transpose() - p);
          wsum += w;
        }
        Config action = avg / wsum;
        const double len = action.norm();
        const Config fallback = cand.row(static_cast<Eigen::Index>(r) * N + best).transpose() - p;
        if (len > 0.0) {
          action *= cfg.step / len;
          if (!move_free(p, p + action, env, cfg.sub_step)) action = fallback;
        } else {
          action = fallback;
        }
        pos.row(r) += action.transpose();
        mean.row(r) = action.transpose();
        if (h == 0) first.row(r) = action.transpose();
        if ((pos.row(r).transpose() - qg).norm() <= cfg.goal_tolerance) arrived[r] = 1;
      }
    }

    std::vector<Eigen::Index> live;
    for (int r = 0; r < R; ++r)
      if (alive[r] && first.row(r).squaredNorm() > 0.0) live.push_back(r);
    if (live.empty()) {
      res.status = "all candidates in collision";
      break;
    }
    Eigen::MatrixXd ends(static_cast<Eigen::Index>(live.size()), d);
    for (std::size_t i = 0; i < live.size(); ++i) ends.row(static_cast<Eigen::Index>(i)) = pos.row(live[i]);
    const Eigen::VectorXd final_cost = field.values_to(ends, qg);
    Eigen::Index pick = 0;
    final_cost.minCoeff(&pick);
    const Config action = first.row(live[static_cast<std::size_t>(pick)]).transpose();
    q += action;
    mu = action;
    res.waypoints.push_back(q);
    res.cost_trace.push_back(cost_at(field, q, qg));
  }
  if (!res.success && (q - qg).norm() <= cfg.goal_tolerance) res.success = true;
  if (!res.success && res.status.empty()) res.status = "iteration cap reached";
  if (res.success) res.status.clear();
  res.path_length = path_length(res.waypoints);
  res.wall_time = seconds_since(t0);
  return res;
}

PlanResult gradient_plan(const Config& qs, const Config& qg, const CostField& field,
                         const Environment& env, const GradientPlanConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  require_free(qs, env, "start");
  require_free(qg, env, "goal");
  PlanResult res;
  Config q = qs;
  res.waypoints.push_back(q);
  double best = kInf;
  int since_best = 0;
  for (int iter = 0;; ++iter) {
    const FieldEvaluation e = field.evaluate(q, qg);
    res.cost_trace.push_back(e.T);
    if ((q - qg).norm() <= cfg.goal_tolerance) {
      res.success = true;
      break;
    }
    if (iter >= cfg.max_iterations) {
      res.status = "iteration cap reached";
      break;
    }
    if (e.T < best) {
      best = e.T;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      res.status = "stalled";
      break;
    }
    const double gn = e.grad_qs.norm();
    if (!(gn > kGradientGuard)) {
      res.status = "stalled";
      break;
    }
    const Config next = q - cfg.step * e.grad_qs / gn;
    if (!move_free(q, next, env, cfg.sub_step)) {
      res.status = "collision";
      break;
    }
    q = next;
    res.waypoints.push_back(q);
  }
  res.path_length = path_length(res.waypoints);
  res.wall_time = seconds_since(t0);
  return res;
}

}  // namespace eiknet
