#include "eiknet/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "eiknet/error.hpp"

namespace eiknet {

using ad::DualBatch;
using ad::Matrix;
using Node = ad::Tape::Node;

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::L1Linf: return "l1linf";
    case HeadKind::Factorized: return "factorized";
    case HeadKind::Euclidean: return "euclidean";
  }
  return "?";
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "l1linf") return HeadKind::L1Linf;
  if (s == "factorized") return HeadKind::Factorized;
  if (s == "euclidean") return HeadKind::Euclidean;
  throw Error("unknown head kind '" + s + "'");
}

std::string to_string(ad::Activation kind) {
  return kind == ad::Activation::Sine ? "sine" : "softplus";
}

ad::Activation activation_from_string(const std::string& s) {
  if (s == "softplus") return ad::Activation::Softplus;
  if (s == "sine") return ad::Activation::Sine;
  throw Error("unknown activation '" + s + "'");
}

void ModelConfig::validate() const {
  if (dof < 1) throw Error("model dof must be positive");
  if (a < 1 || b < 1) throw Error("metric head needs a >= 1 and b >= 1");
  if (width < 1 || depth < 1 || encoding_features < 1) throw Error("model sizes must be positive");
  if (!(encoding_sigma > 0.0)) throw Error("encoding sigma must be positive");
}

ModelConfig ModelConfig::from_keys(const KeyValueFile& kv, int dof) {
  ModelConfig c;
  c.dof = dof;
  c.head = head_kind_from_string(kv.get("model.head", to_string(c.head)));
  c.a = static_cast<int>(kv.get_int("model.a", c.a));
  c.b = static_cast<int>(kv.get_int("model.b", c.b));
  c.width = static_cast<int>(kv.get_int("model.width", c.width));
  c.depth = static_cast<int>(kv.get_int("model.depth", c.depth));
  c.encoding_features = static_cast<int>(kv.get_int("model.features", c.encoding_features));
  c.encoding_sigma = kv.get_double("model.sigma", c.encoding_sigma);
  c.activation = activation_from_string(kv.get("model.activation", to_string(c.activation)));
  c.validate();
  return c;
}

void ModelConfig::to_keys(KeyValueFile& kv) const {
  kv.set("model.head", to_string(head));
  kv.set("model.a", std::to_string(a));
  kv.set("model.b", std::to_string(b));
  kv.set("model.width", std::to_string(width));
  kv.set("model.depth", std::to_string(depth));
  kv.set("model.features", std::to_string(encoding_features));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", encoding_sigma);
  kv.set("model.sigma", buf);
  kv.set("model.activation", to_string(activation));
}

double metric_distance(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                       const Eigen::Ref<const Eigen::RowVectorXd>& y, int a, int b) {
  if (x.size() != static_cast<Eigen::Index>(a) * b || y.size() != x.size())
    throw Error("latent shape mismatch");
  double total = 0.0;
  for (int i = 0; i < a; ++i) {
    double best = 0.0;
    for (int j = 0; j < b; ++j) best = std::max(best, std::abs(x[i * b + j] - y[i * b + j]));
    total += best;
  }
  return total;
}

Config optimal_action(const FieldEvaluation& eval, Endpoint at) {
  const Config& g = at == Endpoint::Start ? eval.grad_qs : eval.grad_qg;
  const double n = g.norm();
  if (!(n > kGradientGuard)) throw Error("degenerate gradient");
  return -g / n;
}

FieldEvaluation make_evaluation(const PairValues& pv, int row) {
  FieldEvaluation e;
  e.T = pv.T[row];
  e.grad_qs = pv.grad_qs.row(row).transpose();
  e.grad_qg = pv.grad_qg.row(row).transpose();
  e.speed_qs = 1.0 / std::max(e.grad_qs.norm(), kGradientGuard);
  e.speed_qg = 1.0 / std::max(e.grad_qg.norm(), kGradientGuard);
  return e;
}

DualBatch positional_encoding(const Eigen::MatrixXd& q, const Eigen::MatrixXd& B,
                              const Config& lower, const Config& extent, bool tangents) {
  const int n = static_cast<int>(q.rows());
  const int d = static_cast<int>(q.cols());
  const int m = static_cast<int>(B.cols());
  if (B.rows() != d || lower.size() != d || extent.size() != d)
    throw Error("positional encoding shape mismatch");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Matrix scaled = B;
  for (int k = 0; k < d; ++k) scaled.row(k) *= two_pi / extent[k];
  const Matrix angle = (q.rowwise() - lower.transpose()) * scaled;
  Matrix s(angle.rows(), angle.cols()), c(angle.rows(), angle.cols());
  for (Eigen::Index i = 0; i < angle.size(); ++i) ::sincos(angle.data()[i], s.data() + i, c.data() + i);
  DualBatch out(n, tangents ? d : 0, 2 * m);
  out.values().leftCols(m) = s;
  out.values().rightCols(m) = c;
  if (tangents) {
    for (int k = 0; k < d; ++k) {
      out.tangent(k).leftCols(m) = c.array().rowwise() * scaled.row(k).array();
      out.tangent(k).rightCols(m) = -(s.array().rowwise() * scaled.row(k).array());
    }
  }
  return out;
}

TravelTimeModel::TravelTimeModel(ModelConfig cfg, Config lower, Config upper)
    : cfg_(cfg), lower_(std::move(lower)), upper_(std::move(upper)), params_(cfg.seed) {
  cfg_.validate();
  if (lower_.size() != cfg_.dof || upper_.size() != cfg_.dof)
    throw Error("domain does not match model dof");
  extent_ = upper_ - lower_;
  if ((extent_.array() <= 0.0).any()) throw Error("domain box must have positive extent");
  init_params();
}

TravelTimeModel::TravelTimeModel(ModelConfig cfg, Config lower, Config upper,
                                 ad::ParamStore params, Eigen::MatrixXd encoding)
    : cfg_(cfg),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      params_(std::move(params)),
      encoding_(std::move(encoding)) {
  cfg_.validate();
  extent_ = upper_ - lower_;
  if (encoding_.rows() != cfg_.dof || encoding_.cols() != cfg_.encoding_features)
    throw Error("encoding matrix does not match model config");
  const int hidden = cfg_.depth;
  for (int l = 0; l < hidden; ++l) {
    const std::string name = l == 0 ? "input" : "block" + std::to_string(l);
    weights_.push_back(params_.entry(name + ".W"));
    biases_.push_back(params_.entry(name + ".b"));
  }
  weights_.push_back(params_.entry("output.W"));
  biases_.push_back(params_.entry("output.b"));
  const int in_width = 2 * cfg_.encoding_features;
  if (weights_.front().rows != in_width || weights_.front().cols != cfg_.width ||
      weights_.back().cols != cfg_.latent_width())
    throw Error("checkpoint layout does not match model config");
}

void TravelTimeModel::init_params() {
  std::mt19937_64 rng(cfg_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  encoding_.resize(cfg_.dof, cfg_.encoding_features);
  for (Eigen::Index i = 0; i < encoding_.size(); ++i)
    encoding_.data()[i] = cfg_.encoding_sigma * normal(rng);

  auto layer = [&](const std::string& name, int fan_in, int fan_out) {
    weights_.push_back(params_.add(name + ".W", fan_in, fan_out));
    biases_.push_back(params_.add(name + ".b", 1, fan_out));
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uni(-limit, limit);
    auto w = params_.matrix(weights_.back());
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uni(rng);
  };
  layer("input", 2 * cfg_.encoding_features, cfg_.width);
  for (int l = 1; l < cfg_.depth; ++l) layer("block" + std::to_string(l), cfg_.width, cfg_.width);
  layer("output", cfg_.width, cfg_.latent_width());

  // Metric and Euclidean heads are 1-homogeneous in the output weights, so
  // one rescale puts the mean |grad T| of the fresh network at 1 (unit
  // speed). Without it T starts tens of times too large and the causality
  // weights vanish.
  if (cfg_.head == HeadKind::Factorized) return;
  constexpr int kProbe = 256;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd qs(kProbe, cfg_.dof), qg(kProbe, cfg_.dof);
  for (int r = 0; r < kProbe; ++r)
    for (int k = 0; k < cfg_.dof; ++k) {
      qs(r, k) = lower_[k] + extent_[k] * unit(rng);
      qg(r, k) = lower_[k] + extent_[k] * unit(rng);
    }
  const PairValues pv = evaluate(qs, qg);
  const double mean_grad =
      0.5 * (pv.grad_qs.rowwise().norm().mean() + pv.grad_qg.rowwise().norm().mean());
  if (mean_grad > 0.0 && std::isfinite(mean_grad)) params_.matrix(weights_.back()) /= mean_grad;
}

Node TravelTimeModel::encode(ad::Tape& tape, const Eigen::MatrixXd& q, bool tangents) const {
  if (q.cols() != cfg_.dof) throw Error("configuration batch has wrong dof");
  Node x = tape.constant(positional_encoding(q, encoding_, lower_, extent_, tangents));
  x = tape.activation(tape.dense(x, weights_[0], biases_[0]), cfg_.activation);
  for (int l = 1; l < cfg_.depth; ++l)
    x = tape.add(x, tape.activation(tape.dense(x, weights_[l], biases_[l]), cfg_.activation));
  return tape.dense(x, weights_.back(), biases_.back());
}

Eigen::MatrixXd TravelTimeModel::latent(const Eigen::MatrixXd& q) const {
  if (q.cols() != cfg_.dof) throw Error("configuration batch has wrong dof");
  const DualBatch pe = positional_encoding(q, encoding_, lower_, extent_, false);
  Matrix pre = pe.data * params_.matrix(weights_[0]);
  pre.rowwise() += params_.matrix(biases_[0]).row(0);
  Matrix x, y;
  ad::activate_batch(cfg_.activation, pre, x, nullptr, nullptr);
  for (int l = 1; l < cfg_.depth; ++l) {
    pre.noalias() = x * params_.matrix(weights_[l]);
    pre.rowwise() += params_.matrix(biases_[l]).row(0);
    ad::activate_batch(cfg_.activation, pre, y, nullptr, nullptr);
    x += y;
  }
  y.noalias() = x * params_.matrix(weights_.back());
  y.rowwise() += params_.matrix(biases_.back()).row(0);
  return y;
}

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Eigen::Index trow(const DualBatch& v, int k, int off, int r) {
  return static_cast<Eigen::Index>(v.batch) * (1 + k) + off + r;
}

Node l1linf_head(ad::Tape& tape, Node sn, int s_off, Node gn, int g_off, int n, bool grads,
                 int a, int b, int d) {
  const DualBatch& S = tape.value(sn);
  const DualBatch& G = tape.value(gn);
  DualBatch out(n, 0, grads ? 1 + 2 * d : 1);
  std::vector<int> arg(static_cast<std::size_t>(n) * a);
  std::vector<double> sgn(static_cast<std::size_t>(n) * a);
  for (int r = 0; r < n; ++r) {
    double total = 0.0;
    for (int i = 0; i < a; ++i) {
      double best = -1.0, s = 0.0;
      int bj = 0;
      for (int j = 0; j < b; ++j) {
        const double diff = S.data(s_off + r, i * b + j) - G.data(g_off + r, i * b + j);
        if (std::abs(diff) > best) {
          best = std::abs(diff);
          bj = j;
          s = sign_of(diff);
        }
      }
      total += best;
      arg[static_cast<std::size_t>(r) * a + i] = bj;
      sgn[static_cast<std::size_t>(r) * a + i] = s;
      if (grads) {
        const int c = i * b + bj;
        for (int k = 0; k < d; ++k) {
          out.data(r, 1 + k) += s * S.data(trow(S, k, s_off, r), c);
          out.data(r, 1 + d + k) -= s * G.data(trow(G, k, g_off, r), c);
        }
      }
    }
    out.data(r, 0) = total;
  }
  const int sb = S.batch, gb = G.batch;
  return tape.custom(
      {sn, gn}, std::move(out),
      [arg = std::move(arg), sgn = std::move(sgn), s_off, g_off, n, grads, a, b, d, sb, gb](
          const Matrix& adj, std::vector<Matrix*>& in, Eigen::VectorXd&) {
        Matrix* sa = in[0];
        Matrix* ga = in[1];
        for (int r = 0; r < n; ++r) {
          for (int i = 0; i < a; ++i) {
            const std::size_t idx = static_cast<std::size_t>(r) * a + i;
            const double s = sgn[idx];
            if (s == 0.0) continue;
            const int c = i * b + arg[idx];
            if (sa) (*sa)(s_off + r, c) += s * adj(r, 0);
            if (ga) (*ga)(g_off + r, c) -= s * adj(r, 0);
            if (!grads) continue;
            for (int k = 0; k < d; ++k) {
              if (sa) (*sa)(static_cast<Eigen::Index>(sb) * (1 + k) + s_off + r, c) += s * adj(r, 1 + k);
              if (ga)
                (*ga)(static_cast<Eigen::Index>(gb) * (1 + k) + g_off + r, c) -= s * adj(r, 1 + d + k);
            }
          }
        }
      });
}

Node euclidean_head(ad::Tape& tape, Node sn, int s_off, Node gn, int g_off, int n, bool grads,
                    int d) {
  const DualBatch& S = tape.value(sn);
  const DualBatch& G = tape.value(gn);
  const int L = S.width();
  DualBatch out(n, 0, grads ? 1 + 2 * d : 1);
  Matrix u(n, L);
  Eigen::VectorXd dist(n);
  for (int r = 0; r < n; ++r) {
    const Eigen::RowVectorXd diff = S.data.row(s_off + r) - G.data.row(g_off + r);
    const double D = diff.norm();
    dist[r] = D;
    u.row(r) = D > 0.0 ? Eigen::RowVectorXd(diff / D) : Eigen::RowVectorXd::Zero(L);
    out.data(r, 0) = D;
    if (grads)
      for (int k = 0; k < d; ++k) {
        out.data(r, 1 + k) = u.row(r).dot(S.data.row(trow(S, k, s_off, r)));
        out.data(r, 1 + d + k) = -u.row(r).dot(G.data.row(trow(G, k, g_off, r)));
      }
  }
  const int sb = S.batch, gb = G.batch;
  // The input nodes may move once the output is pushed, so copy the tangents.
  Matrix st, gt;
  if (grads) {
    st.resize(static_cast<Eigen::Index>(n) * d, L);
    gt.resize(static_cast<Eigen::Index>(n) * d, L);
    for (int k = 0; k < d; ++k) {
      st.middleRows(static_cast<Eigen::Index>(n) * k, n) = S.data.middleRows(trow(S, k, s_off, 0), n);
      gt.middleRows(static_cast<Eigen::Index>(n) * k, n) = G.data.middleRows(trow(G, k, g_off, 0), n);
    }
  }
  return tape.custom(
      {sn, gn}, std::move(out),
      [u = std::move(u), dist = std::move(dist), st = std::move(st), gt = std::move(gt), s_off,
       g_off, n, grads, d, sb, gb](const Matrix& adj, std::vector<Matrix*>& in, Eigen::VectorXd&) {
        Matrix* sa = in[0];
        Matrix* ga = in[1];
        for (int r = 0; r < n; ++r) {
          if (dist[r] == 0.0) continue;
          Eigen::RowVectorXd rbar = adj(r, 0) * u.row(r);
          if (grads) {
            Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(u.cols());
            for (int k = 0; k < d; ++k) {
              const Eigen::Index row = static_cast<Eigen::Index>(n) * k + r;
              v += adj(r, 1 + k) * st.row(row) - adj(r, 1 + d + k) * gt.row(row);
              if (sa) sa->row(static_cast<Eigen::Index>(sb) * (1 + k) + s_off + r) += adj(r, 1 + k) * u.row(r);
              if (ga)
                ga->row(static_cast<Eigen::Index>(gb) * (1 + k) + g_off + r) -= adj(r, 1 + d + k) * u.row(r);
            }
            rbar += (v - u.row(r) * u.row(r).dot(v)) / dist[r];
          }
          if (sa) sa->row(s_off + r) += rbar;
          if (ga) ga->row(g_off + r) -= rbar;
        }
      });
}

Node factorized_head(ad::Tape& tape, Node sn, int s_off, Node gn, int g_off, int n, bool grads,
                     int d, const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) {
  const DualBatch& S = tape.value(sn);
  const DualBatch& G = tape.value(gn);
  if (qs.rows() != n || qg.rows() != n) throw Error("factorized head needs raw configurations");
  DualBatch out(n, 0, grads ? 1 + 2 * d : 1);
  for (int r = 0; r < n; ++r) {
    const Eigen::RowVectorXd delta = qs.row(r) - qg.row(r);
    const double rho = delta.norm();
    const double E = std::exp(-(S.data(s_off + r, 0) + G.data(g_off + r, 0)));
    const double T = rho * E;
    out.data(r, 0) = T;
    if (!grads) continue;
    for (int k = 0; k < d; ++k) {
      const double uk = rho > 0.0 ? delta[k] / rho : 0.0;
      out.data(r, 1 + k) = E * uk - T * S.data(trow(S, k, s_off, r), 0);
      out.data(r, 1 + d + k) = -E * uk - T * G.data(trow(G, k, g_off, r), 0);
    }
  }
  const int sb = S.batch, gb = G.batch;
  Matrix outv = out.data;
  return tape.custom({sn, gn}, std::move(out),
                     [outv = std::move(outv), s_off, g_off, n, grads, d, sb, gb](
                         const Matrix& adj, std::vector<Matrix*>& in, Eigen::VectorXd&) {
                       Matrix* sa = in[0];
                       Matrix* ga = in[1];
                       for (int r = 0; r < n; ++r) {
                         const double T = outv(r, 0);
                         double hbar = -T * adj(r, 0);
                         if (grads)
                           for (int k = 0; k < d; ++k)
                             hbar -= adj(r, 1 + k) * outv(r, 1 + k) + adj(r, 1 + d + k) * outv(r, 1 + d + k);
                         if (sa) (*sa)(s_off + r, 0) += hbar;
                         if (ga) (*ga)(g_off + r, 0) += hbar;
                         if (!grads) continue;
                         for (int k = 0; k < d; ++k) {
                           if (sa) (*sa)(static_cast<Eigen::Index>(sb) * (1 + k) + s_off + r, 0) -= T * adj(r, 1 + k);
                           if (ga) (*ga)(static_cast<Eigen::Index>(gb) * (1 + k) + g_off + r, 0) -= T * adj(r, 1 + d + k);
                         }
                       }
                     });
}

}  // namespace

Node TravelTimeModel::head(ad::Tape& tape, Node starts, int s_off, Node goals, int g_off, int n,
                           bool gradients, const Eigen::MatrixXd& qs,
                           const Eigen::MatrixXd& qg) const {
  const DualBatch& S = tape.value(starts);
  const DualBatch& G = tape.value(goals);
  const int d = cfg_.dof;
  if (S.width() != cfg_.latent_width() || G.width() != cfg_.latent_width())
    throw Error("latent width mismatch");
  if (s_off + n > S.batch || g_off + n > G.batch) throw Error("head rows out of range");
  if (gradients && (S.tangents != d || G.tangents != d))
    throw Error("head gradients need tangent-carrying latents");
  switch (cfg_.head) {
    case HeadKind::L1Linf:
      return l1linf_head(tape, starts, s_off, goals, g_off, n, gradients, cfg_.a, cfg_.b, d);
    case HeadKind::Euclidean:
      return euclidean_head(tape, starts, s_off, goals, g_off, n, gradients, d);
    case HeadKind::Factorized:
      return factorized_head(tape, starts, s_off, goals, g_off, n, gradients, d, qs, qg);
  }
  throw Error("unknown head");
}

TravelTimeModel::PairGraph TravelTimeModel::forward_pairs(ad::Tape& tape,
                                                          const Eigen::MatrixXd& qs,
                                                          const Eigen::MatrixXd& qg) const {
  if (qs.rows() != qg.rows()) throw Error("start and goal batches differ in size");
  const int n = static_cast<int>(qs.rows());
  Eigen::MatrixXd both(2 * n, cfg_.dof);
  both.topRows(n) = qs;
  both.bottomRows(n) = qg;
  PairGraph g;
  g.latents = encode(tape, both, true);
  g.output = head(tape, g.latents, 0, g.latents, n, n, true, qs, qg);
  return g;
}

PairValues TravelTimeModel::evaluate(const Eigen::MatrixXd& qs, const Eigen::MatrixXd& qg) const {
  ad::Tape tape(params_);
  const PairGraph g = forward_pairs(tape, qs, qg);
  const Matrix& out = tape.value(g.output).data;
  const int d = cfg_.dof;
  PairValues pv;
  pv.T = out.col(0);
  pv.grad_qs = out.middleCols(1, d);
  pv.grad_qg = out.middleCols(1 + d, d);
  for (Eigen::Index r = 0; r < pv.T.size(); ++r)
    if (!std::isfinite(pv.T[r]) || !pv.grad_qs.row(r).allFinite() || !pv.grad_qg.row(r).allFinite())
      throw Error("model diverged");
  return pv;
}

FieldEvaluation TravelTimeModel::evaluate(const Config& qs, const Config& qg) const {
  return make_evaluation(evaluate(Eigen::MatrixXd(qs.transpose()), Eigen::MatrixXd(qg.transpose())), 0);
}

Eigen::VectorXd TravelTimeModel::values_to(const Eigen::MatrixXd& q, const Config& goal,
                                           const Eigen::RowVectorXd& goal_latent) const {
  const Eigen::MatrixXd lat = latent(q);
  const Eigen::Index n = q.rows();
  Eigen::VectorXd out(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    switch (cfg_.head) {
      case HeadKind::L1Linf:
        out[r] = metric_distance(lat.row(r), goal_latent, cfg_.a, cfg_.b);
        break;
      case HeadKind::Euclidean:
        out[r] = (lat.row(r) - goal_latent).norm();
        break;
      case HeadKind::Factorized:
        out[r] = (q.row(r) - goal.transpose()).norm() * std::exp(-(lat(r, 0) + goal_latent[0]));
        break;
    }
  }
  return out;
}

}  // namespace eiknet
