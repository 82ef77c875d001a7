#include "eiknet/tape.hpp"

#include <cmath>

#include "eiknet/error.hpp"

namespace eiknet::ad {

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::Softplus:
      return std::max(x, 0.0) + std::log(1.0 + std::exp(-std::abs(x)));
    case Activation::Sine:
      return std::sin(x);
  }
  return 0.0;
}

double activate_d1(Activation kind, double x) {
  switch (kind) {
    case Activation::Softplus:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Activation::Sine:
      return std::cos(x);
  }
  return 0.0;
}

double activate_d2(Activation kind, double x) {
  switch (kind) {
    case Activation::Softplus: {
      const double s = activate_d1(kind, x);
      return s * (1.0 - s);
    }
    case Activation::Sine:
      return -std::sin(x);
  }
  return 0.0;
}

void activate_batch(Activation kind, const Matrix& x, Matrix& y, Matrix* d1, Matrix* d2) {
  switch (kind) {
    case Activation::Softplus: {
      // One exp per element: e = exp(-|x|) gives both the log term and the
      // logistic. log(1 + e) rather than log1p vectorizes; the difference is
      // below 1e-16 absolute.
      const Eigen::ArrayXXd e = (-x.array().abs()).exp();
      y = (x.array().max(0.0) + (1.0 + e).log()).matrix();
      if (d1 || d2) {
        const Eigen::ArrayXXd inv = 1.0 / (1.0 + e);
        const Eigen::ArrayXXd s = (x.array() >= 0.0).select(inv, e * inv);
        if (d1) *d1 = s.matrix();
        if (d2) *d2 = (s * (1.0 - s)).matrix();
      }
      return;
    }
    case Activation::Sine: {
      y.resize(x.rows(), x.cols());
      if (d1) d1->resize(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double sn, cs;
        ::sincos(x.data()[i], &sn, &cs);
        y.data()[i] = sn;
        if (d1) d1->data()[i] = cs;
      }
      if (d2) *d2 = -y;
      return;
    }
  }
}

Tape::Node Tape::push(Entry e) {
  if (sealed_) throw Error("tape is sealed");
  nodes_.push_back(std::move(e));
  return nodes_.size() - 1;
}

Tape::Node Tape::constant(DualBatch x) {
  Entry e;
  e.value = std::move(x);
  return push(std::move(e));
}

Tape::Node Tape::dense(Node x, const ParamEntry& weight, const ParamEntry& bias) {
  const DualBatch& in = value(x);
  if (in.width() != weight.rows || bias.rows != 1 || bias.cols != weight.cols)
    throw Error("dense layer shape mismatch");
  const auto w = params_->matrix(weight);
  const auto b = params_->matrix(bias);

  Entry e;
  e.value.batch = in.batch;
  e.value.tangents = in.tangents;
  e.value.data.noalias() = in.data * w;
  e.value.values().rowwise() += b.row(0);
  e.inputs = {x};
  e.needs_grad = true;
  const bool input_grad = nodes_[x].needs_grad;
  const int batch = in.batch;
  const ParamEntry we = weight, be = bias;
  const ParamStore* params = params_;
  // nodes_ may reallocate while recording; look the input up by index.
  const Node xi = x;
  const std::vector<Entry>* nodes = &nodes_;
  e.backward = [we, be, batch, params, input_grad, xi, nodes](
                   const Matrix& adj, std::vector<Matrix*>& in_adj, Eigen::VectorXd& grad) {
    const Matrix& xin = (*nodes)[xi].value.data;
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + we.offset, we.rows, we.cols);
    gw.noalias() += xin.transpose() * adj;
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + be.offset, be.cols);
    gb += adj.topRows(batch).colwise().sum();
    if (input_grad && in_adj[0]) in_adj[0]->noalias() += adj * params->matrix(we).transpose();
  };
  return push(std::move(e));
}

Tape::Node Tape::activation(Node x, Activation kind) {
  const DualBatch& in = value(x);
  const int n = in.batch, k = in.tangents;
  Entry e;
  e.value = DualBatch(n, k, in.width());
  const auto v = in.values();
  Matrix y, d1, d2;
  activate_batch(kind, v, y, &d1, k > 0 ? &d2 : nullptr);
  e.value.values() = y;
  for (int j = 0; j < k; ++j) e.value.tangent(j) = d1.cwiseProduct(in.tangent(j));
  e.inputs = {x};
  e.needs_grad = nodes_[x].needs_grad;
  const std::vector<Entry>* nodes = &nodes_;
  const Node xi = x;
  e.backward = [d1 = std::move(d1), d2 = std::move(d2), n, k, nodes, xi](
                   const Matrix& adj, std::vector<Matrix*>& in_adj, Eigen::VectorXd&) {
    if (!in_adj[0]) return;
    Matrix& ia = *in_adj[0];
    const DualBatch& xin = (*nodes)[xi].value;
    ia.topRows(n) += adj.topRows(n).cwiseProduct(d1);
    for (int j = 0; j < k; ++j) {
      const auto tadj = adj.middleRows(static_cast<Eigen::Index>(n) * (1 + j), n);
      ia.topRows(n) += tadj.cwiseProduct(d2).cwiseProduct(xin.tangent(j));
      ia.middleRows(static_cast<Eigen::Index>(n) * (1 + j), n) += tadj.cwiseProduct(d1);
    }
  };
  return push(std::move(e));
}

Tape::Node Tape::add(Node x, Node y) {
  const DualBatch& a = value(x);
  const DualBatch& b = value(y);
  if (a.batch != b.batch || a.tangents != b.tangents || a.width() != b.width())
    throw Error("add shape mismatch");
  Entry e;
  e.value = a;
  e.value.data += b.data;
  e.inputs = {x, y};
  e.needs_grad = nodes_[x].needs_grad || nodes_[y].needs_grad;
  e.backward = [](const Matrix& adj, std::vector<Matrix*>& in_adj, Eigen::VectorXd&) {
    for (Matrix* m : in_adj)
      if (m) *m += adj;
  };
  return push(std::move(e));
}

Tape::Node Tape::custom(std::vector<Node> inputs, DualBatch value, Backward backward) {
  Entry e;
  e.value = std::move(value);
  e.needs_grad = false;
  for (Node i : inputs) {
    if (i >= nodes_.size()) throw Error("custom op refers to a future node");
    e.needs_grad = e.needs_grad || nodes_[i].needs_grad;
  }
  e.inputs = std::move(inputs);
  e.backward = std::move(backward);
  return push(std::move(e));
}

Eigen::VectorXd Tape::reverse_sweep(Node loss) const {
  if (!sealed_) throw Error("tape is not sealed");
  if (loss >= nodes_.size()) throw Error("unknown loss node");
  const Matrix& lv = nodes_[loss].value.data;
  if (lv.rows() != 1 || lv.cols() != 1) throw Error("loss node is not scalar");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params_->size()));
  std::vector<Matrix> adj(nodes_.size());
  std::vector<char> live(nodes_.size(), 0);
  adj[loss] = Matrix::Ones(1, 1);
  live[loss] = 1;
  std::vector<Matrix*> in_adj;
  for (std::size_t i = loss + 1; i-- > 0;) {
    if (!live[i] || !nodes_[i].needs_grad || !nodes_[i].backward) continue;
    const Entry& e = nodes_[i];
    in_adj.assign(e.inputs.size(), nullptr);
    for (std::size_t j = 0; j < e.inputs.size(); ++j) {
      const Node in = e.inputs[j];
      if (!nodes_[in].needs_grad) continue;
      if (!live[in]) {
        adj[in] = Matrix::Zero(nodes_[in].value.data.rows(), nodes_[in].value.data.cols());
        live[in] = 1;
      }
      in_adj[j] = &adj[in];
    }
    e.backward(adj[i], in_adj, grad);
    adj[i] = Matrix();  // release early
  }
  return grad;
}

}  // namespace eiknet::ad
