#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "eiknet/param_store.hpp"

namespace eiknet::ad {

using Matrix = Eigen::MatrixXd;

/// A batch of values carrying forward-mode tangents with respect to the
/// configuration inputs. Everything lives in one matrix so that a dense
/// layer is a single product: rows [0, batch) hold values and rows
/// [batch * (1 + k), batch * (2 + k)) hold the tangent along input k.
struct DualBatch {
  Matrix data;
  int batch = 0;
  int tangents = 0;

  DualBatch() = default;
  DualBatch(int batch_, int tangents_, int width)
      : data(Matrix::Zero(static_cast<Eigen::Index>(batch_) * (1 + tangents_), width)),
        batch(batch_),
        tangents(tangents_) {}

  int width() const { return static_cast<int>(data.cols()); }
  auto values() { return data.topRows(batch); }
  auto values() const { return data.topRows(batch); }
  auto tangent(int k) { return data.middleRows(static_cast<Eigen::Index>(batch) * (1 + k), batch); }
  auto tangent(int k) const {
    return data.middleRows(static_cast<Eigen::Index>(batch) * (1 + k), batch);
  }
};

enum class Activation { Softplus, Sine };

/// Elementwise activation with its first two derivatives. Only C2 kinds are
/// offered: losses on input gradients differentiate act' again.
double activate(Activation kind, double x);
double activate_d1(Activation kind, double x);
double activate_d2(Activation kind, double x);
/// Batched form of the above; d1 / d2 may be null. This is what the tape
/// and the values-only paths use.
void activate_batch(Activation kind, const Matrix& x, Matrix& y, Matrix* d1, Matrix* d2);

/// Records a fixed sequence of batch operations and sweeps it backwards to
/// produce d(loss)/d(theta). Tangent computations are recorded like any other
/// value, so the sweep differentiates through input gradients as well.
class Tape {
 public:
  using Node = std::size_t;
  /// Receives the adjoint of the node's output and accumulates into the
  /// adjoints of its inputs (null for inputs that need none) and into the
  /// flat parameter gradient.
  using Backward = std::function<void(const Matrix& adjoint, std::vector<Matrix*>& input_adjoints,
                                      Eigen::VectorXd& param_grad)>;

  explicit Tape(const ParamStore& params) : params_(&params) {}
  // Backward closures refer to this tape's node list.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradient (inputs, frozen buffers).
  Node constant(DualBatch x);
  Node dense(Node x, const ParamEntry& weight, const ParamEntry& bias);
  Node activation(Node x, Activation kind);
  Node add(Node x, Node y);
  /// Arbitrary op; `value` must already be computed from the inputs.
  Node custom(std::vector<Node> inputs, DualBatch value, Backward backward);

  const DualBatch& value(Node n) const { return nodes_.at(n).value; }
  std::size_t size() const { return nodes_.size(); }
  const ParamStore& params() const { return *params_; }

  void seal() { sealed_ = true; }
  bool sealed() const { return sealed_; }

  /// One reverse sweep from a 1x1 loss node. Throws on an unsealed tape or a
  /// non-scalar loss.
  Eigen::VectorXd reverse_sweep(Node loss) const;

 private:
  struct Entry {
    DualBatch value;
    std::vector<Node> inputs;
    Backward backward;
    bool needs_grad = false;
  };
  Node push(Entry e);

  const ParamStore* params_;
  std::vector<Entry> nodes_;
  bool sealed_ = false;
};

}  // namespace eiknet::ad
