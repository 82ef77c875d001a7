#pragma once

#include <Eigen/Core>

#include "eiknet/param_store.hpp"

namespace eiknet::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  explicit AdamState(std::size_t n = 0)
      : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
        v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}
};

/// One bias-corrected adaptive-moment update. A non-finite gradient entry
/// throws "gradient blowup in <parameter name>" before anything is modified.
void adam_step(ParamStore& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamOptions& opts);

}  // namespace eiknet::ad
