#include "eiknet/adam.hpp"

#include <cmath>

#include "eiknet/error.hpp"

namespace eiknet::ad {

void adam_step(ParamStore& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamOptions& opts) {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (grad.size() != n || state.m.size() != n || state.v.size() != n)
    throw Error("optimizer state does not match parameters");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(grad[i]))
      throw Error("gradient blowup in " + params.owner(static_cast<std::size_t>(i)));

  ++state.step;
  state.m = opts.beta1 * state.m + (1.0 - opts.beta1) * grad;
  state.v = opts.beta2 * state.v + (1.0 - opts.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  auto& theta = params.values();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[static_cast<std::size_t>(i)] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
  }
}

}  // namespace eiknet::ad
