#pragma once

#include <cmath>
#include <stdexcept>

#include "scrl/mdp/finite_mdp.hpp"

namespace scrl::diff {

// Adam moment accumulators for one flat parameter vector.
template <typename Scalar = double>
struct AdamStateT {
  VectorX<Scalar> m;  // first moment
  VectorX<Scalar> v;  // second moment
  long step = 0;

  static AdamStateT zero(Eigen::Index n) {
    return {VectorX<Scalar>::Zero(n), VectorX<Scalar>::Zero(n), 0};
  }
};

using AdamState = AdamStateT<double>;

template <typename Scalar = double>
struct AdamConfigT {
  Scalar lr = Scalar(3e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

using AdamConfig = AdamConfigT<double>;

// One descent step in place.  All updates are elementwise, so the result is
// reproducible regardless of expression evaluation order.
template <typename Scalar, typename Derived>
void adam_step(Eigen::Ref<VectorX<Scalar>> params,
               const Eigen::MatrixBase<Derived>& grad,
               AdamStateT<Scalar>& state,
               const AdamConfigT<Scalar>& cfg = {}) {
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw std::invalid_argument("adam: size mismatch");
  state.step += 1;
  state.m = cfg.beta1 * state.m + (Scalar(1) - cfg.beta1) * grad;
  state.v.array() = cfg.beta2 * state.v.array() +
                    (Scalar(1) - cfg.beta2) * grad.array().square();
  const Scalar bias1 = Scalar(1) - std::pow(cfg.beta1, Scalar(state.step));
  const Scalar bias2 = Scalar(1) - std::pow(cfg.beta2, Scalar(state.step));
  params.array() -= cfg.lr * (state.m.array() / bias1) /
                    ((state.v.array() / bias2).sqrt() + cfg.eps);
}

}  // namespace scrl::diff
