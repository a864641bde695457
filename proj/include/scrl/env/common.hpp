#pragma once

#include <Eigen/Dense>

#include "scrl/mdp/finite_mdp.hpp"

namespace scrl::env {

// One transition as seen by the agent.  `done` reports physical termination
// only; running out of the per-episode step budget closes the episode (the
// environment refuses further steps) without setting `done`, so bootstrapped
// targets can still look past a truncation.
template <typename Scalar = double>
struct StepResultT {
  VectorX<Scalar> obs;
  Scalar reward = Scalar(0);
  bool done = false;
};

using StepResult = StepResultT<double>;

}  // namespace scrl::env
