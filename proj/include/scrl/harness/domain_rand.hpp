#pragma once

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "scrl/harness/perturb.hpp"
#include "scrl/sac/train.hpp"

namespace scrl::harness {

template <typename Scalar = double>
struct DomainRandResultT {
  sac::TrainingLogT<Scalar> log;
  std::vector<Scalar> sampled_scales;  // one per episode reset, in order
};

using DomainRandResult = DomainRandResultT<double>;

// Domain-randomized training: at every episode reset the named parameter is
// set to base * scale with scale uniform over [min, max] of the spec's grid,
// drawn from the parameter stream.  This is the regularizer-free baseline, so
// the agent's penalty coefficient is cleared on entry.  All other streams are
// consumed exactly as in plain training; a degenerate range [1, 1] therefore
// reproduces plain training bit for bit under the same seed.
template <typename Scalar>
DomainRandResultT<Scalar> domain_randomized_train(
    sac::AgentStateT<Scalar>& agent, const env::AnyEnvT<Scalar>& environment,
    const PerturbationSpecT<Scalar>& spec, long steps,
    sac::TrainConfigT<Scalar> cfg) {
  spec.validate();
  if (spec.mode != PerturbMode::grid)
    throw std::invalid_argument(
        "domain randomization: spec must be grid mode (range endpoints)");
  const Scalar lo = *std::min_element(spec.grid.begin(), spec.grid.end());
  const Scalar hi = *std::max_element(spec.grid.begin(), spec.grid.end());
  const Scalar base = base_param_value(environment, spec.name);

  agent.cfg.epsilon = Scalar(0);

  auto scales = std::make_shared<std::vector<Scalar>>();
  Rng rng_param(cfg.seed, stream::kParam);
  const std::string name = spec.name;
  cfg.on_episode_reset = [=](env::AnyEnvT<Scalar>& e) mutable {
    const Scalar scale =
        lo + (hi - lo) * static_cast<Scalar>(rng_param.uniform());
    scales->push_back(scale);
    e = env::with_params(e, {{name, base * scale}});
  };

  sac::TrainLoopT<Scalar> loop(std::move(agent), environment, std::move(cfg));
  loop.run(steps);
  agent = loop.agent();
  return {loop.log(), std::move(*scales)};
}

}  // namespace scrl::harness
