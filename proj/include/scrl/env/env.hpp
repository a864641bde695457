#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>

#include "scrl/env/cartpole.hpp"
#include "scrl/env/common.hpp"
#include "scrl/env/pendulum.hpp"

namespace scrl::env {

// Closed set of environments selectable by config key `env.name`.  Free
// functions below dispatch on the active alternative so training, evaluation,
// and sweep code never mention a concrete environment type.
template <typename Scalar = double>
using AnyEnvT = std::variant<PendulumEnvT<Scalar>, CartpoleEnvT<Scalar>>;

using AnyEnv = AnyEnvT<double>;

template <typename Scalar = double>
AnyEnvT<Scalar> make_env(const std::string& name) {
  if (name == "pendulum") return PendulumEnvT<Scalar>{};
  if (name == "cartpole") return CartpoleEnvT<Scalar>{};
  throw std::invalid_argument("env: unknown environment '" + name +
                              "' (expected pendulum or cartpole)");
}

template <typename Scalar>
std::string env_name(const AnyEnvT<Scalar>& e) {
  return std::holds_alternative<PendulumEnvT<Scalar>>(e) ? "pendulum"
                                                         : "cartpole";
}

template <typename Scalar>
int obs_dim(const AnyEnvT<Scalar>& e) {
  return std::visit([](const auto& env) { return env.kObsDim; }, e);
}

template <typename Scalar>
int action_dim(const AnyEnvT<Scalar>& e) {
  return std::visit([](const auto& env) { return env.kActionDim; }, e);
}

template <typename Scalar>
int max_episode_steps(const AnyEnvT<Scalar>& e) {
  return std::visit([](const auto& env) { return env.max_episode_steps; }, e);
}

template <typename Scalar>
bool episode_over(const AnyEnvT<Scalar>& e) {
  return std::visit([](const auto& env) { return env.episode_over(); }, e);
}

template <typename Scalar>
VectorX<Scalar> env_reset(AnyEnvT<Scalar>& e, std::uint64_t seed) {
  return std::visit([seed](auto& env) { return env.reset(seed); }, e);
}

template <typename Scalar>
StepResultT<Scalar> env_step(AnyEnvT<Scalar>& e, const VectorX<Scalar>& action) {
  return std::visit([&action](auto& env) { return env.step(action); }, e);
}

// Named physical parameters, keyed exactly as in config (`env.params.<key>`).

template <typename Scalar>
std::map<std::string, Scalar> params_map(const PendulumParamsT<Scalar>& p) {
  return {{"mass", p.mass},
          {"length", p.length},
          {"damping_friction", p.damping_friction}};
}

template <typename Scalar>
std::map<std::string, Scalar> params_map(const CartpoleParamsT<Scalar>& p) {
  return {{"cart_mass", p.cart_mass},
          {"pole_mass", p.pole_mass},
          {"pole_length", p.pole_length},
          {"track_friction", p.track_friction}};
}

template <typename Scalar>
std::map<std::string, Scalar> params_map(const AnyEnvT<Scalar>& e) {
  return std::visit([](const auto& env) { return params_map(env.params); }, e);
}

namespace detail {

template <typename Scalar>
void apply_overrides(PendulumParamsT<Scalar>& p,
                     const std::map<std::string, Scalar>& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key == "mass")
      p.mass = value;
    else if (key == "length")
      p.length = value;
    else if (key == "damping_friction")
      p.damping_friction = value;
    else
      throw std::invalid_argument("pendulum: unknown parameter '" + key + "'");
  }
}

template <typename Scalar>
void apply_overrides(CartpoleParamsT<Scalar>& p,
                     const std::map<std::string, Scalar>& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key == "cart_mass")
      p.cart_mass = value;
    else if (key == "pole_mass")
      p.pole_mass = value;
    else if (key == "pole_length")
      p.pole_length = value;
    else if (key == "track_friction")
      p.track_friction = value;
    else
      throw std::invalid_argument("cartpole: unknown parameter '" + key + "'");
  }
}

}  // namespace detail

// Fresh environment sharing the source's configuration but with the named
// parameters replaced.  Episode state is not carried over: the result needs a
// reset before stepping.  The source is never touched.
template <typename Scalar, typename Env>
Env with_params_impl(const Env& source,
                     const std::map<std::string, Scalar>& overrides) {
  Env out = source;
  detail::apply_overrides(out.params, overrides);
  out.params.validate();
  out.steps_taken = 0;
  out.episode_active = false;
  return out;
}

template <typename Scalar>
PendulumEnvT<Scalar> with_params(
    const PendulumEnvT<Scalar>& source,
    const std::map<std::string, Scalar>& overrides) {
  return with_params_impl<Scalar>(source, overrides);
}

template <typename Scalar>
CartpoleEnvT<Scalar> with_params(
    const CartpoleEnvT<Scalar>& source,
    const std::map<std::string, Scalar>& overrides) {
  auto out = with_params_impl<Scalar>(source, overrides);
  out.done = false;
  return out;
}

template <typename Scalar>
AnyEnvT<Scalar> with_params(const AnyEnvT<Scalar>& source,
                            const std::map<std::string, Scalar>& overrides) {
  return std::visit(
      [&overrides](const auto& env) -> AnyEnvT<Scalar> {
        return with_params(env, overrides);
      },
      source);
}

}  // namespace scrl::env
