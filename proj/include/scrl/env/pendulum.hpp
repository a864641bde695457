#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "scrl/env/common.hpp"
#include "scrl/rng.hpp"

namespace scrl::env {

template <typename Scalar = double>
struct PendulumParamsT {
  Scalar mass = Scalar(1);                 // kg
  Scalar length = Scalar(1);               // m
  Scalar damping_friction = Scalar(0.05);  // N·m·s, viscous joint damping

  // Throws std::invalid_argument naming the first violated requirement.
  void validate() const {
    if (!(mass > Scalar(0)))
      throw std::invalid_argument("pendulum: mass must be > 0");
    if (!(length > Scalar(0)))
      throw std::invalid_argument("pendulum: length must be > 0");
    if (!(damping_friction >= Scalar(0)))
      throw std::invalid_argument("pendulum: damping_friction must be >= 0");
  }
};

using PendulumParams = PendulumParamsT<double>;

// Torque-limited pendulum swing-up.  The angle is measured from upright
// (theta = 0 points up, theta = pi hangs down) and is integrated without
// wrapping, so tests can track winding and energy; the observation
// (cos theta, sin theta, theta_dot) and the reward are wrap-invariant.
//
//   theta_acc = (g / length) * sin(theta)
//             + (torque - damping_friction * theta_dot) / (mass * length^2)
//
// Semi-implicit Euler: the velocity update runs first and the position update
// uses the new velocity, which keeps the undamped oscillator's energy bounded
// instead of spiraling outward.
//
// The reward scores the state the action was applied in (before integrating):
//   -(wrap(theta)^2 + 0.1 * theta_dot^2 + 0.001 * torque^2)
// with wrap(.) reducing to [-pi, pi].  Episodes never terminate on physics;
// they close after max_episode_steps.
template <typename Scalar = double>
struct PendulumEnvT {
  using Vector = VectorX<Scalar>;

  PendulumParamsT<Scalar> params;
  Scalar dt = Scalar(0.01);
  int max_episode_steps = 200;
  Scalar gravity = Scalar(9.81);
  Scalar max_torque = Scalar(6);
  Scalar max_speed = Scalar(8);  // |theta_dot| is clamped here

  // Episode state.
  Scalar theta = Scalar(0);
  Scalar theta_dot = Scalar(0);
  int steps_taken = 0;
  bool episode_active = false;
  std::uint64_t reset_seed = 0;

  static constexpr int kObsDim = 3;
  static constexpr int kActionDim = 1;

  // Initial state: theta uniform on (-pi, pi], theta_dot uniform on (-1, 1),
  // drawn in that order from Rng(seed, stream::kEnv).
  Vector reset(std::uint64_t seed) {
    params.validate();
    Rng rng(seed, stream::kEnv);
    theta = kPi - Scalar(2) * kPi * static_cast<Scalar>(rng.uniform());
    theta_dot = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
    steps_taken = 0;
    episode_active = true;
    reset_seed = seed;
    return observation();
  }

  StepResultT<Scalar> step(const Vector& action) {
    if (!episode_active)
      throw std::logic_error("pendulum: reset before stepping");
    if (steps_taken >= max_episode_steps)
      throw std::logic_error("pendulum: episode finished, reset to continue");
    if (action.size() != kActionDim)
      throw std::invalid_argument("pendulum: action must have dimension 1");
    if (!std::isfinite(action[0]))
      throw std::invalid_argument("pendulum: action must be finite");

    const Scalar a = std::clamp(action[0], Scalar(-1), Scalar(1));
    const Scalar torque = a * max_torque;
    const Scalar theta_w = wrap_to_pi(theta);
    const Scalar reward =
        -(theta_w * theta_w + Scalar(0.1) * theta_dot * theta_dot +
          Scalar(0.001) * torque * torque);

    const Scalar ml2 = params.mass * params.length * params.length;
    const Scalar theta_acc =
        (gravity / params.length) * std::sin(theta) +
        (torque - params.damping_friction * theta_dot) / ml2;
    theta_dot = std::clamp(theta_dot + dt * theta_acc, -max_speed, max_speed);
    theta += dt * theta_dot;
    ++steps_taken;

    return {observation(), reward, false};
  }

  Vector observation() const {
    Vector obs(kObsDim);
    obs << std::cos(theta), std::sin(theta), theta_dot;
    return obs;
  }

  bool episode_over() const {
    return !episode_active || steps_taken >= max_episode_steps;
  }

  static Scalar wrap_to_pi(Scalar angle) {
    return static_cast<Scalar>(
        std::remainder(static_cast<double>(angle), 2.0 * kPi));
  }

  static constexpr Scalar kPi = Scalar(3.14159265358979323846);
};

using PendulumEnv = PendulumEnvT<double>;

}  // namespace scrl::env
