#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "scrl/env/common.hpp"
#include "scrl/rng.hpp"

namespace scrl::env {

template <typename Scalar = double>
struct CartpoleParamsT {
  Scalar cart_mass = Scalar(1);       // kg
  Scalar pole_mass = Scalar(0.1);     // kg
  Scalar pole_length = Scalar(1);     // m, full pole length
  Scalar track_friction = Scalar(0);  // dimensionless Coulomb coefficient

  // Throws std::invalid_argument naming the first violated requirement.
  void validate() const {
    if (!(cart_mass > Scalar(0)))
      throw std::invalid_argument("cartpole: cart_mass must be > 0");
    if (!(pole_mass > Scalar(0)))
      throw std::invalid_argument("cartpole: pole_mass must be > 0");
    if (!(pole_length > Scalar(0)))
      throw std::invalid_argument("cartpole: pole_length must be > 0");
    if (!(track_friction >= Scalar(0)))
      throw std::invalid_argument("cartpole: track_friction must be >= 0");
  }
};

using CartpoleParams = CartpoleParamsT<double>;

// Cart-pole balancing with a force actuator and Coulomb track friction.
// State (x, x_dot, theta, theta_dot) with theta measured from upright; the
// observation is the state itself.  Writing h = pole_length / 2 for the
// pivot-to-center distance and M = cart_mass + pole_mass:
//
//   friction  = track_friction * M * g * sgn(x_dot)      (sgn(0) = 0)
//   temp      = (force + pole_mass * h * theta_dot^2 * sin(theta)
//                - friction) / M
//   theta_acc = (g * sin(theta) - cos(theta) * temp)
//             / (h * (4/3 - pole_mass * cos(theta)^2 / M))
//   x_acc     = temp - pole_mass * h * theta_acc * cos(theta) / M
//
// The friction model takes the normal force as the full resting weight M*g,
// ignoring the pole's vertical reaction, and has no static stiction: a cart
// at exactly x_dot = 0 feels none.  Semi-implicit Euler, velocities first.
//
// Reward is +1 for every step taken, including the one that terminates the
// episode.  Termination is strict: |theta| > 0.21 rad or |x| > 2.4 m after
// integrating; sitting exactly on a threshold does not terminate.
template <typename Scalar = double>
struct CartpoleEnvT {
  using Vector = VectorX<Scalar>;

  CartpoleParamsT<Scalar> params;
  Scalar dt = Scalar(0.01);
  int max_episode_steps = 500;
  Scalar gravity = Scalar(9.81);
  Scalar force_mag = Scalar(10);
  Scalar theta_threshold = Scalar(0.21);  // rad
  Scalar x_threshold = Scalar(2.4);       // m

  // Episode state.
  Scalar x = Scalar(0);
  Scalar x_dot = Scalar(0);
  Scalar theta = Scalar(0);
  Scalar theta_dot = Scalar(0);
  int steps_taken = 0;
  bool done = false;
  bool episode_active = false;
  std::uint64_t reset_seed = 0;

  static constexpr int kObsDim = 4;
  static constexpr int kActionDim = 1;

  // Initial state: each of x, x_dot, theta, theta_dot uniform on
  // (-0.05, 0.05), drawn in that order from Rng(seed, stream::kEnv).
  Vector reset(std::uint64_t seed) {
    params.validate();
    Rng rng(seed, stream::kEnv);
    x = static_cast<Scalar>(rng.uniform(-0.05, 0.05));
    x_dot = static_cast<Scalar>(rng.uniform(-0.05, 0.05));
    theta = static_cast<Scalar>(rng.uniform(-0.05, 0.05));
    theta_dot = static_cast<Scalar>(rng.uniform(-0.05, 0.05));
    steps_taken = 0;
    done = false;
    episode_active = true;
    reset_seed = seed;
    return observation();
  }

  StepResultT<Scalar> step(const Vector& action) {
    if (!episode_active)
      throw std::logic_error("cartpole: reset before stepping");
    if (done || steps_taken >= max_episode_steps)
      throw std::logic_error("cartpole: episode finished, reset to continue");
    if (action.size() != kActionDim)
      throw std::invalid_argument("cartpole: action must have dimension 1");
    if (!std::isfinite(action[0]))
      throw std::invalid_argument("cartpole: action must be finite");

    const Scalar a = std::clamp(action[0], Scalar(-1), Scalar(1));
    const Scalar force = a * force_mag;
    const Scalar total_mass = params.cart_mass + params.pole_mass;
    const Scalar h = params.pole_length / Scalar(2);
    const Scalar sin_t = std::sin(theta);
    const Scalar cos_t = std::cos(theta);
    const Scalar sgn_v =
        x_dot > Scalar(0) ? Scalar(1) : (x_dot < Scalar(0) ? Scalar(-1) : Scalar(0));

    const Scalar friction =
        params.track_friction * total_mass * gravity * sgn_v;
    const Scalar temp =
        (force + params.pole_mass * h * theta_dot * theta_dot * sin_t -
         friction) /
        total_mass;
    const Scalar theta_acc =
        (gravity * sin_t - cos_t * temp) /
        (h * (Scalar(4) / Scalar(3) -
              params.pole_mass * cos_t * cos_t / total_mass));
    const Scalar x_acc =
        temp - params.pole_mass * h * theta_acc * cos_t / total_mass;

    x_dot += dt * x_acc;
    x += dt * x_dot;
    theta_dot += dt * theta_acc;
    theta += dt * theta_dot;
    ++steps_taken;

    done = std::abs(theta) > theta_threshold || std::abs(x) > x_threshold;
    return {observation(), Scalar(1), done};
  }

  Vector observation() const {
    Vector obs(kObsDim);
    obs << x, x_dot, theta, theta_dot;
    return obs;
  }

  bool episode_over() const {
    return !episode_active || done || steps_taken >= max_episode_steps;
  }
};

using CartpoleEnv = CartpoleEnvT<double>;

}  // namespace scrl::env
