#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "scrl/diff/mlp.hpp"
#include "scrl/diff/policy.hpp"
#include "scrl/mdp/finite_mdp.hpp"

namespace scrl::sac {

// Clipped double-Q evaluation with input gradients.  Critics take the
// stacked vector (state; action); q_min is the pointwise minimum and its
// gradient is the gradient of whichever critic attains it, ties going to
// critic 1.  Because the non-attaining critic receives a zero upstream, its
// d_input columns are exactly zero and the sum below is, per sample, just
// the attaining critic's gradient.
template <typename Scalar = double>
struct MinCriticBatchT {
  RowVectorX<Scalar> q_min;      // 1 x B
  RowVectorX<Scalar> att1;       // 1 x B, 1 where critic 1 attains the min
  MatrixX<Scalar> d_state;       // obs_dim x B (empty if with_grads = false)
  MatrixX<Scalar> d_action;      // act_dim x B (empty if with_grads = false)
  RowVectorX<Scalar> grad_norm;  // 1 x B, l1 norm of d_state per sample
};

template <typename Scalar, typename D1, typename D2>
MinCriticBatchT<Scalar> min_critic_batch(const diff::MlpT<Scalar>& q1,
                                         const diff::MlpT<Scalar>& q2,
                                         const Eigen::MatrixBase<D1>& states,
                                         const Eigen::MatrixBase<D2>& actions,
                                         bool with_grads = true) {
  const Eigen::Index obs_dim = states.rows();
  const Eigen::Index act_dim = actions.rows();
  const Eigen::Index batch = states.cols();
  if (actions.cols() != batch)
    throw std::invalid_argument("critic: state/action batch size mismatch");
  if (q1.in_dim() != obs_dim + act_dim || q1.out_dim() != 1)
    throw std::invalid_argument("critic: network must map obs+act to 1 value");
  if (q2.in_dim() != q1.in_dim() || q2.out_dim() != 1)
    throw std::invalid_argument("critic: the two critics must share shapes");

  MatrixX<Scalar> input(obs_dim + act_dim, batch);
  input.topRows(obs_dim) = states;
  input.bottomRows(act_dim) = actions;

  diff::MlpCacheT<Scalar> cache1, cache2;
  const MatrixX<Scalar> out1 = diff::mlp_forward_batch(q1, input, cache1);
  const MatrixX<Scalar> out2 = diff::mlp_forward_batch(q2, input, cache2);

  MinCriticBatchT<Scalar> mc;
  mc.q_min.resize(batch);
  mc.att1.resize(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const bool first = out1(0, b) <= out2(0, b);
    mc.att1[b] = first ? Scalar(1) : Scalar(0);
    mc.q_min[b] = first ? out1(0, b) : out2(0, b);
  }
  if (!with_grads) {
    mc.grad_norm = RowVectorX<Scalar>::Zero(batch);
    return mc;
  }

  const RowVectorX<Scalar> att2 =
      RowVectorX<Scalar>::Ones(batch) - mc.att1;
  const auto g1 = diff::mlp_backward_batch(q1, cache1, mc.att1);
  const auto g2 = diff::mlp_backward_batch(q2, cache2, att2);
  const MatrixX<Scalar> d_input = g1.d_input + g2.d_input;
  mc.d_state = d_input.topRows(obs_dim);
  mc.d_action = d_input.bottomRows(act_dim);
  mc.grad_norm.resize(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Scalar acc = Scalar(0);
    for (Eigen::Index i = 0; i < obs_dim; ++i)
      acc += std::abs(mc.d_state(i, b));
    mc.grad_norm[b] = acc;
  }
  return mc;
}

// Conservative critic value: the first-order closed form of the worst value
// over the infinity-ball of radius epsilon around s,
//
//   Q_min(s, a) - epsilon * || d/ds Q_min(s, a) ||_1,
//
// exact for critics linear in s and accurate to O(epsilon^2) for smooth ones.
// The generic overload takes any evaluator returning (value, state gradient)
// so closed-form test functions can stand in for networks.
template <typename Scalar, typename D1, typename D2>
Scalar gbr_value(const diff::MlpT<Scalar>& q1, const diff::MlpT<Scalar>& q2,
                 const Eigen::MatrixBase<D1>& state,
                 const Eigen::MatrixBase<D2>& action, Scalar epsilon) {
  if (epsilon < Scalar(0))
    throw std::invalid_argument("gbr: epsilon must be non-negative");
  const auto mc = min_critic_batch(q1, q2, state.reshaped(state.size(), 1),
                                   action.reshaped(action.size(), 1));
  return mc.q_min[0] - epsilon * mc.grad_norm[0];
}

template <typename CriticEval, typename Scalar, typename D1, typename D2>
Scalar gbr_value(CriticEval&& critic, const Eigen::MatrixBase<D1>& state,
                 const Eigen::MatrixBase<D2>& action, Scalar epsilon) {
  if (epsilon < Scalar(0))
    throw std::invalid_argument("gbr: epsilon must be non-negative");
  const std::pair<Scalar, VectorX<Scalar>> eval = critic(state, action);
  Scalar norm = Scalar(0);
  for (Eigen::Index i = 0; i < eval.second.size(); ++i)
    norm += std::abs(eval.second[i]);
  return eval.first - epsilon * norm;
}

// Monte-Carlo soft value of a policy under the min-critic, with its total
// state gradient: for fixed noise draws delta_k (common random numbers),
//
//   V(s)  = mean_k Q_min(s, f(delta_k; s))
//   dV/ds = mean_k [ dQ/ds + (df/ds)^T dQ/da ]   at (s, f(delta_k; s)),
//
// i.e. the gradient tracks the action's dependence on the state through the
// policy, unlike the fixed-action gradient inside gbr_value.  V(s) -
// epsilon*||dV/ds||_1 is then a first-order estimate of min over the
// infinity-ball of V, used by the GBR fidelity probes.
template <typename Scalar = double>
struct SoftValueT {
  Scalar value = Scalar(0);
  VectorX<Scalar> d_state;
};

template <typename Scalar, typename Derived>
SoftValueT<Scalar> soft_value_with_grad(
    const diff::MlpT<Scalar>& q1, const diff::MlpT<Scalar>& q2,
    const diff::GaussianTanhPolicyT<Scalar>& policy,
    const Eigen::MatrixBase<Derived>& state, const MatrixX<Scalar>& noise) {
  const Eigen::Index k = noise.cols();
  if (k < 1) throw std::invalid_argument("soft value: need noise draws");
  const MatrixX<Scalar> states = state.reshaped(state.size(), 1)
                                     .replicate(1, k);
  diff::PolicyCacheT<Scalar> pc;
  diff::policy_sample_batch(policy, states, noise, pc);
  const auto mc = min_critic_batch(q1, q2, states, pc.action);
  // The policy backward maps upstream d_action to per-sample (df/ds)^T v.
  const auto pg = diff::policy_backward_batch(
      policy, pc, mc.d_action, RowVectorX<Scalar>::Zero(k));
  SoftValueT<Scalar> out;
  out.d_state = VectorX<Scalar>::Zero(state.size());
  Scalar acc = Scalar(0);
  for (Eigen::Index b = 0; b < k; ++b) {
    acc += mc.q_min[b];
    for (Eigen::Index i = 0; i < state.size(); ++i)
      out.d_state[i] += mc.d_state(i, b) + pg.d_state(i, b);
  }
  out.value = acc / Scalar(k);
  out.d_state /= Scalar(k);
  return out;
}

}  // namespace scrl::sac
