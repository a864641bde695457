#pragma once

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scrl/diff/adam.hpp"
#include "scrl/diff/checkpoint.hpp"
#include "scrl/diff/mlp.hpp"
#include "scrl/diff/policy.hpp"
#include "scrl/rng.hpp"
#include "scrl/sac/gbr.hpp"
#include "scrl/sac/replay.hpp"

namespace scrl::sac {

// full: conservative term in both critic targets and the actor objective.
// sce_only: critic targets only (actor sees epsilon = 0).
// sci_only: actor objective only (critic targets see epsilon = 0).
enum class AblationMode { full, sce_only, sci_only };

// How the actor treats d/d_action of the ||d/ds Q||_1 term.  For ReLU
// critics the two coincide exactly: the state gradient is piecewise constant
// in (state, action), so the mixed second derivative the full mode would add
// is zero almost everywhere.  The flag exists to make that choice explicit
// and ablatable rather than implicit.
enum class GbrGradMode { full, truncated };

template <typename Scalar = double>
struct AgentConfigT {
  Scalar gamma = Scalar(0.99);
  Scalar tau = Scalar(0.005);
  Scalar epsilon = Scalar(0.005);  // in units of normalized state
  Scalar lr = Scalar(3e-4);        // critics, actor, and temperature alike
  AblationMode ablation = AblationMode::full;
  GbrGradMode gbr_grad = GbrGradMode::full;
};

using AgentConfig = AgentConfigT<double>;

template <typename Scalar = double>
struct AgentStateT {
  diff::MlpT<Scalar> q1, q2;
  diff::MlpT<Scalar> q1_target, q2_target;
  diff::GaussianTanhPolicyT<Scalar> policy;
  VectorX<Scalar> log_alpha;  // length 1, kept a vector for the optimizer
  Scalar entropy_target = Scalar(0);
  AgentConfigT<Scalar> cfg;
  diff::AdamConfigT<Scalar> adam;
  diff::AdamStateT<Scalar> opt_q1, opt_q2, opt_policy, opt_alpha;

  Scalar alpha() const { return std::exp(log_alpha[0]); }
  int obs_dim() const { return policy.obs_dim(); }
  int action_dim() const { return policy.action_dim; }

  // Throws std::invalid_argument naming the first violated requirement.
  void validate() const {
    q1.validate();
    q2.validate();
    q1_target.validate();
    q2_target.validate();
    policy.validate();
    if (q1.layer_sizes != q1_target.layer_sizes ||
        q2.layer_sizes != q2_target.layer_sizes)
      throw std::invalid_argument("agent: target/online critic shape mismatch");
    if (q1.in_dim() != obs_dim() + action_dim() || q1.out_dim() != 1)
      throw std::invalid_argument("agent: critic shape must be obs+act -> 1");
    if (q2.in_dim() != q1.in_dim() || q2.out_dim() != 1)
      throw std::invalid_argument("agent: critics must share input dims");
    if (log_alpha.size() != 1)
      throw std::invalid_argument("agent: log_alpha must have length 1");
    if (!(cfg.epsilon >= Scalar(0)))
      throw std::invalid_argument("agent: epsilon must be non-negative");
    if (!(cfg.gamma > Scalar(0) && cfg.gamma < Scalar(1)))
      throw std::invalid_argument("agent: gamma must lie in (0,1)");
    if (!(cfg.tau > Scalar(0) && cfg.tau <= Scalar(1)))
      throw std::invalid_argument("agent: tau must lie in (0,1]");
  }
};

using AgentState = AgentStateT<double>;

// Networks are drawn from Rng(seed, stream::kInit) in the fixed order
// q1, q2, policy; targets start as copies of the online critics.
template <typename Scalar = double>
AgentStateT<Scalar> init_agent(int obs_dim, int action_dim,
                               const std::vector<int>& hidden,
                               std::uint64_t seed,
                               const AgentConfigT<Scalar>& cfg = {}) {
  Rng rng(seed, stream::kInit);
  std::vector<int> critic_sizes;
  critic_sizes.push_back(obs_dim + action_dim);
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);

  AgentStateT<Scalar> agent;
  agent.q1 = diff::mlp_init<Scalar>(rng, critic_sizes);
  agent.q2 = diff::mlp_init<Scalar>(rng, critic_sizes);
  agent.policy = diff::policy_init<Scalar>(rng, obs_dim, hidden, action_dim);
  agent.q1_target = agent.q1;
  agent.q2_target = agent.q2;
  agent.log_alpha = VectorX<Scalar>::Zero(1);
  agent.entropy_target = Scalar(-action_dim);
  agent.cfg = cfg;
  agent.adam.lr = cfg.lr;
  agent.opt_q1 = diff::AdamStateT<Scalar>::zero(agent.q1.params.size());
  agent.opt_q2 = diff::AdamStateT<Scalar>::zero(agent.q2.params.size());
  agent.opt_policy =
      diff::AdamStateT<Scalar>::zero(agent.policy.trunk.params.size());
  agent.opt_alpha = diff::AdamStateT<Scalar>::zero(1);
  agent.validate();
  return agent;
}

template <typename Scalar>
Scalar critic_epsilon(const AgentStateT<Scalar>& agent) {
  return agent.cfg.ablation == AblationMode::sci_only ? Scalar(0)
                                                      : agent.cfg.epsilon;
}

template <typename Scalar>
Scalar actor_epsilon(const AgentStateT<Scalar>& agent) {
  return agent.cfg.ablation == AblationMode::sce_only ? Scalar(0)
                                                      : agent.cfg.epsilon;
}

namespace detail {

[[noreturn]] inline void divergence(const std::string& where,
                                    double loss_value) {
  throw std::runtime_error("sac: non-finite " + where + " loss (" +
                           std::to_string(loss_value) +
                           "), training diverged");
}

}  // namespace detail

// Bootstrap targets: with a' = f(delta'; s') freshly reparameterized and the
// target critics Qbar,
//
//   y = r + gamma * (1 - done) * [ Qbar_min(s', a')
//                                  - eps * || d/ds' Qbar_min(s', a') ||_1
//                                  - alpha * log pi(a' | s') ],
//
// a' held fixed inside the state gradient.  Depends only on the target
// critics and the policy, never on the online critics.
template <typename Scalar>
RowVectorX<Scalar> critic_targets(const AgentStateT<Scalar>& agent,
                                  const BatchT<Scalar>& batch,
                                  const MatrixX<Scalar>& noise) {
  const Eigen::Index b_n = batch.size();
  diff::PolicyCacheT<Scalar> pc;
  diff::policy_sample_batch(agent.policy, batch.next_states, noise, pc);
  const Scalar eps = critic_epsilon(agent);
  const auto mc = min_critic_batch(agent.q1_target, agent.q2_target,
                                   batch.next_states, pc.action,
                                   /*with_grads=*/eps != Scalar(0));
  const Scalar alpha = agent.alpha();
  RowVectorX<Scalar> y(b_n);
  for (Eigen::Index b = 0; b < b_n; ++b) {
    const Scalar value = mc.q_min[b] - eps * mc.grad_norm[b];
    y[b] = batch.rewards[b] +
           agent.cfg.gamma * (Scalar(1) - batch.done_mask[b]) *
               (value - alpha * pc.log_prob[b]);
  }
  return y;
}

template <typename Scalar = double>
struct CriticStatsT {
  Scalar loss1 = Scalar(0);
  Scalar loss2 = Scalar(0);
};

using CriticStats = CriticStatsT<double>;

// One Adam step on each critic's mean squared Bellman residual
// (1/B) sum 1/2 (Q_i(s,a) - y)^2, with y treated as a constant.  Both losses
// and gradients are computed before either parameter vector moves.
template <typename Scalar>
CriticStatsT<Scalar> critic_update(AgentStateT<Scalar>& agent,
                                   const BatchT<Scalar>& batch, Rng& rng) {
  if (batch.size() < 1)
    throw std::invalid_argument("critic update: empty batch");
  const Eigen::Index b_n = batch.size();
  const MatrixX<Scalar> noise =
      diff::sample_noise<Scalar>(rng, agent.action_dim(), b_n);
  const RowVectorX<Scalar> y = critic_targets(agent, batch, noise);

  MatrixX<Scalar> input(agent.obs_dim() + agent.action_dim(), b_n);
  input.topRows(agent.obs_dim()) = batch.states;
  input.bottomRows(agent.action_dim()) = batch.actions;

  CriticStatsT<Scalar> stats;
  VectorX<Scalar> d_q1, d_q2;
  for (int which = 0; which < 2; ++which) {
    diff::MlpT<Scalar>& net = which == 0 ? agent.q1 : agent.q2;
    diff::MlpCacheT<Scalar> cache;
    const MatrixX<Scalar> out = diff::mlp_forward_batch(net, input, cache);
    RowVectorX<Scalar> upstream(b_n);
    Scalar loss = Scalar(0);
    for (Eigen::Index b = 0; b < b_n; ++b) {
      const Scalar resid = out(0, b) - y[b];
      loss += Scalar(0.5) * resid * resid;
      upstream[b] = resid / Scalar(b_n);
    }
    loss /= Scalar(b_n);
    const auto grad = diff::mlp_backward_batch(net, cache, upstream);
    if (which == 0) {
      stats.loss1 = loss;
      d_q1 = grad.d_params;
    } else {
      stats.loss2 = loss;
      d_q2 = grad.d_params;
    }
  }
  if (!std::isfinite(stats.loss1)) detail::divergence("critic 1", stats.loss1);
  if (!std::isfinite(stats.loss2)) detail::divergence("critic 2", stats.loss2);
  diff::adam_step<Scalar>(agent.q1.params, d_q1, agent.opt_q1, agent.adam);
  diff::adam_step<Scalar>(agent.q2.params, d_q2, agent.opt_q2, agent.adam);
  return stats;
}

template <typename Scalar = double>
struct ActorStatsT {
  Scalar loss = Scalar(0);
  // Batch mean of eps * ||d/ds Q_min||_1 / |Q_min|: the regularizer's share
  // of the objective, the tuning diagnostic for epsilon.
  Scalar gbr_fraction = Scalar(0);
};

using ActorStats = ActorStatsT<double>;

template <typename Scalar = double>
struct ActorGradientT {
  ActorStatsT<Scalar> stats;
  VectorX<Scalar> d_params;  // policy trunk gradient of the loss
};

// Loss gradient for ascent on
//   E[ Q_min(s, f(delta; s)) - eps * ||d/ds Q_min||_1 - alpha log pi ],
// taken w.r.t. policy parameters only; critics are read, never written.
// In GbrGradMode::full the loss's action-derivative would add
// eps * d/da ||d/ds Q_min||_1, the mixed second derivative of the critic;
// ReLU critics have piecewise-constant input gradients, so that term is zero
// almost everywhere and both modes compute the same thing by construction.
template <typename Scalar>
ActorGradientT<Scalar> actor_gradient(const AgentStateT<Scalar>& agent,
                                      const MatrixX<Scalar>& states,
                                      const MatrixX<Scalar>& noise) {
  const Eigen::Index b_n = states.cols();
  if (b_n < 1) throw std::invalid_argument("actor update: empty batch");
  diff::PolicyCacheT<Scalar> pc;
  diff::policy_sample_batch(agent.policy, states, noise, pc);
  const auto mc = min_critic_batch(agent.q1, agent.q2, states, pc.action);
  const Scalar eps = actor_epsilon(agent);
  const Scalar alpha = agent.alpha();

  Scalar loss = Scalar(0);
  Scalar fraction = Scalar(0);
  for (Eigen::Index b = 0; b < b_n; ++b) {
    const Scalar value = mc.q_min[b] - eps * mc.grad_norm[b];
    loss += value - alpha * pc.log_prob[b];
    fraction += eps * mc.grad_norm[b] /
                std::max(std::abs(mc.q_min[b]), Scalar(1e-8));
  }
  loss = -loss / Scalar(b_n);
  fraction /= Scalar(b_n);

  const MatrixX<Scalar> d_action = -mc.d_action / Scalar(b_n);
  const RowVectorX<Scalar> d_log_prob =
      RowVectorX<Scalar>::Constant(b_n, alpha / Scalar(b_n));
  const auto pg = diff::policy_backward_batch(agent.policy, pc, d_action,
                                              d_log_prob);
  return {{loss, fraction}, pg.d_params};
}

template <typename Scalar>
ActorStatsT<Scalar> actor_update(AgentStateT<Scalar>& agent,
                                 const BatchT<Scalar>& batch, Rng& rng) {
  const MatrixX<Scalar> noise =
      diff::sample_noise<Scalar>(rng, agent.action_dim(), batch.size());
  const ActorGradientT<Scalar> g = actor_gradient(agent, batch.states, noise);
  if (!std::isfinite(g.stats.loss)) detail::divergence("actor", g.stats.loss);
  diff::adam_step<Scalar>(agent.policy.trunk.params, g.d_params,
                          agent.opt_policy, agent.adam);
  return g.stats;
}

// Temperature objective J(alpha) = -alpha * E[log pi + H], minimized in
// log_alpha with the log-probs treated as constants; the chain rule through
// alpha = exp(log_alpha) gives dJ/dlog_alpha = -alpha * E[log pi + H].
// Entropy below target (high log-probs) makes the gradient negative, so
// alpha rises and exploration is paid more.
template <typename Scalar>
Scalar alpha_step_with_log_probs(AgentStateT<Scalar>& agent,
                                 const RowVectorX<Scalar>& log_probs) {
  const Eigen::Index b_n = log_probs.size();
  if (b_n < 1) throw std::invalid_argument("alpha update: empty batch");
  Scalar mean_term = Scalar(0);
  for (Eigen::Index b = 0; b < b_n; ++b)
    mean_term += log_probs[b] + agent.entropy_target;
  mean_term /= Scalar(b_n);
  const Scalar alpha = agent.alpha();
  const Scalar loss = -alpha * mean_term;
  VectorX<Scalar> grad(1);
  grad[0] = -alpha * mean_term;
  diff::adam_step<Scalar>(agent.log_alpha, grad, agent.opt_alpha, agent.adam);
  return loss;
}

template <typename Scalar>
Scalar alpha_update(AgentStateT<Scalar>& agent, const BatchT<Scalar>& batch,
                    Rng& rng) {
  const MatrixX<Scalar> noise =
      diff::sample_noise<Scalar>(rng, agent.action_dim(), batch.size());
  diff::PolicyCacheT<Scalar> pc;
  diff::policy_sample_batch(agent.policy, batch.states, noise, pc);
  return alpha_step_with_log_probs(agent, pc.log_prob);
}

// theta_target <- tau * theta_online + (1 - tau) * theta_target, elementwise
// in exactly this form (reordering the blend changes low bits).
template <typename Scalar>
void polyak_update(AgentStateT<Scalar>& agent, Scalar tau) {
  if (!(tau > Scalar(0) && tau <= Scalar(1)))
    throw std::invalid_argument("polyak: tau must lie in (0,1]");
  const auto blend = [tau](const VectorX<Scalar>& online,
                           VectorX<Scalar>& target) {
    for (Eigen::Index i = 0; i < online.size(); ++i)
      target[i] = tau * online[i] + (Scalar(1) - tau) * target[i];
  };
  blend(agent.q1.params, agent.q1_target.params);
  blend(agent.q2.params, agent.q2_target.params);
}

// Checkpointing: every learned tensor plus optimizer state, so a restored
// agent continues bit-for-bit.  Hyperparameters travel in the run manifest,
// not here.

namespace detail {

inline void write_adam(std::ostream& os, const std::string& name,
                       const diff::AdamState& opt) {
  diff::write_vector(os, name + ".m", opt.m);
  diff::write_vector(os, name + ".v", opt.v);
  VectorXd step(1);
  step[0] = static_cast<double>(opt.step);
  diff::write_vector(os, name + ".step", step);
}

inline diff::AdamState read_adam(std::istream& is, const std::string& name) {
  diff::AdamState opt;
  opt.m = diff::read_vector(is, name + ".m");
  opt.v = diff::read_vector(is, name + ".v");
  const VectorXd step = diff::read_vector(is, name + ".step");
  if (step.size() != 1 || step[0] < 0 || step[0] != std::floor(step[0]))
    throw std::runtime_error("checkpoint: bad optimizer step count");
  opt.step = static_cast<long>(step[0]);
  return opt;
}

}  // namespace detail

inline void write_agent(std::ostream& os, const AgentState& agent) {
  diff::write_mlp(os, "q1", agent.q1);
  diff::write_mlp(os, "q2", agent.q2);
  diff::write_mlp(os, "q1_target", agent.q1_target);
  diff::write_mlp(os, "q2_target", agent.q2_target);
  diff::write_policy(os, "policy", agent.policy);
  diff::write_vector(os, "log_alpha", agent.log_alpha);
  VectorXd entropy(1);
  entropy[0] = agent.entropy_target;
  diff::write_vector(os, "entropy_target", entropy);
  detail::write_adam(os, "opt_q1", agent.opt_q1);
  detail::write_adam(os, "opt_q2", agent.opt_q2);
  detail::write_adam(os, "opt_policy", agent.opt_policy);
  detail::write_adam(os, "opt_alpha", agent.opt_alpha);
}

inline AgentState read_agent(std::istream& is, const AgentConfig& cfg = {}) {
  AgentState agent;
  agent.q1 = diff::read_mlp(is, "q1");
  agent.q2 = diff::read_mlp(is, "q2");
  agent.q1_target = diff::read_mlp(is, "q1_target");
  agent.q2_target = diff::read_mlp(is, "q2_target");
  agent.policy = diff::read_policy(is, "policy");
  agent.log_alpha = diff::read_vector(is, "log_alpha");
  const VectorXd entropy = diff::read_vector(is, "entropy_target");
  if (entropy.size() != 1)
    throw std::runtime_error("checkpoint: bad entropy target");
  agent.entropy_target = entropy[0];
  agent.opt_q1 = detail::read_adam(is, "opt_q1");
  agent.opt_q2 = detail::read_adam(is, "opt_q2");
  agent.opt_policy = detail::read_adam(is, "opt_policy");
  agent.opt_alpha = detail::read_adam(is, "opt_alpha");
  agent.cfg = cfg;
  agent.adam.lr = cfg.lr;
  agent.validate();
  return agent;
}

}  // namespace scrl::sac
