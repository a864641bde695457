#pragma once

#include <cmath>
#include <stdexcept>

#include "scrl/diff/mlp.hpp"

namespace scrl::diff {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Squashed-Gaussian policy head.  The trunk emits (mean, raw log-std)
// stacked as one 2n vector; log-std is clamped to [kLogStdMin, kLogStdMax]
// and the action is tanh(mean + std * noise).
template <typename Scalar = double>
struct GaussianTanhPolicyT {
  MlpT<Scalar> trunk;
  int action_dim = 0;

  int obs_dim() const { return trunk.in_dim(); }

  void validate() const {
    trunk.validate();
    if (action_dim <= 0)
      throw std::invalid_argument("policy: action_dim must be positive");
    if (trunk.out_dim() != 2 * action_dim)
      throw std::invalid_argument("policy: trunk must emit 2*action_dim values");
  }
};

using GaussianTanhPolicy = GaussianTanhPolicyT<double>;

template <typename Scalar = double>
GaussianTanhPolicyT<Scalar> policy_init(Rng& rng, int obs_dim,
                                        const std::vector<int>& hidden,
                                        int action_dim) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2 * action_dim);
  GaussianTanhPolicyT<Scalar> pol{mlp_init<Scalar>(rng, sizes), action_dim};
  pol.validate();
  return pol;
}

namespace detail {

template <typename Scalar>
Scalar stable_softplus(Scalar x) {
  return x > Scalar(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// log(1 - tanh^2(u)) without catastrophic cancellation for large |u|.
template <typename Scalar>
Scalar log_one_minus_tanh_sq(Scalar u) {
  constexpr Scalar kLog2 = Scalar(0.6931471805599453094172321214581766L);
  return Scalar(2) * (kLog2 - u - stable_softplus(Scalar(-2) * u));
}

}  // namespace detail

// Standard-normal draws shaped for policy_sample_batch, filled one sample
// (column) at a time.  Every consumer of a policy-noise stream must use this
// exact draw order, or streams shared across implementations fall out of
// alignment.
template <typename Scalar = double>
MatrixX<Scalar> sample_noise(Rng& rng, int rows, Eigen::Index cols) {
  MatrixX<Scalar> noise(rows, cols);
  for (Eigen::Index b = 0; b < cols; ++b)
    for (int i = 0; i < rows; ++i)
      noise(i, b) = static_cast<Scalar>(rng.normal());
  return noise;
}

// Everything the backward pass needs from one batched sampling call.
// Columns are samples throughout.
template <typename Scalar = double>
struct PolicyCacheT {
  MlpCacheT<Scalar> trunk;
  MatrixX<Scalar> noise;        // n x B, the raw normal draws
  MatrixX<Scalar> mean;         // n x B
  MatrixX<Scalar> log_std_raw;  // n x B, before clamping
  MatrixX<Scalar> log_std;      // n x B, clamped
  MatrixX<Scalar> std_dev;      // n x B
  MatrixX<Scalar> pre_squash;   // n x B, mean + std*noise
  MatrixX<Scalar> action;       // n x B
  RowVectorX<Scalar> log_prob;  // 1 x B
};

// Reparameterized batch sample: action = tanh(mean + std*noise), log_prob =
// Gaussian log-density of the pre-squash point minus the tanh change-of-
// variables correction.  Deterministic given (states, noise).
template <typename Scalar, typename D1, typename D2>
void policy_sample_batch(const GaussianTanhPolicyT<Scalar>& pol,
                         const Eigen::MatrixBase<D1>& states,
                         const Eigen::MatrixBase<D2>& noise,
                         PolicyCacheT<Scalar>& cache) {
  const int n = pol.action_dim;
  if (noise.rows() != n || noise.cols() != states.cols())
    throw std::invalid_argument("policy: noise shape must be action_dim x batch");
  const MatrixX<Scalar> head = mlp_forward_batch(pol.trunk, states, cache.trunk);
  const Eigen::Index batch = states.cols();

  cache.noise = noise;
  cache.mean = head.topRows(n);
  cache.log_std_raw = head.bottomRows(n);
  cache.log_std = cache.log_std_raw.array()
                      .max(Scalar(kLogStdMin))
                      .min(Scalar(kLogStdMax));
  cache.std_dev = cache.log_std.array().exp();
  cache.pre_squash = cache.mean + cache.std_dev.cwiseProduct(cache.noise);
  // tanh rounds to exactly +-1.0 for |u| > ~19; pull such saturated values
  // one step inside so emitted actions are always strictly within (-1, 1).
  constexpr Scalar kLimit = Scalar(1) - Scalar(1e-15);
  cache.action =
      cache.pre_squash.array().tanh().min(kLimit).max(-kLimit).matrix();

  constexpr Scalar kHalfLog2Pi = Scalar(0.91893853320467274178032973640562L);
  cache.log_prob.resize(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Scalar acc = Scalar(0);
    for (int i = 0; i < n; ++i) {
      acc += -cache.log_std(i, b) - kHalfLog2Pi -
             Scalar(0.5) * cache.noise(i, b) * cache.noise(i, b);
      acc -= detail::log_one_minus_tanh_sq(cache.pre_squash(i, b));
    }
    cache.log_prob(b) = acc;
  }
}

template <typename Scalar = double>
struct PolicySampleT {
  VectorX<Scalar> action;
  Scalar log_prob;
};

using PolicySample = PolicySampleT<double>;

template <typename Scalar, typename D1, typename D2>
PolicySampleT<Scalar> policy_sample(const GaussianTanhPolicyT<Scalar>& pol,
                                    const Eigen::MatrixBase<D1>& state,
                                    const Eigen::MatrixBase<D2>& noise) {
  PolicyCacheT<Scalar> cache;
  policy_sample_batch(pol, state.reshaped(state.size(), 1),
                      noise.reshaped(noise.size(), 1), cache);
  return {cache.action.col(0), cache.log_prob(0)};
}

// Mode of the squashed Gaussian: the noise-free action tanh(mean(s)).
template <typename Scalar, typename Derived>
VectorX<Scalar> policy_mean_action(const GaussianTanhPolicyT<Scalar>& pol,
                                   const Eigen::MatrixBase<Derived>& state) {
  const VectorX<Scalar> head =
      mlp_forward(pol.trunk, state.reshaped(state.size(), 1));
  return head.head(pol.action_dim).array().tanh();
}

template <typename Scalar = double>
struct PolicyBatchGradT {
  VectorX<Scalar> d_params;  // trunk parameters, summed over the batch
  MatrixX<Scalar> d_state;   // obs_dim x B, per-sample
};

// Reverse pass through sampling: given dL/d_action and dL/d_log_prob for
// each sample, produce trunk parameter gradients and state gradients.
//
// With the noise held fixed (reparameterization), the Gaussian density term
// reduces to -log_std - const - noise^2/2, so its only head dependence is
// the -1 on log_std; the pre-squash point u = mean + std*noise carries the
// rest, including the tanh correction whose u-derivative is 2 - 4*sigmoid(-2u).
// The log-std clamp passes gradient only where the raw value lies inside
// [kLogStdMin, kLogStdMax] (boundary inclusive).
template <typename Scalar, typename D1, typename D2>
PolicyBatchGradT<Scalar> policy_backward_batch(
    const GaussianTanhPolicyT<Scalar>& pol, const PolicyCacheT<Scalar>& cache,
    const Eigen::MatrixBase<D1>& d_action,
    const Eigen::MatrixBase<D2>& d_log_prob) {
  const int n = pol.action_dim;
  const Eigen::Index batch = cache.action.cols();
  if (d_action.rows() != n || d_action.cols() != batch ||
      d_log_prob.size() != batch)
    throw std::invalid_argument("policy: upstream gradient shape mismatch");

  MatrixX<Scalar> head_grad(2 * n, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int i = 0; i < n; ++i) {
      const Scalar u = cache.pre_squash(i, b);
      const Scalar a = cache.action(i, b);
      const Scalar d_u =
          d_action(i, b) * (Scalar(1) - a * a) +
          d_log_prob(b) *
              (Scalar(2) - Scalar(4) * detail::sigmoid(Scalar(-2) * u));
      const Scalar d_log_std =
          d_u * cache.std_dev(i, b) * cache.noise(i, b) - d_log_prob(b);
      const bool inside = cache.log_std_raw(i, b) >= Scalar(kLogStdMin) &&
                          cache.log_std_raw(i, b) <= Scalar(kLogStdMax);
      head_grad(i, b) = d_u;
      head_grad(n + i, b) = inside ? d_log_std : Scalar(0);
    }
  }
  const auto trunk_grad = mlp_backward_batch(pol.trunk, cache.trunk, head_grad);
  return {trunk_grad.d_params, trunk_grad.d_input};
}

}  // namespace scrl::diff
