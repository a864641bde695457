#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scrl/mdp/finite_mdp.hpp"

namespace scrl {

// Raised when a fixed-point iteration hits its sweep cap; carries the last
// sup-norm residual so callers can report how far from convergence it was.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// V_π(s) = Σ_a π(a|s)·q(s,a).
//
// Accumulation runs in ascending action order, and every reduction in this
// file does the same over its own index.  With ε=0 the state-conservative
// operators then reproduce a classical implementation written the obvious
// way bit for bit, which the reduction tests rely on.
template <typename DQ, typename DP>
VectorX<typename DQ::Scalar> policy_values(const Eigen::MatrixBase<DQ>& q,
                                           const Eigen::MatrixBase<DP>& policy) {
  using Scalar = typename DQ::Scalar;
  VectorX<Scalar> v(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    Scalar acc = Scalar(0);
    for (Eigen::Index a = 0; a < q.cols(); ++a) acc += policy(s, a) * q(s, a);
    v(s) = acc;
  }
  return v;
}

// w(s) = min over the neighborhood of s of v; the worst value reachable from
// s under the disturbance.
template <typename Scalar>
VectorX<Scalar> ball_min_values(const VectorX<Scalar>& v,
                                const std::vector<std::vector<int>>& hoods) {
  VectorX<Scalar> w(v.size());
  for (std::size_t s = 0; s < hoods.size(); ++s) {
    Scalar m = v(hoods[s].front());
    for (int t : hoods[s])
      if (v(t) < m) m = v(t);
    w(static_cast<Eigen::Index>(s)) = m;
  }
  return w;
}

// One application of the state-conservative Bellman operator for π:
//   (T q)(s,a) = r(s,a) + γ Σ_{s̃} p(s̃|s,a) · min_{s' ∈ B_ε(s̃)} V_π(s')
// with precomputed neighborhoods.
template <typename Scalar, typename DP, typename DQ>
QTableT<Scalar> sc_bellman_apply(const FiniteMdpT<Scalar>& mdp,
                                 const Eigen::MatrixBase<DP>& policy,
                                 const std::vector<std::vector<int>>& hoods,
                                 const Eigen::MatrixBase<DQ>& q) {
  const VectorX<Scalar> w = ball_min_values(policy_values(q, policy), hoods);
  QTableT<Scalar> out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto p = mdp.transition.row(mdp.row(s, a));
      Scalar acc = Scalar(0);
      for (int t = 0; t < mdp.n_states; ++t) acc += p(t) * w(t);
      out(s, a) = mdp.reward(s, a) + mdp.gamma * acc;
    }
  return out;
}

template <typename Scalar, typename DP, typename DQ>
QTableT<Scalar> sc_bellman_apply(const FiniteMdpT<Scalar>& mdp,
                                 const Eigen::MatrixBase<DP>& policy,
                                 const EpsilonBallT<Scalar>& ball,
                                 const Eigen::MatrixBase<DQ>& q) {
  return sc_bellman_apply(mdp, policy, ball_neighborhoods(mdp, ball), q);
}

template <typename Scalar>
struct PeResultT {
  QTableT<Scalar> q;
  int sweeps = 0;
  Scalar residual = Scalar(0);  // ‖q_k − q_{k-1}‖∞ at termination
};
using PeResult = PeResultT<double>;

// State-conservative policy evaluation: fixed-point iteration of the operator
// from q ≡ 0 until the sup-norm step falls below tol.
template <typename Scalar, typename DP>
PeResultT<Scalar> sc_policy_evaluation(const FiniteMdpT<Scalar>& mdp,
                                       const Eigen::MatrixBase<DP>& policy,
                                       const EpsilonBallT<Scalar>& ball,
                                       Scalar tol = Scalar(1e-10),
                                       long max_sweeps = 1000000) {
  if (!(tol > Scalar(0)))
    throw std::invalid_argument("sc_policy_evaluation: tol must be > 0");
  const auto hoods = ball_neighborhoods(mdp, ball);
  QTableT<Scalar> q = QTableT<Scalar>::Zero(mdp.n_states, mdp.n_actions);
  Scalar residual = Scalar(0);
  for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
    QTableT<Scalar> next = sc_bellman_apply(mdp, policy, hoods, q);
    residual = (next - q).cwiseAbs().maxCoeff();
    q.swap(next);
    if (residual < tol)
      return {std::move(q), static_cast<int>(sweep), residual};
  }
  throw ConvergenceError(
      "sc_policy_evaluation: no convergence after " +
          std::to_string(max_sweeps) +
          " sweeps, last residual " + std::to_string(static_cast<double>(residual)),
      static_cast<double>(residual));
}

// Greedy improvement: for each state pick the action maximizing the worst
// in-ball value, π'(s) = argmax_a min_{s' ∈ B_ε(s)} q(s', a).  The argmax is
// taken over deterministic policies; ties break toward the lowest action
// index.  Returns a one-hot policy table.
template <typename Scalar, typename DQ>
TabularPolicyT<Scalar> sc_greedy_improvement(const FiniteMdpT<Scalar>& mdp,
                                             const Eigen::MatrixBase<DQ>& q,
                                             const EpsilonBallT<Scalar>& ball) {
  validate_qtable(mdp, q);
  const auto hoods = ball_neighborhoods(mdp, ball);
  TabularPolicyT<Scalar> policy =
      TabularPolicyT<Scalar>::Zero(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    int best_a = 0;
    Scalar best = std::numeric_limits<Scalar>::lowest();
    for (int a = 0; a < mdp.n_actions; ++a) {
      Scalar m = q(hoods[s].front(), a);
      for (int t : hoods[s])
        if (q(t, a) < m) m = q(t, a);
      if (m > best) {
        best = m;
        best_a = a;
      }
    }
    policy(s, best_a) = Scalar(1);
  }
  return policy;
}

template <typename Scalar>
struct PiResultT {
  TabularPolicyT<Scalar> policy;
  QTableT<Scalar> q;
  int iterations = 0;           // improvement rounds performed
  Scalar final_residual = Scalar(0);  // residual of the last evaluation
  bool converged = false;       // true iff the policy stopped changing
};
using PiResult = PiResultT<double>;

// State-conservative policy iteration: alternate evaluation and greedy
// improvement until the policy is unchanged or max_iters is reached.
//
// The initial policy is the deterministic lowest-index action everywhere.
// Starting deterministic matters: the improvement step searches only the
// deterministic policies, and against a mixed incumbent the best single
// action can score below the mixture on the worst-case objective, which
// would break the monotonicity guarantee on the very first round.  From a
// deterministic start every incumbent is itself a candidate, so each round's
// winner is at least as good.
template <typename Scalar>
PiResultT<Scalar> sc_policy_iteration(const FiniteMdpT<Scalar>& mdp,
                                      const EpsilonBallT<Scalar>& ball,
                                      Scalar tol = Scalar(1e-10),
                                      int max_iters = 1000) {
  if (max_iters < 1)
    throw std::invalid_argument("sc_policy_iteration: max_iters must be >= 1");
  TabularPolicyT<Scalar> policy =
      TabularPolicyT<Scalar>::Zero(mdp.n_states, mdp.n_actions);
  policy.col(0).setOnes();

  PiResultT<Scalar> result;
  for (int iter = 1; iter <= max_iters; ++iter) {
    PeResultT<Scalar> pe = sc_policy_evaluation(mdp, policy, ball, tol);
    TabularPolicyT<Scalar> improved = sc_greedy_improvement(mdp, pe.q, ball);
    result.q = std::move(pe.q);
    result.final_residual = pe.residual;
    result.iterations = iter;
    if ((improved.array() == policy.array()).all()) {
      result.policy = std::move(policy);
      result.converged = true;
      return result;
    }
    policy = std::move(improved);
  }
  result.policy = std::move(policy);
  result.converged = false;
  return result;
}

}  // namespace scrl
