#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace scrl {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using MatrixXd = MatrixX<double>;
using VectorXd = VectorX<double>;
using RowVectorXd = RowVectorX<double>;

// Q(s,a) tables and π(a|s) tables are dense states × actions matrices.
// Consistency with a given MDP is checked by the validate_* helpers below;
// keeping them plain Eigen types leaves the whole expression toolkit usable.
template <typename Scalar>
using QTableT = MatrixX<Scalar>;
template <typename Scalar>
using TabularPolicyT = MatrixX<Scalar>;
using QTable = QTableT<double>;
using TabularPolicy = TabularPolicyT<double>;

enum class Metric { linf, l2 };

// Finite MDP over embedded states.  The embedding assigns each state a point
// in R^m; disturbance neighborhoods are defined by distances between these
// points.  Transition rows are stored stacked as a (n_states·n_actions) ×
// n_states matrix, row index row(s, a).
template <typename Scalar = double>
struct FiniteMdpT {
  using Matrix = MatrixX<Scalar>;

  int n_states = 0;
  int n_actions = 0;
  Scalar gamma = Scalar(0);
  Matrix reward;      // n_states × n_actions
  Matrix transition;  // (n_states·n_actions) × n_states
  Matrix embedding;   // n_states × m

  int row(int s, int a) const { return s * n_actions + a; }
  int embed_dim() const { return static_cast<int>(embedding.cols()); }

  // Throws std::invalid_argument naming the first violated requirement.
  void validate() const {
    if (n_states < 1 || n_actions < 1)
      throw std::invalid_argument("mdp: n_states and n_actions must be >= 1");
    if (!(gamma > Scalar(0) && gamma < Scalar(1)))
      throw std::invalid_argument("mdp: gamma must lie strictly inside (0,1)");
    if (reward.rows() != n_states || reward.cols() != n_actions)
      throw std::invalid_argument("mdp: reward must be n_states x n_actions");
    if (!reward.allFinite())
      throw std::invalid_argument("mdp: rewards must be finite");
    if (transition.rows() != static_cast<Eigen::Index>(n_states) * n_actions ||
        transition.cols() != n_states)
      throw std::invalid_argument(
          "mdp: transition must be (n_states*n_actions) x n_states");
    if (!transition.allFinite() || (transition.array() < Scalar(0)).any())
      throw std::invalid_argument(
          "mdp: transition probabilities must be finite and non-negative");
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) {
        const Scalar sum = transition.row(row(s, a)).sum();
        if (std::abs(sum - Scalar(1)) > Scalar(1e-12))
          throw std::invalid_argument(
              "mdp: transition row (s=" + std::to_string(s) +
              ", a=" + std::to_string(a) + ") sums to " + std::to_string(sum) +
              ", expected 1 within 1e-12");
      }
    if (embedding.rows() != n_states || embedding.cols() < 1)
      throw std::invalid_argument(
          "mdp: embedding must have one row per state and dimension >= 1");
    if (!embedding.allFinite())
      throw std::invalid_argument("mdp: embedding coordinates must be finite");
  }
};
using FiniteMdp = FiniteMdpT<double>;

// Disturbance neighborhood B_ε(s): all states whose embedding lies within
// epsilon of embedding(s) under the chosen metric.
template <typename Scalar = double>
struct EpsilonBallT {
  Scalar epsilon = Scalar(0);
  Metric metric = Metric::linf;
};
using EpsilonBall = EpsilonBallT<double>;

template <typename Scalar>
Scalar embed_distance(const FiniteMdpT<Scalar>& mdp, int s1, int s2,
                      Metric metric) {
  const auto diff = (mdp.embedding.row(s1) - mdp.embedding.row(s2)).cwiseAbs();
  return metric == Metric::linf ? diff.maxCoeff()
                                : Scalar(diff.matrix().norm());
}

// States within the ball around s, ascending index order; always contains s.
template <typename Scalar>
std::vector<int> ball_members(const FiniteMdpT<Scalar>& mdp,
                              const EpsilonBallT<Scalar>& ball, int s) {
  if (ball.epsilon < Scalar(0))
    throw std::invalid_argument("epsilon ball: epsilon must be >= 0");
  if (s < 0 || s >= mdp.n_states)
    throw std::invalid_argument("ball_members: state index out of range");
  std::vector<int> members;
  for (int t = 0; t < mdp.n_states; ++t)
    if (embed_distance(mdp, t, s, ball.metric) <= ball.epsilon)
      members.push_back(t);
  return members;
}

// Ball membership lists for every state, computed once so that repeated
// operator applications do not redo the O(S^2) distance scan.
template <typename Scalar>
std::vector<std::vector<int>> ball_neighborhoods(
    const FiniteMdpT<Scalar>& mdp, const EpsilonBallT<Scalar>& ball) {
  std::vector<std::vector<int>> hoods(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) hoods[s] = ball_members(mdp, ball, s);
  return hoods;
}

template <typename Scalar, typename DP>
void validate_policy(const FiniteMdpT<Scalar>& mdp,
                     const Eigen::MatrixBase<DP>& policy) {
  if (policy.rows() != mdp.n_states || policy.cols() != mdp.n_actions)
    throw std::invalid_argument("policy: must be n_states x n_actions");
  if (!policy.allFinite() || (policy.array() < Scalar(0)).any())
    throw std::invalid_argument("policy: probabilities must be in [0,1]");
  for (int s = 0; s < mdp.n_states; ++s)
    if (std::abs(policy.row(s).sum() - Scalar(1)) > Scalar(1e-12))
      throw std::invalid_argument("policy: row " + std::to_string(s) +
                                  " does not sum to 1 within 1e-12");
}

template <typename Scalar, typename DQ>
void validate_qtable(const FiniteMdpT<Scalar>& mdp,
                     const Eigen::MatrixBase<DQ>& q) {
  if (q.rows() != mdp.n_states || q.cols() != mdp.n_actions)
    throw std::invalid_argument("qtable: must be n_states x n_actions");
  if (!q.allFinite())
    throw std::invalid_argument("qtable: entries must be finite");
}

}  // namespace scrl
