#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "scrl/mdp/finite_mdp.hpp"
#include "scrl/mdp/sc_solver.hpp"

namespace scrl {

namespace detail {
template <typename Scalar>
Scalar dist_pow(Scalar d, int p_order) {
  if (p_order == 1) return d;
  if (p_order == 2) return d * d;
  return std::pow(d, Scalar(p_order));
}

template <typename Scalar>
void check_lambda_grid(const std::vector<Scalar>& grid) {
  if (grid.empty())
    throw std::invalid_argument("lambda grid: must be non-empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= Scalar(0)))
      throw std::invalid_argument("lambda grid: entries must be >= 0");
    if (i > 0 && grid[i] < grid[i - 1])
      throw std::invalid_argument("lambda grid: must be sorted ascending");
  }
}
}  // namespace detail

// Robust backup through the Lagrangian dual of the Wasserstein ball:
//
//   out(s,a) = r(s,a) + γ · max_{λ ∈ grid} Σ_{s̃} p(s̃|s,a) ·
//              min_{s'} [ V_π(s') + λ(d(s', s̃)^p − ε) ]
//
// The inner minimum enumerates all states exactly; λ is searched on the
// supplied grid (the objective is concave in λ, so a dense grid carries a
// certified resolution bound).  Distances are taken between state embeddings
// under `metric`, matching the ε-ball operators so that the two backups are
// comparable on the same MDP.
template <typename Scalar, typename DP, typename DQ>
QTableT<Scalar> wasserstein_dual_backup(const FiniteMdpT<Scalar>& mdp,
                                        const Eigen::MatrixBase<DP>& policy,
                                        const Eigen::MatrixBase<DQ>& q,
                                        Scalar epsilon, int p_order,
                                        const std::vector<Scalar>& lambda_grid,
                                        Metric metric = Metric::linf) {
  if (epsilon < Scalar(0))
    throw std::invalid_argument("wasserstein_dual_backup: epsilon must be >= 0");
  if (p_order < 1)
    throw std::invalid_argument("wasserstein_dual_backup: p_order must be >= 1");
  detail::check_lambda_grid(lambda_grid);
  validate_policy(mdp, policy);
  validate_qtable(mdp, q);

  const int S = mdp.n_states;
  const VectorX<Scalar> v = policy_values(q, policy);

  // dpow(s', s̃) = d(s', s̃)^p
  MatrixX<Scalar> dpow(S, S);
  for (int sp = 0; sp < S; ++sp)
    for (int st = 0; st < S; ++st)
      dpow(sp, st) = detail::dist_pow(embed_distance(mdp, sp, st, metric), p_order);

  MatrixX<Scalar> best = MatrixX<Scalar>::Constant(
      S, mdp.n_actions, std::numeric_limits<Scalar>::lowest());
  VectorX<Scalar> m(S);
  for (Scalar lambda : lambda_grid) {
    for (int st = 0; st < S; ++st) {
      Scalar inner = v(0) + lambda * (dpow(0, st) - epsilon);
      for (int sp = 1; sp < S; ++sp) {
        const Scalar cand = v(sp) + lambda * (dpow(sp, st) - epsilon);
        if (cand < inner) inner = cand;
      }
      m(st) = inner;
    }
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < mdp.n_actions; ++a) {
        const auto p = mdp.transition.row(mdp.row(s, a));
        Scalar acc = Scalar(0);
        for (int st = 0; st < S; ++st) acc += p(st) * m(st);
        if (acc > best(s, a)) best(s, a) = acc;
      }
  }

  QTableT<Scalar> out(S, mdp.n_actions);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      out(s, a) = mdp.reward(s, a) + mdp.gamma * best(s, a);
  return out;
}

template <typename Scalar>
struct DualityResultT {
  Scalar primal;
  Scalar dual;
};
using DualityResult = DualityResultT<double>;

// Primal and dual values of the worst-case lookup on a uniform 1-D grid of
// values:
//
//   primal = min { v_i : |x_i − x_c|^p ≤ ε }          (ball form)
//   dual   = max_{λ ∈ grid} min_i [ v_i + λ(|x_i − x_c|^p − ε) ]
//
// Grid coordinates are x_i = i·grid_step.  Ball membership uses a relative
// slack of 1e-12 so that radii like 0.3 on a 0.01-step grid include the
// boundary point despite the usual floating-point drift in 30·0.01.
//
// With require_convex (the default) the sequence must have non-negative
// second differences; the primal/dual match is only claimed for convex
// profiles.  Weak duality (dual ≤ primal) holds for any profile, which can
// be exercised by passing require_convex = false.
template <typename Scalar>
DualityResultT<Scalar> duality_gap_check(const std::vector<Scalar>& v_values,
                                         int center_index, Scalar grid_step,
                                         Scalar epsilon, int p_order,
                                         const std::vector<Scalar>& lambda_grid,
                                         bool require_convex = true) {
  const int n = static_cast<int>(v_values.size());
  if (n < 1) throw std::invalid_argument("duality_gap_check: empty profile");
  if (center_index < 0 || center_index >= n)
    throw std::invalid_argument("duality_gap_check: center index out of range");
  if (!(grid_step > Scalar(0)))
    throw std::invalid_argument("duality_gap_check: grid_step must be > 0");
  if (epsilon < Scalar(0))
    throw std::invalid_argument("duality_gap_check: epsilon must be >= 0");
  if (p_order < 1)
    throw std::invalid_argument("duality_gap_check: p_order must be >= 1");
  detail::check_lambda_grid(lambda_grid);
  if (require_convex) {
    for (int i = 1; i + 1 < n; ++i) {
      const Scalar second = v_values[i - 1] - Scalar(2) * v_values[i] + v_values[i + 1];
      if (second < Scalar(-1e-9))
        throw std::invalid_argument(
            "duality_gap_check: profile is not convex (negative second "
            "difference at index " + std::to_string(i) + ")");
    }
  }

  std::vector<Scalar> dpow(n);
  for (int i = 0; i < n; ++i)
    dpow[i] = detail::dist_pow(
        std::abs(i - center_index) * grid_step, p_order);

  const Scalar slack = epsilon * Scalar(1e-12) + Scalar(1e-15);
  Scalar primal = std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i < n; ++i)
    if (dpow[i] <= epsilon + slack) primal = std::min(primal, v_values[i]);

  Scalar dual = std::numeric_limits<Scalar>::lowest();
  for (Scalar lambda : lambda_grid) {
    Scalar inner = std::numeric_limits<Scalar>::infinity();
    for (int i = 0; i < n; ++i)
      inner = std::min(inner, v_values[i] + lambda * (dpow[i] - epsilon));
    dual = std::max(dual, inner);
  }
  return {primal, dual};
}

}  // namespace scrl
