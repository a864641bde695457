#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "scrl/mdp/finite_mdp.hpp"
#include "scrl/mdp/mdp_io.hpp"
#include "scrl/mdp/sc_solver.hpp"
#include "scrl/mdp/wasserstein.hpp"
#include "test_util.hpp"

using namespace scrl;
using namespace testutil;

namespace {

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

// Follows the deterministic (policy, mdp) pair from `start`, returning the
// sequence of visited states.
std::vector<int> rollout_states(const FiniteMdp& m, const TabularPolicy& pi,
                                int start, int steps) {
  std::vector<int> visited{start};
  int s = start;
  for (int k = 0; k < steps; ++k) {
    int a = 0;
    pi.row(s).maxCoeff(&a);
    int t = 0;
    m.transition.row(m.row(s, a)).maxCoeff(&t);
    s = t;
    visited.push_back(s);
  }
  return visited;
}

}  // namespace

TEST_CASE("finite mdp validation rejects malformed inputs") {
  Rng rng(1001);
  FiniteMdp good = random_mdp_sized(rng, 4, 2, 0.9);
  CHECK_NOTHROW(good.validate());

  FiniteMdp bad = good;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.transition(0, 0) += 1e-6;  // row no longer sums to 1
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.reward(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.embedding.resize(3, 1);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("ball membership enumerates embedded neighborhoods") {
  FiniteMdp m;
  m.n_states = 3;
  m.n_actions = 1;
  m.gamma = 0.9;
  m.reward = Eigen::MatrixXd::Zero(3, 1);
  m.transition = Eigen::MatrixXd::Identity(3, 3);
  m.embedding.resize(3, 1);
  m.embedding << 0, 1, 2;
  m.validate();

  SUBCASE("epsilon 0 keeps only the state itself") {
    for (int s = 0; s < 3; ++s)
      CHECK(ball_members(m, EpsilonBall{0.0, Metric::linf}, s) ==
            std::vector<int>{s});
  }
  SUBCASE("unit ball on the 3-chain covers everything from the middle") {
    CHECK(ball_members(m, EpsilonBall{1.0, Metric::linf}, 1) ==
          std::vector<int>{0, 1, 2});
    CHECK(ball_members(m, EpsilonBall{1.0, Metric::linf}, 0) ==
          std::vector<int>{0, 1});
  }
  SUBCASE("negative epsilon rejected") {
    CHECK_THROWS_AS(ball_members(m, EpsilonBall{-0.1, Metric::linf}, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("ball membership on non-uniform spacing") {
  FiniteMdp m;
  m.n_states = 5;
  m.n_actions = 1;
  m.gamma = 0.9;
  m.reward = Eigen::MatrixXd::Zero(5, 1);
  m.transition = Eigen::MatrixXd::Identity(5, 5);
  m.embedding.resize(5, 1);
  m.embedding << 0, 0.3, 0.6, 0.9, 1.2;
  m.validate();
  CHECK(ball_members(m, EpsilonBall{0.5, Metric::linf}, 2) ==
        std::vector<int>{1, 2, 3});
}

TEST_CASE("linf and l2 metrics disagree off-axis") {
  FiniteMdp m;
  m.n_states = 4;
  m.n_actions = 1;
  m.gamma = 0.9;
  m.reward = Eigen::MatrixXd::Zero(4, 1);
  m.transition = Eigen::MatrixXd::Identity(4, 4);
  m.embedding.resize(4, 2);
  m.embedding << 0, 0, 1, 0, 0, 1, 1, 1;
  m.validate();
  CHECK(ball_members(m, EpsilonBall{1.0, Metric::linf}, 0) ==
        std::vector<int>{0, 1, 2, 3});
  CHECK(ball_members(m, EpsilonBall{1.0, Metric::l2}, 0) ==
        std::vector<int>{0, 1, 2});  // diagonal corner is sqrt(2) away
}

TEST_CASE("sc bellman operator on hand-checked instances") {
  SUBCASE("epsilon 0, two-state chain, unit rewards, zero table") {
    FiniteMdp m;
    m.n_states = 2;
    m.n_actions = 1;
    m.gamma = 0.9;
    m.reward = Eigen::MatrixXd::Ones(2, 1);
    m.transition.resize(2, 2);
    m.transition << 0, 1, 1, 0;
    m.embedding.resize(2, 1);
    m.embedding << 0, 1;
    m.validate();
    const QTable out =
        sc_bellman_apply(m, uniform_policy(2, 1), EpsilonBall{0.0, Metric::linf},
                         QTable::Zero(2, 1));
    CHECK(out(0, 0) == 1.0);
    CHECK(out(1, 0) == 1.0);
  }

  SUBCASE("ball min picks the worst neighbor value") {
    // All transitions land on the middle state; its unit ball covers the
    // whole 3-chain, so the backup bootstraps from min(V) = 0.
    FiniteMdp m;
    m.n_states = 3;
    m.n_actions = 1;
    m.gamma = 0.9;
    m.reward = Eigen::MatrixXd::Constant(3, 1, 2.0);
    m.transition.resize(3, 3);
    m.transition << 0, 1, 0, 0, 1, 0, 0, 1, 0;
    m.embedding.resize(3, 1);
    m.embedding << 0, 1, 2;
    m.validate();
    QTable q(3, 1);
    q << 0, 5, 10;  // single action, so V = (0, 5, 10)
    const QTable out =
        sc_bellman_apply(m, uniform_policy(3, 1), EpsilonBall{1.0, Metric::linf}, q);
    for (int s = 0; s < 3; ++s) CHECK(out(s, 0) == doctest::Approx(2.0 + 0.9 * 0.0));
    // Shrinking the ball to the middle state alone bootstraps from V(1) = 5.
    const QTable tight =
        sc_bellman_apply(m, uniform_policy(3, 1), EpsilonBall{0.0, Metric::linf}, q);
    for (int s = 0; s < 3; ++s) CHECK(tight(s, 0) == doctest::Approx(2.0 + 0.9 * 5.0));
  }
}

TEST_CASE("sc bellman operator is a gamma-contraction") {
  Rng rng(2002);
  for (int trial = 0; trial < 20; ++trial) {
    const FiniteMdp m = random_mdp(rng);
    const TabularPolicy pi = random_policy(rng, m.n_states, m.n_actions);
    const EpsilonBall ball{rng.uniform(0.0, 1.5),
                           trial % 2 ? Metric::linf : Metric::l2};
    const QTable q1 = random_qtable(rng, m.n_states, m.n_actions);
    const QTable q2 = random_qtable(rng, m.n_states, m.n_actions);
    const double lhs =
        (sc_bellman_apply(m, pi, ball, q1) - sc_bellman_apply(m, pi, ball, q2))
            .cwiseAbs()
            .maxCoeff();
    const double rhs = m.gamma * (q1 - q2).cwiseAbs().maxCoeff();
    CHECK(lhs <= rhs);
  }
}

TEST_CASE("epsilon 0 operator bit-matches the classical operator") {
  Rng rng(2003);
  for (int trial = 0; trial < 10; ++trial) {
    const FiniteMdp m = random_mdp(rng);
    const TabularPolicy pi = random_policy(rng, m.n_states, m.n_actions);
    const QTable q = random_qtable(rng, m.n_states, m.n_actions);
    const QTable sc = sc_bellman_apply(m, pi, EpsilonBall{0.0, Metric::linf}, q);
    CHECK(same_bits(sc, oracle::classical_bellman_apply(m, pi, q)));
  }
}

TEST_CASE("sc policy evaluation") {
  SUBCASE("single self-looping state is a geometric series") {
    FiniteMdp m;
    m.n_states = 1;
    m.n_actions = 1;
    m.gamma = 0.5;
    m.reward = Eigen::MatrixXd::Ones(1, 1);
    m.transition = Eigen::MatrixXd::Ones(1, 1);
    m.embedding = Eigen::MatrixXd::Zero(1, 1);
    m.validate();
    for (double eps : {0.0, 0.5, 10.0}) {
      const auto pe = sc_policy_evaluation(m, uniform_policy(1, 1),
                                           EpsilonBall{eps, Metric::linf});
      CHECK(pe.q(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
    }
  }

  SUBCASE("matches the brute-force fixed point on random instances") {
    Rng rng(2004);
    for (int trial = 0; trial < 6; ++trial) {
      const FiniteMdp m = random_mdp_sized(rng, 4, 3, 0.9);
      const TabularPolicy pi = random_policy(rng, 4, 3);
      const double eps = rng.uniform(0.2, 1.0);
      const auto pe =
          sc_policy_evaluation(m, pi, EpsilonBall{eps, Metric::linf});
      const QTable brute = oracle::brute_force_sc_fixed_point(
          m, pi, eps, Metric::linf, random_qtable(rng, 4, 3), 1e-12);
      CHECK((pe.q - brute).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SUBCASE("epsilon 0 bit-matches classical policy evaluation") {
    Rng rng(2005);
    for (int trial = 0; trial < 5; ++trial) {
      const FiniteMdp m = random_mdp(rng);
      const TabularPolicy pi = random_policy(rng, m.n_states, m.n_actions);
      const auto pe =
          sc_policy_evaluation(m, pi, EpsilonBall{0.0, Metric::linf});
      CHECK(same_bits(pe.q, oracle::classical_policy_evaluation(m, pi)));
    }
  }

  SUBCASE("fixed point is independent of the oracle's initial table") {
    Rng rng(2006);
    const FiniteMdp m = random_mdp_sized(rng, 5, 2, 0.9);
    const TabularPolicy pi = random_policy(rng, 5, 2);
    const EpsilonBall ball{0.4, Metric::linf};
    const auto pe = sc_policy_evaluation(m, pi, ball, 1e-10);
    for (int trial = 0; trial < 3; ++trial) {
      const QTable brute = oracle::brute_force_sc_fixed_point(
          m, pi, ball.epsilon, ball.metric,
          random_qtable(rng, 5, 2, 20.0), 1e-12);
      CHECK((pe.q - brute).cwiseAbs().maxCoeff() < 2e-9);
    }
  }

  SUBCASE("sweep cap raises a convergence error carrying the residual") {
    Rng rng(2007);
    const FiniteMdp m = random_mdp_sized(rng, 3, 2, 0.9);
    const TabularPolicy pi = random_policy(rng, 3, 2);
    try {
      sc_policy_evaluation(m, pi, EpsilonBall{0.0, Metric::linf}, 1e-10, 3);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.residual() > 0.0);
    }
  }
}

TEST_CASE("sc greedy improvement") {
  SUBCASE("epsilon 0 recovers the classical greedy policy") {
    Rng rng(2008);
    for (int trial = 0; trial < 5; ++trial) {
      const FiniteMdp m = random_mdp(rng);
      const QTable q = random_qtable(rng, m.n_states, m.n_actions);
      CHECK(same_bits(sc_greedy_improvement(m, q, EpsilonBall{0.0, Metric::linf}),
                      oracle::classical_greedy(m, q)));
    }
  }

  SUBCASE("uniformly dominant action survives the ball minimum") {
    Rng rng(2009);
    const FiniteMdp m = random_mdp_sized(rng, 4, 3, 0.9);
    QTable q = random_qtable(rng, 4, 3);
    q.col(1).array() = q.maxCoeff() + 1.0;  // action 1 dominates everywhere
    const TabularPolicy pi =
        sc_greedy_improvement(m, q, EpsilonBall{0.8, Metric::linf});
    for (int s = 0; s < 4; ++s) CHECK(pi(s, 1) == 1.0);
  }

  SUBCASE("a neighbor's weakness flips the chosen action") {
    // At state 0, action 0 looks best locally (10 vs 1) but collapses at the
    // in-ball neighbor (0 vs 5), so the conservative greedy picks action 1.
    FiniteMdp m;
    m.n_states = 2;
    m.n_actions = 2;
    m.gamma = 0.9;
    m.reward = Eigen::MatrixXd::Zero(2, 2);
    m.transition.resize(4, 2);
    m.transition << 1, 0, 1, 0, 0, 1, 0, 1;
    m.embedding.resize(2, 1);
    m.embedding << 0, 1;
    m.validate();
    QTable q(2, 2);
    q << 10, 1, 0, 5;
    const TabularPolicy wide =
        sc_greedy_improvement(m, q, EpsilonBall{1.0, Metric::linf});
    CHECK(wide(0, 1) == 1.0);
    const TabularPolicy tight =
        sc_greedy_improvement(m, q, EpsilonBall{0.0, Metric::linf});
    CHECK(tight(0, 0) == 1.0);
  }

  SUBCASE("ties break toward the lowest action index") {
    Rng rng(2010);
    const FiniteMdp m = random_mdp_sized(rng, 3, 3, 0.9);
    const QTable q = QTable::Zero(3, 3);
    const TabularPolicy pi =
        sc_greedy_improvement(m, q, EpsilonBall{0.5, Metric::linf});
    for (int s = 0; s < 3; ++s) CHECK(pi(s, 0) == 1.0);
  }
}

TEST_CASE("sc policy iteration") {
  SUBCASE("epsilon 0 reproduces classical policy iteration exactly") {
    Rng rng(2011);
    for (int trial = 0; trial < 5; ++trial) {
      const FiniteMdp m = random_mdp_sized(rng, 5, 3, 0.9);
      const auto sc = sc_policy_iteration(m, EpsilonBall{0.0, Metric::linf});
      const auto classical = oracle::classical_policy_iteration(m);
      CHECK(sc.converged);
      CHECK(same_bits(sc.policy, classical.first));
      CHECK(same_bits(sc.q, classical.second));
    }
  }

  SUBCASE("q tables are pointwise non-decreasing across iterations") {
    Rng rng(2012);
    const double tol = 1e-10;
    for (int trial = 0; trial < 10; ++trial) {
      const FiniteMdp m = random_mdp(rng);
      const EpsilonBall ball{rng.uniform(0.0, 1.0), Metric::linf};
      const double slack = 2.0 * tol / (1.0 - m.gamma);
      TabularPolicy pi = TabularPolicy::Zero(m.n_states, m.n_actions);
      pi.col(0).setOnes();
      QTable prev =
          sc_policy_evaluation(m, pi, ball, tol).q;
      for (int iter = 0; iter < 20; ++iter) {
        const TabularPolicy next = sc_greedy_improvement(m, prev, ball);
        if ((next.array() == pi.array()).all()) break;
        pi = next;
        const QTable q = sc_policy_evaluation(m, pi, ball, tol).q;
        CHECK(((q - prev).array() >= -slack).all());
        prev = q;
      }
    }
  }

  SUBCASE("plateau beats peak once the ball spans a cell") {
    const FiniteMdp m = load_mdp(std::string(SCRL_DATA_DIR) + "/gridworld_plateau.mdp");
    const int start = 4;

    const auto sharp = sc_policy_iteration(m, EpsilonBall{0.0, Metric::linf});
    REQUIRE(sharp.converged);
    const auto sharp_path = rollout_states(m, sharp.policy, start, 30);
    CHECK(sharp_path.back() == 7);  // chases the narrow peak

    const auto safe = sc_policy_iteration(m, EpsilonBall{1.0, Metric::linf});
    REQUIRE(safe.converged);
    const auto safe_path = rollout_states(m, safe.policy, start, 30);
    for (std::size_t k = 10; k < safe_path.size(); ++k) {
      CHECK(safe_path[k] >= 2);
      CHECK(safe_path[k] <= 4);  // settles on the plateau interior
    }

    // Exhaustive enumeration certifies optimality at the start state.
    const auto [best_actions, best_value] =
        oracle::enumerate_best_sc_policy(m, 1.0, Metric::linf, start, 1e-9);
    double pi_value = 0.0;
    for (int a = 0; a < m.n_actions; ++a)
      pi_value += safe.policy(start, a) * safe.q(start, a);
    CHECK(pi_value == doctest::Approx(best_value).epsilon(1e-6));
  }

  SUBCASE("larger balls only lower the evaluated values") {
    Rng rng(2013);
    const double tol = 1e-10;
    for (int trial = 0; trial < 5; ++trial) {
      const FiniteMdp m = random_mdp(rng);
      const TabularPolicy pi = random_policy(rng, m.n_states, m.n_actions);
      const double e1 = rng.uniform(0.0, 0.5);
      const double e2 = e1 + rng.uniform(0.0, 1.0);
      const double slack = 2.0 * tol / (1.0 - m.gamma) + 1e-12;
      const QTable q1 =
          sc_policy_evaluation(m, pi, EpsilonBall{e1, Metric::linf}, tol).q;
      const QTable q2 =
          sc_policy_evaluation(m, pi, EpsilonBall{e2, Metric::linf}, tol).q;
      CHECK(((q2 - q1).array() <= slack).all());
    }
  }
}

TEST_CASE("wasserstein dual backup") {
  SUBCASE("lambda 0 alone bootstraps from the unconstrained worst value") {
    Rng rng(2014);
    const FiniteMdp m = random_mdp_sized(rng, 5, 2, 0.9);
    const TabularPolicy pi = random_policy(rng, 5, 2);
    const QTable q = random_qtable(rng, 5, 2);
    const QTable out = wasserstein_dual_backup(m, pi, q, 0.3, 1, {0.0});
    const double vmin = policy_values(q, pi).minCoeff();
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 2; ++a)
        CHECK(out(s, a) == doctest::Approx(m.reward(s, a) + m.gamma * vmin));
  }

  SUBCASE("epsilon 0 with a huge lambda pins the next state") {
    Rng rng(2015);
    const FiniteMdp m = random_mdp_sized(rng, 5, 2, 0.9);
    const TabularPolicy pi = random_policy(rng, 5, 2);
    const QTable q = random_qtable(rng, 5, 2);
    const QTable out = wasserstein_dual_backup(m, pi, q, 0.0, 1, {0.0, 1e9});
    const QTable classical = oracle::classical_bellman_apply(m, pi, q);
    CHECK((out - classical).cwiseAbs().maxCoeff() < 1e-7);
  }

  SUBCASE("matches the ball operator on deterministic convex instances") {
    Rng rng(2016);
    const double dlambda = 1e-3;
    std::vector<double> grid;
    for (double l = 0.0; l <= 12.0; l += dlambda) grid.push_back(l);
    for (int trial = 0; trial < 4; ++trial) {
      const int S = 6 + static_cast<int>(rng.uniform_int(6));
      const FiniteMdp m = random_deterministic_line_mdp(rng, S, 3, 0.9);
      // One-hot policy on action 0 and a convex profile in column 0 make
      // V_pi exactly the convex sequence.
      TabularPolicy pi = TabularPolicy::Zero(S, 3);
      pi.col(0).setOnes();
      const auto profile = random_convex_profile(rng, S, 0.25, 8.0);
      QTable q = random_qtable(rng, S, 3);
      for (int s = 0; s < S; ++s) q(s, 0) = profile[s];

      const double eps = 0.25 * (1 + rng.uniform_int(3));
      const QTable ball_out =
          sc_bellman_apply(m, pi, EpsilonBall{eps, Metric::linf}, q);
      const QTable dual_out = wasserstein_dual_backup(m, pi, q, eps, 1, grid);

      double dmax = 0.0;
      for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
          dmax = std::max(dmax, std::abs(embed_distance(m, i, j, Metric::linf) - eps));
      const double tol = m.gamma * 0.5 * dlambda * dmax + 1e-9;
      CHECK((ball_out - dual_out).cwiseAbs().maxCoeff() <= tol);
    }
  }

  SUBCASE("input validation") {
    Rng rng(2017);
    const FiniteMdp m = random_mdp_sized(rng, 3, 2, 0.9);
    const TabularPolicy pi = random_policy(rng, 3, 2);
    const QTable q = random_qtable(rng, 3, 2);
    CHECK_THROWS_AS(wasserstein_dual_backup(m, pi, q, 0.1, 1, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(wasserstein_dual_backup(m, pi, q, 0.1, 1, {1.0, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(wasserstein_dual_backup(m, pi, q, 0.1, 0, {0.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("duality gap check") {
  std::vector<double> lambda_grid;
  for (double l = 0.0; l <= 10.0; l += 1e-3) lambda_grid.push_back(l);

  SUBCASE("constant profile: primal equals dual equals the constant") {
    const std::vector<double> v(101, 3.25);
    const auto r = duality_gap_check(v, 50, 0.01, 0.3, 1, lambda_grid);
    CHECK(r.primal == 3.25);
    CHECK(r.dual == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(r.dual <= r.primal);
  }

  SUBCASE("absolute value centered at its kink") {
    std::vector<double> v(401);
    for (int i = 0; i < 401; ++i) v[i] = std::abs((i - 200) * 0.01);
    const auto r = duality_gap_check(v, 200, 0.01, 0.5, 1, lambda_grid);
    CHECK(r.primal == 0.0);
    CHECK(r.dual == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("quadratic profile reproduces the hand value") {
    std::vector<double> v(401);
    for (int i = 0; i < 401; ++i) {
      const double x = -2.0 + i * 0.01;
      v[i] = x * x;
    }
    const auto r = duality_gap_check(v, 300, 0.01, 0.3, 1, lambda_grid);
    CHECK(r.primal == doctest::Approx(0.49).epsilon(1e-9));
    CHECK(std::abs(r.primal - r.dual) < 1e-3);
    CHECK(r.dual <= r.primal);
  }

  SUBCASE("weak duality holds on arbitrary profiles") {
    Rng rng(2018);
    std::vector<double> coarse;
    for (double l = 0.0; l <= 10.0; l += 0.05) coarse.push_back(l);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> v(41);
      for (auto& x : v) x = rng.normal(0.0, 3.0);
      const int center = static_cast<int>(rng.uniform_int(41));
      const double eps = rng.uniform(0.0, 0.5);
      const auto r =
          duality_gap_check(v, center, 0.05, eps, 1, coarse, false);
      CHECK(r.dual <= r.primal + 1e-12);
    }
  }

  SUBCASE("non-convex profiles are rejected when convexity is required") {
    std::vector<double> v(21);
    for (int i = 0; i < 21; ++i) v[i] = -std::pow(i - 10.0, 2);
    CHECK_THROWS_AS(duality_gap_check(v, 10, 1.0, 2.0, 1, lambda_grid),
                    std::invalid_argument);
  }

  SUBCASE("random convex profiles close the gap at grid resolution") {
    Rng rng(2019);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 201;
      const double h = 0.01;
      const auto v = random_convex_profile(rng, n, h, 8.0);
      const int center = 40 + static_cast<int>(rng.uniform_int(121));
      const int k = 3 + static_cast<int>(rng.uniform_int(30));
      const double eps = k * h;
      const auto r = duality_gap_check(v, center, h, eps, 1, lambda_grid);
      CHECK(r.dual <= r.primal + 1e-12);
      CHECK(r.primal - r.dual < 1e-3);
    }
  }
}

TEST_CASE("mdp text format") {
  SUBCASE("bundled files parse and validate") {
    const FiniteMdp grid = load_mdp(std::string(SCRL_DATA_DIR) + "/gridworld_plateau.mdp");
    CHECK(grid.n_states == 9);
    CHECK(grid.n_actions == 3);
    CHECK(grid.gamma == 0.9);
    CHECK(grid.reward(7, 1) == 10.0);
    CHECK(grid.reward(6, 0) == 0.0);
    CHECK(grid.transition(grid.row(3, 2), 4) == 1.0);

    const FiniteMdp chain = load_mdp(std::string(SCRL_DATA_DIR) + "/chain5.mdp");
    CHECK(chain.n_states == 5);
    CHECK(chain.embedding(4, 0) == 2.0);
  }

  SUBCASE("parse errors carry line numbers") {
    const std::string text =
        "states 2 actions 1 gamma 0.9 dim 1\n"
        "embed 0 0\n"
        "embed 1 1\n"
        "p 0 0 5 1\n";  // next-state index out of range
    std::istringstream in(text);
    try {
      parse_mdp(in, "bad.mdp");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
      CHECK(std::string(e.what()).find("bad.mdp:4") != std::string::npos);
    }
  }

  SUBCASE("unknown directives and duplicates are rejected") {
    {
      std::istringstream in("states 1 actions 1 gamma 0.9 dim 1\nembd 0 0\n");
      CHECK_THROWS_AS(parse_mdp(in), ParseError);
    }
    {
      std::istringstream in(
          "states 1 actions 1 gamma 0.9 dim 1\nembed 0 0\nembed 0 0\n");
      CHECK_THROWS_AS(parse_mdp(in), ParseError);
    }
    {
      std::istringstream in(
          "states 1 actions 1 gamma 0.9 dim 1\nembed 0 0\np 0 0 0 0.4\np 0 0 0 0.6\n");
      CHECK_THROWS_AS(parse_mdp(in), ParseError);
    }
  }

  SUBCASE("semantic validation failures surface after parsing") {
    std::istringstream in(
        "states 2 actions 1 gamma 0.9 dim 1\n"
        "embed 0 0\n"
        "embed 1 1\n"
        "p 0 0 1 0.5\n"
        "p 1 0 0 1\n");
    CHECK_THROWS_AS(parse_mdp(in), std::invalid_argument);
  }

  SUBCASE("csv emitters produce the documented layout") {
    QTable q(2, 2);
    q << 1.5, -2.0, 0.25, 4.0;
    std::ostringstream out;
    write_values_csv(out, q);
    CHECK(out.str() ==
          "state,action,value\n0,0,1.5\n0,1,-2\n1,0,0.25\n1,1,4\n");
    TabularPolicy pi(1, 2);
    pi << 0.5, 0.5;
    std::ostringstream pout;
    write_policy_csv(pout, pi);
    CHECK(pout.str() == "state,action,prob\n0,0,0.5\n0,1,0.5\n");
  }
}
