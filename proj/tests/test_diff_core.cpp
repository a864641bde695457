#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "scrl/diff/adam.hpp"
#include "scrl/diff/checkpoint.hpp"
#include "scrl/diff/mlp.hpp"
#include "scrl/diff/policy.hpp"
#include "scrl/rng.hpp"

#include "diff_oracles.hpp"

using namespace scrl;
using namespace scrl::diff;

namespace {

template <typename D1, typename D2>
bool same_bits(const Eigen::MatrixBase<D1>& a, const Eigen::MatrixBase<D2>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double x = a(i, j), y = b(i, j);
      if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
    }
  return true;
}

// True when every hidden pre-activation sits at least `margin` away from the
// ReLU kink, so finite-difference probes stay on one linear piece.
bool hidden_margin_ok(const Mlp& net, const VectorXd& x, double margin) {
  MlpCacheT<double> cache;
  mlp_forward_batch(net, x, cache);
  for (int l = 0; l + 1 < net.n_layers(); ++l)
    if (cache.pre[l].array().abs().minCoeff() <= margin) return false;
  return true;
}

VectorXd sample_input_with_margin(Rng& rng, const Mlp& net, double margin) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    VectorXd x(net.in_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
    if (hidden_margin_ok(net, x, margin)) return x;
  }
  FAIL("could not find an input clear of ReLU kinks");
  return VectorXd::Zero(net.in_dim());
}

std::vector<int> random_sizes(Rng& rng) {
  std::vector<int> sizes;
  sizes.push_back(1 + static_cast<int>(rng.uniform_int(5)));
  const int depth = 1 + static_cast<int>(rng.uniform_int(3));
  for (int d = 0; d < depth; ++d)
    sizes.push_back(1 + static_cast<int>(rng.uniform_int(8)));
  sizes.push_back(1 + static_cast<int>(rng.uniform_int(4)));
  return sizes;
}

}  // namespace

TEST_CASE("mlp layout and validation") {
  SUBCASE("parameter count and views address the flat vector") {
    CHECK(Mlp::param_count({2, 16, 1}) == 2 * 16 + 16 + 16 + 1);

    Rng rng(101, stream::kInit);
    Mlp net = mlp_init(rng, {3, 4, 2});
    CHECK(net.weight_offset(0) == 0);
    CHECK(net.bias_offset(0) == 12);
    CHECK(net.weight_offset(1) == 16);
    CHECK(net.bias_offset(1) == 24);
    CHECK(net.params.size() == 26);

    net.weight(1)(1, 2) = 42.0;
    CHECK(net.params[net.weight_offset(1) + 2 * 2 + 1] == 42.0);
    net.bias(0)(3) = -7.0;
    CHECK(net.params[15] == -7.0);
  }

  SUBCASE("validation rejects inconsistent networks") {
    Rng rng(102, stream::kInit);
    Mlp net = mlp_init(rng, {3, 4, 2});
    Mlp bad = net;
    bad.params.conservativeResize(10);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = net;
    bad.params[5] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    Mlp short_net;
    short_net.layer_sizes = {3};
    CHECK_THROWS_AS(short_net.validate(), std::invalid_argument);

    Mlp zero_width;
    zero_width.layer_sizes = {3, 0, 1};
    zero_width.params = VectorXd::Zero(1);
    CHECK_THROWS_AS(zero_width.validate(), std::invalid_argument);
  }

  SUBCASE("shape mismatches raise") {
    Rng rng(103, stream::kInit);
    const Mlp net = mlp_init(rng, {3, 4, 2});
    CHECK_THROWS_AS(mlp_forward(net, VectorXd::Zero(5)), std::invalid_argument);
    CHECK_THROWS_AS(mlp_backward(net, VectorXd::Zero(3), VectorXd::Ones(3)),
                    std::invalid_argument);
    MlpCacheT<double> cache;
    mlp_forward_batch(net, MatrixXd::Zero(3, 4), cache);
    CHECK_THROWS_AS(mlp_backward_batch(net, cache, MatrixXd::Ones(2, 5)),
                    std::invalid_argument);
  }
}

TEST_CASE("mlp forward pass") {
  SUBCASE("zero network maps everything to zero") {
    Mlp net;
    net.layer_sizes = {3, 4, 2};
    net.params = VectorXd::Zero(Mlp::param_count(net.layer_sizes));
    const VectorXd y = mlp_forward(net, VectorXd::Constant(3, 1.7));
    CHECK(y.isZero(0.0));
  }

  SUBCASE("single affine layer") {
    Mlp net;
    net.layer_sizes = {1, 1};
    net.params.resize(2);
    net.params << 2.0, 1.0;  // W = [[2]], b = [1]
    const VectorXd y = mlp_forward(net, VectorXd::Constant(1, 3.0));
    CHECK(y(0) == 7.0);
  }

  SUBCASE("seeded 2-16-1 net matches a straight-line re-implementation") {
    Rng rng(104, stream::kInit);
    const Mlp net = mlp_init(rng, {2, 16, 1});
    VectorXd x(2);
    x << 0.5, -0.2;
    const VectorXd y = mlp_forward(net, x);
    const std::vector<double> want =
        oracle::straight_line_forward(net, {0.5, -0.2});
    REQUIRE(want.size() == 1);
    CHECK(y(0) == doctest::Approx(want[0]).epsilon(1e-12));
  }

  SUBCASE("repeat calls and batched columns agree") {
    Rng rng(105, stream::kInit);
    const Mlp net = mlp_init(rng, {4, 8, 8, 3});
    MatrixXd batch(4, 5);
    Rng xs(106);
    for (Eigen::Index j = 0; j < batch.cols(); ++j)
      for (Eigen::Index i = 0; i < batch.rows(); ++i)
        batch(i, j) = xs.normal();

    const MatrixXd out1 = mlp_forward_batch(net, batch);
    const MatrixXd out2 = mlp_forward_batch(net, batch);
    CHECK(same_bits(out1, out2));
    for (Eigen::Index j = 0; j < batch.cols(); ++j) {
      const VectorXd single = mlp_forward(net, batch.col(j));
      CHECK((single - out1.col(j)).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("mlp backward pass") {
  SUBCASE("linear net gradients are exact") {
    Mlp net;
    net.layer_sizes = {3, 1};
    net.params.resize(4);
    net.params << 0.5, -1.25, 2.0, 0.75;  // W = [0.5 -1.25 2.0], b = 0.75
    VectorXd x(3);
    x << 1.0, 2.0, -0.5;
    const VectorXd upstream = VectorXd::Constant(1, 1.0);

    const GradientBundle g = mlp_backward(net, x, upstream);
    CHECK(g.d_input(0) == 0.5);
    CHECK(g.d_input(1) == -1.25);
    CHECK(g.d_input(2) == 2.0);
    CHECK(g.d_params(net.weight_offset(0) + 0) == 1.0);   // dW = x
    CHECK(g.d_params(net.weight_offset(0) + 1) == 2.0);
    CHECK(g.d_params(net.weight_offset(0) + 2) == -0.5);
    CHECK(g.d_params(net.bias_offset(0)) == 1.0);
    CHECK(g.value == doctest::Approx(0.5 - 2.5 - 1.0 + 0.75).epsilon(1e-14));
  }

  SUBCASE("relu subgradient at zero is zero") {
    Mlp net;
    net.layer_sizes = {1, 1, 1};
    net.params.resize(4);
    net.params << 1.0, 0.0, 1.0, 0.0;  // pre-activation equals the input

    const GradientBundle at_kink =
        mlp_backward(net, VectorXd::Zero(1), VectorXd::Ones(1));
    CHECK(at_kink.d_input(0) == 0.0);
    CHECK(at_kink.d_params(net.bias_offset(0)) == 0.0);
    CHECK(at_kink.d_params(net.bias_offset(1)) == 1.0);

    const GradientBundle above =
        mlp_backward(net, VectorXd::Constant(1, 1e-9), VectorXd::Ones(1));
    CHECK(above.d_input(0) == 1.0);
  }

  SUBCASE("input gradients match central differences") {
    Rng rng(107, stream::kInit);
    for (int trial = 0; trial < 10; ++trial) {
      const Mlp net = mlp_init(rng, {3, 8, 8, 2});
      VectorXd x = sample_input_with_margin(rng, net, 1e-3);
      VectorXd upstream(2);
      upstream << rng.normal(), rng.normal();

      const GradientBundle g = mlp_backward(net, x, upstream);
      auto value = [&] {
        double acc = 0.0;
        const VectorXd y = mlp_forward(net, x);
        for (Eigen::Index i = 0; i < y.size(); ++i) acc += upstream(i) * y(i);
        return acc;
      };
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double fd = oracle::central_diff(value, &x[i], 1e-5);
        CHECK(oracle::rel_err(g.d_input(i), fd) < 1e-5);
      }
    }
  }

  SUBCASE("parameter gradients match central differences on 50 coordinates") {
    Rng rng(108, stream::kInit);
    Mlp net = mlp_init(rng, {4, 16, 16, 2});
    const VectorXd x = sample_input_with_margin(rng, net, 1e-3);
    VectorXd upstream(2);
    upstream << 0.8, -1.3;

    const GradientBundle g = mlp_backward(net, x, upstream);
    auto value = [&] {
      double acc = 0.0;
      const VectorXd y = mlp_forward(net, x);
      for (Eigen::Index i = 0; i < y.size(); ++i) acc += upstream(i) * y(i);
      return acc;
    };
    for (int k = 0; k < 50; ++k) {
      const Eigen::Index idx = rng.uniform_int(net.params.size());
      const double fd = oracle::central_diff(value, &net.params[idx], 1e-5);
      CHECK(oracle::rel_err(g.d_params(idx), fd) < 1e-5);
    }
  }

  SUBCASE("invariant: 100 random nets stay under 1e-4 relative error") {
    Rng rng(109, stream::kInit);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Mlp net = mlp_init(rng, random_sizes(rng));
      VectorXd x = sample_input_with_margin(rng, net, 1e-3);
      VectorXd upstream(net.out_dim());
      for (Eigen::Index i = 0; i < upstream.size(); ++i)
        upstream[i] = rng.normal();

      Mlp probe = net;
      const GradientBundle g = mlp_backward(probe, x, upstream);
      auto value = [&] {
        double acc = 0.0;
        const VectorXd y = mlp_forward(probe, x);
        for (Eigen::Index i = 0; i < y.size(); ++i) acc += upstream(i) * y(i);
        return acc;
      };
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double fd = oracle::central_diff(value, &x[i], 1e-5);
        worst = std::max(worst, oracle::rel_err(g.d_input(i), fd));
      }
      for (int k = 0; k < 10; ++k) {
        const Eigen::Index idx = rng.uniform_int(probe.params.size());
        const double fd = oracle::central_diff(value, &probe.params[idx], 1e-5);
        worst = std::max(worst, oracle::rel_err(g.d_params(idx), fd));
      }
    }
    CHECK(worst < 1e-4);
  }

  SUBCASE("batch gradients decompose into per-sample gradients") {
    Rng rng(110, stream::kInit);
    const Mlp net = mlp_init(rng, {5, 8, 3});
    MatrixXd xs(5, 6);
    MatrixXd upstream(3, 6);
    for (Eigen::Index j = 0; j < 6; ++j) {
      for (Eigen::Index i = 0; i < 5; ++i) xs(i, j) = rng.normal();
      for (Eigen::Index i = 0; i < 3; ++i) upstream(i, j) = rng.normal();
    }

    MlpCacheT<double> cache;
    mlp_forward_batch(net, xs, cache);
    const auto batch = mlp_backward_batch(net, cache, upstream);

    VectorXd param_sum = VectorXd::Zero(net.params.size());
    for (Eigen::Index j = 0; j < 6; ++j) {
      const GradientBundle single =
          mlp_backward(net, xs.col(j), upstream.col(j));
      param_sum += single.d_params;
      CHECK((batch.d_input.col(j) - single.d_input).cwiseAbs().maxCoeff() <
            1e-13);
    }
    CHECK((batch.d_params - param_sum).cwiseAbs().maxCoeff() <
          1e-12 * (1.0 + param_sum.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("squashed gaussian policy") {
  SUBCASE("zero noise emits the squashed mean") {
    Rng rng(201, stream::kInit);
    const GaussianTanhPolicy pol = policy_init(rng, 3, {8, 8}, 2);
    VectorXd s(3);
    s << 0.2, -0.4, 1.1;
    const PolicySample out = policy_sample(pol, s, VectorXd::Zero(2));
    const VectorXd head = mlp_forward(pol.trunk, s);
    for (int i = 0; i < 2; ++i) CHECK(out.action(i) == std::tanh(head(i)));
    CHECK(same_bits(out.action, policy_mean_action(pol, s)));
  }

  SUBCASE("sampling is deterministic given state and noise") {
    Rng rng(202, stream::kInit);
    const GaussianTanhPolicy pol = policy_init(rng, 2, {8}, 1);
    VectorXd s(2);
    s << -0.3, 0.9;
    VectorXd noise = VectorXd::Constant(1, 0.57);
    const PolicySample a = policy_sample(pol, s, noise);
    const PolicySample b = policy_sample(pol, s, noise);
    CHECK(same_bits(a.action, b.action));
    CHECK(a.log_prob == b.log_prob);
  }

  SUBCASE("actions stay strictly inside the cube and log-probs finite") {
    Rng rng(203, stream::kInit);
    const GaussianTanhPolicy pol = policy_init(rng, 3, {8, 8}, 2);
    Rng draws(204, stream::kPolicy);
    VectorXd s(3);
    VectorXd noise(2);
    for (int k = 0; k < 100000; ++k) {
      if (k % 1000 == 0)
        for (int i = 0; i < 3; ++i) s[i] = draws.uniform(-3.0, 3.0);
      for (int i = 0; i < 2; ++i) noise[i] = draws.normal();
      const PolicySample out = policy_sample(pol, s, noise);
      REQUIRE(std::isfinite(out.log_prob));
      REQUIRE(out.action.cwiseAbs().maxCoeff() < 1.0);
    }
  }

  SUBCASE("log-std clamp keeps extreme heads finite") {
    // Single affine trunk with zero weights: the head is exactly the bias.
    Mlp trunk;
    trunk.layer_sizes = {1, 2};
    trunk.params.resize(2 * 1 + 2);
    trunk.params << 0.0, 0.0, 0.3, -1000.0;  // mean 0.3, raw log-std -1000
    GaussianTanhPolicy pol{trunk, 1};
    pol.validate();

    const PolicySample tight =
        policy_sample(pol, VectorXd::Zero(1), VectorXd::Constant(1, 1.5));
    CHECK(std::isfinite(tight.log_prob));
    CHECK(std::abs(tight.action(0)) < 1.0);
    // sigma = exp(-20), so the sample barely moves off the mean
    CHECK(tight.action(0) == doctest::Approx(std::tanh(0.3)).epsilon(1e-8));

    pol.trunk.params(3) = 1000.0;  // raw log-std clamps down to +2
    const PolicySample wide =
        policy_sample(pol, VectorXd::Zero(1), VectorXd::Constant(1, 3.0));
    CHECK(std::isfinite(wide.log_prob));
    CHECK(std::abs(wide.action(0)) < 1.0);
  }

  SUBCASE("log-prob is a proper density over the action interval") {
    // Zero-weight affine trunk pins mean 0.4 and log-std -0.3 exactly.
    Mlp trunk;
    trunk.layer_sizes = {1, 2};
    trunk.params.resize(4);
    trunk.params << 0.0, 0.0, 0.4, -0.3;
    const GaussianTanhPolicy pol{trunk, 1};
    const VectorXd s = VectorXd::Zero(1);
    const double mu = 0.4;
    const double sigma = std::exp(-0.3);

    // Substituting a = tanh(u) turns the action integral into one over the
    // pre-squash space; the density comes from policy_sample's log_prob.
    auto integrand = [&](double u) {
      const VectorXd noise = VectorXd::Constant(1, (u - mu) / sigma);
      const PolicySample out = policy_sample(pol, s, noise);
      const double jac = 1.0 - out.action(0) * out.action(0);
      return std::exp(out.log_prob) * jac;
    };
    const double mass =
        oracle::simpson(integrand, mu - 10.0 * sigma, mu + 10.0 * sigma, 4000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));

    // Pointwise cross-check: density equals the derivative of the exact CDF
    // P(A <= a) = Phi((atanh(a) - mu) / sigma).
    for (const double a : {0.1, 0.5, -0.7}) {
      const double u = std::atanh(a);
      const VectorXd noise = VectorXd::Constant(1, (u - mu) / sigma);
      const double density = std::exp(policy_sample(pol, s, noise).log_prob);
      const double h = 1e-6;
      auto cdf = [&](double av) {
        return oracle::norm_cdf((std::atanh(av) - mu) / sigma);
      };
      const double fd = (cdf(a + h) - cdf(a - h)) / (2.0 * h);
      CHECK(density == doctest::Approx(fd).epsilon(1e-4));
    }
  }

  SUBCASE("backward pass matches finite differences") {
    Rng rng(205, stream::kInit);
    GaussianTanhPolicy pol = policy_init(rng, 3, {8}, 2);
    VectorXd s = sample_input_with_margin(rng, pol.trunk, 1e-3);
    MatrixXd noise(2, 1);
    noise << 0.7, -1.2;
    VectorXd c(2);
    c << 1.3, -0.6;
    const double d = 0.85;

    PolicyCacheT<double> cache;
    policy_sample_batch(pol, s, noise, cache);
    REQUIRE(cache.log_std_raw.array().abs().maxCoeff() < 19.0);

    const auto grad = policy_backward_batch(
        pol, cache, (c.array() * 1.0).matrix(),
        RowVectorXd::Constant(1, d));

    auto loss = [&] {
      PolicyCacheT<double> local;
      policy_sample_batch(pol, s, noise, local);
      double acc = 0.0;
      for (int i = 0; i < 2; ++i) acc += c(i) * local.action(i, 0);
      return acc + d * local.log_prob(0);
    };

    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double fd = oracle::central_diff(loss, &s[i], 1e-5);
      CHECK(oracle::rel_err(grad.d_state(i, 0), fd) < 1e-4);
    }
    for (int k = 0; k < 40; ++k) {
      const Eigen::Index idx = rng.uniform_int(pol.trunk.params.size());
      const double fd =
          oracle::central_diff(loss, &pol.trunk.params[idx], 1e-5);
      CHECK(oracle::rel_err(grad.d_params(idx), fd) < 1e-4);
    }
  }

  SUBCASE("validation rejects mismatched trunks") {
    Rng rng(206, stream::kInit);
    GaussianTanhPolicy pol{mlp_init(rng, {3, 8, 3}), 2};
    CHECK_THROWS_AS(pol.validate(), std::invalid_argument);
    pol.action_dim = 0;
    CHECK_THROWS_AS(pol.validate(), std::invalid_argument);
    const GaussianTanhPolicy ok = policy_init(rng, 3, {8}, 1);
    CHECK_THROWS_AS(
        policy_sample(ok, VectorXd::Zero(3), VectorXd::Zero(2)),
        std::invalid_argument);
  }
}

TEST_CASE("adam optimizer") {
  SUBCASE("first step follows the bias-corrected closed form") {
    VectorXd params = VectorXd::Zero(3);
    VectorXd grad(3);
    grad << 1.0, -2.0, 0.5;
    AdamState state = AdamState::zero(3);
    const AdamConfig cfg;
    adam_step<double>(params, grad, state, cfg);
    for (int i = 0; i < 3; ++i) {
      const double want =
          -cfg.lr * grad[i] / (std::abs(grad[i]) + cfg.eps);
      CHECK(params[i] == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(state.step == 1);
  }

  SUBCASE("three steps match a longhand scalar reference") {
    VectorXd params = VectorXd::Constant(2, 0.4);
    AdamState state = AdamState::zero(2);
    const AdamConfig cfg{1e-2, 0.9, 0.999, 1e-8};

    double ref_p[2] = {0.4, 0.4};
    double ref_m[2] = {0.0, 0.0};
    double ref_v[2] = {0.0, 0.0};
    Rng rng(301);
    for (int t = 1; t <= 3; ++t) {
      VectorXd grad(2);
      grad << rng.normal(), rng.normal();
      adam_step<double>(params, grad, state, cfg);
      for (int i = 0; i < 2; ++i) {
        ref_m[i] = 0.9 * ref_m[i] + 0.1 * grad[i];
        ref_v[i] = 0.999 * ref_v[i] + 0.001 * grad[i] * grad[i];
        const double mhat = ref_m[i] / (1.0 - std::pow(0.9, t));
        const double vhat = ref_v[i] / (1.0 - std::pow(0.999, t));
        ref_p[i] -= 1e-2 * mhat / (std::sqrt(vhat) + 1e-8);
      }
    }
    CHECK(params[0] == doctest::Approx(ref_p[0]).epsilon(1e-14));
    CHECK(params[1] == doctest::Approx(ref_p[1]).epsilon(1e-14));
  }

  SUBCASE("size mismatch raises") {
    VectorXd params = VectorXd::Zero(3);
    AdamState state = AdamState::zero(2);
    CHECK_THROWS_AS(adam_step<double>(params, VectorXd::Zero(3), state),
                    std::invalid_argument);
  }
}

TEST_CASE("checkpoint round trips") {
  SUBCASE("mlp parameters restore bitwise") {
    Rng rng(401, stream::kInit);
    const Mlp net = mlp_init(rng, {3, 16, 16, 2});
    std::stringstream ss;
    write_mlp(ss, "critic", net);
    const Mlp back = read_mlp(ss, "critic");
    CHECK(back.layer_sizes == net.layer_sizes);
    CHECK(same_bits(back.params, net.params));

    VectorXd x(3);
    x << 0.25, -1.5, 0.75;
    CHECK(same_bits(mlp_forward(net, x), mlp_forward(back, x)));
  }

  SUBCASE("policy restores bitwise") {
    Rng rng(402, stream::kInit);
    const GaussianTanhPolicy pol = policy_init(rng, 4, {8}, 2);
    std::stringstream ss;
    write_policy(ss, "actor", pol);
    const GaussianTanhPolicy back = read_policy(ss, "actor");
    CHECK(back.action_dim == 2);
    CHECK(same_bits(back.trunk.params, pol.trunk.params));
  }

  SUBCASE("vectors keep extreme values exactly") {
    VectorXd v(6);
    v << 0.0, -0.0, 5e-324, 1.7976931348623157e308, -3.0000000000000004,
        1e-301;
    std::stringstream ss;
    write_vector(ss, "moments", v);
    const VectorXd back = read_vector(ss, "moments");
    CHECK(same_bits(back, v));
  }

  SUBCASE("malformed sections raise") {
    {
      std::stringstream ss("vec other 2\n1\n2\n");
      CHECK_THROWS_WITH_AS(read_vector(ss, "moments"),
                           doctest::Contains("expected section 'moments'"),
                           std::runtime_error);
    }
    {
      std::stringstream ss("vec moments nope\n");
      CHECK_THROWS_AS(read_vector(ss, "moments"), std::runtime_error);
    }
    {
      std::stringstream ss("vec moments 3\n1\n2\n");
      CHECK_THROWS_AS(read_vector(ss, "moments"), std::runtime_error);
    }
    {
      std::stringstream ss("mlp critic 2 3 oops\n");
      CHECK_THROWS_AS(read_mlp(ss, "critic"), std::runtime_error);
    }
  }
}

TEST_CASE("initialization determinism") {
  Rng a(7, stream::kInit);
  Rng b(7, stream::kInit);
  const Mlp na = mlp_init(a, {3, 32, 1});
  const Mlp nb = mlp_init(b, {3, 32, 1});
  CHECK(same_bits(na.params, nb.params));

  Rng c(7, stream::kEnv);
  const Mlp nc = mlp_init(c, {3, 32, 1});
  CHECK_FALSE(same_bits(na.params, nc.params));
}
