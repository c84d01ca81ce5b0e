#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "trustbeta/diffnet/adam.hpp"
#include "trustbeta/diffnet/gaussian.hpp"
#include "trustbeta/diffnet/mlp.hpp"
#include "trustbeta/diffnet/nets.hpp"
#include "trustbeta/errors.hpp"

using namespace trustbeta;
using namespace trustbeta::diffnet;

namespace {

NetSpec two_head_spec() {
  return {{4, 6, 5},
          Activation::kTanh,
          {{"a", 2, Activation::kLinear},
           {"b", 1, Activation::kTanh},
           {"c", 1, Activation::kSoftplus}}};
}

// Sum over heads of weights . outputs, so every head feeds the loss.
double probe_loss(const Mlp& net, std::span<const double> x,
                  const std::vector<std::vector<double>>& w) {
  const auto cache = net.forward(x);
  double loss = 0.0;
  for (std::size_t h = 0; h < w.size(); ++h) {
    for (std::size_t i = 0; i < w[h].size(); ++i) loss += w[h][i] * cache.heads[h][i];
  }
  return loss;
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZeroTanhOutput) {
  const Mlp net(RewardNet::make_spec({8, 8}));
  const std::vector<double> x(8, 0.7);
  EXPECT_EQ(net.forward(x).heads[0][0], 0.0);
}

TEST(Mlp, TanhHeadStaysInOpenInterval) {
  Rng rng(1);
  Mlp net = Mlp::initialized(RewardNet::make_spec({16}), rng);
  for (double& p : net.mutable_params()) p *= 20;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> x(8);
    for (double& v : x) v = rng.uniform(-5, 5);
    const double y = net.forward(x).heads[0][0];
    ASSERT_GE(y, -1.0);
    ASSERT_LE(y, 1.0);
    ASSERT_TRUE(std::isfinite(y));
  }
}

TEST(Mlp, OneHiddenUnitByHand) {
  const NetSpec spec{{2, 1}, Activation::kTanh, {{"y", 1, Activation::kLinear}}};
  // W1 = [0.5, -0.25], b1 = 0.1, head weight 2.0, head bias -0.3.
  const Mlp net(spec, {0.5, -0.25, 0.1, 2.0, -0.3});
  const std::vector<double> x = {0.8, 0.4};
  EXPECT_NEAR(net.forward(x).heads[0][0], 2.0 * std::tanh(0.5 * 0.8 - 0.25 * 0.4 + 0.1) - 0.3,
              1e-15);
}

TEST(Mlp, WrongInputSizeIsADomainError) {
  const Mlp net(RewardNet::make_spec({4}));
  const std::vector<double> x(3, 0.0);
  EXPECT_THROW(net.forward(x), DomainError);
}

TEST(Mlp, WrongParameterCountIsAConfigError) {
  EXPECT_THROW(Mlp(two_head_spec(), std::vector<double>(3, 0.0)), Error);
}

TEST(Mlp, BackwardMatchesFiniteDifferencesOverSeeds) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const Mlp net = Mlp::initialized(two_head_spec(), rng);
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-1, 1);
    const std::vector<std::vector<double>> w = {
        {rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-1, 1)}, {rng.uniform(-1, 1)}};

    std::vector<double> grad(net.parameter_count(), 0.0);
    std::vector<double> input_grad(4, 0.0);
    net.backward(net.forward(x), w, grad, input_grad);

    const auto numeric = oracle::numeric_gradient(
        [&](std::span<const double> p) {
          return probe_loss(Mlp(net.spec(), {p.begin(), p.end()}), x, w);
        },
        {net.params().begin(), net.params().end()});
    EXPECT_LT(oracle::max_relative_error(grad, numeric), 1e-4) << "seed " << seed;

    const auto numeric_input = oracle::numeric_gradient(
        [&](std::span<const double> xi) { return probe_loss(net, xi, w); }, x);
    EXPECT_LT(oracle::max_relative_error(input_grad, numeric_input), 1e-4) << "seed " << seed;
  }
}

TEST(Mlp, ZeroUpstreamGivesZeroGradient) {
  Rng rng(3);
  const Mlp net = Mlp::initialized(two_head_spec(), rng);
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.4};
  std::vector<double> grad(net.parameter_count(), 0.0);
  const std::vector<std::vector<double>> zero = {{0, 0}, {0}, {0}};
  net.backward(net.forward(x), zero, grad);
  for (double g : grad) EXPECT_EQ(g, 0.0);
}

TEST(Mlp, TanhHeadSlopeAtZeroIsOne) {
  // Zero trunk output and zero head bias put the tanh head at pre-activation 0.
  const NetSpec spec{{1, 1}, Activation::kTanh, {{"r", 1, Activation::kTanh}}};
  const Mlp net(spec, {0.0, 0.0, 0.0, 0.0});
  const std::vector<double> x = {0.5};
  std::vector<double> grad(net.parameter_count(), 0.0);
  const std::vector<std::vector<double>> up = {{1.0}};
  net.backward(net.forward(x), up, grad);
  EXPECT_DOUBLE_EQ(grad[3], 1.0);  // d r / d head bias = tanh'(0)
}

TEST(Gaussian, DensityAtTheMean) {
  const Vec3 mu{0.3, -0.2, 0.9};
  EXPECT_NEAR(gaussian_logpdf(mu, mu, 1.0), -2.756815, 1e-6);
  EXPECT_NEAR(gaussian_logpdf(mu, mu, 1.0), -1.5 * std::log(2 * std::numbers::pi), 1e-14);
}

TEST(Gaussian, TranslationInvariantAndUnimodal) {
  const Vec3 a{0.1, 0.2, 0.3}, mu{0.0, 0.25, 0.35}, shift{5, -3, 2};
  EXPECT_NEAR(gaussian_logpdf(a, mu, 0.3), gaussian_logpdf(a + shift, mu + shift, 0.3), 1e-12);
  double last = gaussian_logpdf(mu, mu, 0.5);
  for (int k = 1; k <= 20; ++k) {
    const double v = gaussian_logpdf(mu + Vec3{0.05 * k, 0, 0}, mu, 0.5);
    EXPECT_LT(v, last);
    last = v;
  }
}

TEST(Gaussian, NonPositiveVarianceIsADomainError) {
  EXPECT_THROW(gaussian_logpdf({0, 0, 0}, {0, 0, 0}, 0.0), DomainError);
}

TEST(Gaussian, GradientMatchesFiniteDifferences) {
  const Vec3 a{0.4, -0.1, 0.2}, mu{0.1, 0.3, 0.25};
  const double var = 0.07;
  const auto g = gaussian_logpdf_grad(a, mu, var);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec3 up = mu, down = mu;
    up[k] += h;
    down[k] -= h;
    EXPECT_NEAR(g.d_mean[k],
                (gaussian_logpdf(a, up, var) - gaussian_logpdf(a, down, var)) / (2 * h), 1e-5);
    EXPECT_NEAR(g.d_action[k], -g.d_mean[k], 1e-12);
  }
  EXPECT_NEAR(g.d_variance,
              (gaussian_logpdf(a, mu, var + h) - gaussian_logpdf(a, mu, var - h)) / (2 * h), 1e-4);
}

TEST(Adam, FirstStepMovesEachParameterByTheLearningRate) {
  Adam adam(3, {0.01, 0.9, 0.999, 1e-8});
  std::vector<double> p = {1.0, -2.0, 0.5};
  const std::vector<double> g = {3.0, -0.5, 0.0};
  adam.step(p, g);
  EXPECT_NEAR(p[0], 0.99, 1e-8);
  EXPECT_NEAR(p[1], -1.99, 1e-8);
  EXPECT_DOUBLE_EQ(p[2], 0.5);
  EXPECT_EQ(adam.steps_taken(), 1u);
}

TEST(Adam, MinimizesAQuadratic) {
  Adam adam(2, {0.05});
  std::vector<double> p = {3.0, -4.0};
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> g = {2 * (p[0] - 1), 2 * (p[1] + 2)};
    adam.step(p, g);
  }
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], -2.0, 1e-3);
}

TEST(PolicyNet, ActReturnsPositiveVariance) {
  Rng rng(6);
  const auto policy = PolicyNet::initialized(rng);
  const auto dist = policy.act(observe({0.1, 0.5, 0.3}, TaskConfig::defaults()));
  EXPECT_GT(dist.variance, 0.0);
  EXPECT_TRUE(all_finite(dist.mean));
}

TEST(RewardNet, FeaturesConcatenateStateAndAction) {
  EnvState s;
  s.ee_to_target = {1, 2, 3};
  s.dist_obstacle = 4;
  s.height = 5;
  const auto f = reward_features(s, {{6, 7, 8}});
  for (int i = 0; i < 8; ++i) EXPECT_EQ(f[i], i + 1.0);
}
