#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "trustbeta/diffnet/gaussian.hpp"
#include "trustbeta/errors.hpp"
#include "trustbeta/learning.hpp"

using namespace trustbeta;
using namespace trustbeta::diffnet;

namespace {

// Policy whose outputs ignore the state: mu = `mean`, log variance = `logvar`.
PolicyNet constant_policy(const Vec3& mean, double logvar) {
  const NetSpec spec = PolicyNet::make_spec({2});
  std::vector<double> p(spec.parameter_count(), 0.0);
  // Trunk W[2x5], b[2]; mu head W[3x2], b[3]; logvar head W[1x2], b[1].
  for (int i = 0; i < 3; ++i) p[12 + 6 + i] = mean[i];
  p.back() = logvar;
  return PolicyNet(Mlp(spec, p));
}

// Reward network with constant output tanh(bias).
RewardNet constant_reward(double value) {
  const NetSpec spec = RewardNet::make_spec({2});
  std::vector<double> p(spec.parameter_count(), 0.0);
  p.back() = std::atanh(value);
  return RewardNet(Mlp(spec, p));
}

std::vector<Step> random_batch(Rng& rng, int n) {
  const TaskConfig c = TaskConfig::defaults();
  std::vector<Step> out;
  for (int i = 0; i < n; ++i) {
    Step s;
    s.state = observe({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)}, c);
    s.action.position = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
    out.push_back(s);
  }
  return out;
}

std::vector<Trajectory> demo_corpus(std::uint64_t seed, int n, double noise) {
  const TaskConfig c = TaskConfig::defaults();
  Rng rng(seed);
  std::vector<Trajectory> demos;
  for (int i = 0; i < n; ++i) demos.push_back(synth_demo(reset(c, rng), c, rng, noise));
  return demos;
}

}  // namespace

TEST(EtaSchedule, EndpointsAndMidpoint) {
  TrainConfig cfg;
  cfg.epochs = 300;
  EXPECT_DOUBLE_EQ(eta_schedule(0, cfg), 0.05);
  EXPECT_DOUBLE_EQ(eta_schedule(300, cfg), 1.00);
  EXPECT_DOUBLE_EQ(eta_schedule(150, cfg), 0.525);
  for (int k = 1; k <= 300; ++k) EXPECT_GE(eta_schedule(k, cfg), eta_schedule(k - 1, cfg));
  EXPECT_THROW(eta_schedule(-1, cfg), DomainError);
  EXPECT_THROW(eta_schedule(301, cfg), DomainError);
}

TEST(TrainConfig, RejectsInvalidSettings) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.eta_min = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rollouts = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.hidden.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(BcLoss, PerfectFitAtUnitVarianceIsZero) {
  const Vec3 mu{0.2, 0.4, 0.6};
  const PolicyNet policy = constant_policy(mu, 0.0);
  Rng rng(1);
  auto batch = random_batch(rng, 6);
  for (Step& s : batch) s.action.position = mu;
  EXPECT_NEAR(bc_loss(policy, batch, 0.5).loss, 0.0, 1e-15);
}

TEST(BcLoss, UnitVarianceReducesToHalfMeanSquaredError) {
  const Vec3 mu{0.2, 0.4, 0.6};
  const PolicyNet policy = constant_policy(mu, 0.0);
  Rng rng(2);
  const auto batch = random_batch(rng, 7);
  double sse = 0.0;
  for (const Step& s : batch) {
    const Vec3 d = s.action.position - mu;
    sse += dot(d, d);
  }
  EXPECT_NEAR(bc_loss(policy, batch, 0.3).loss, 0.5 * sse / 7, 1e-14);
}

TEST(BcLoss, VarianceTermIsWeightedByEta) {
  const Vec3 mu{0.2, 0.4, 0.6};
  const PolicyNet policy = constant_policy(mu, std::log(0.5));
  Rng rng(3);
  auto batch = random_batch(rng, 4);
  for (Step& s : batch) s.action.position = mu;
  EXPECT_NEAR(bc_loss(policy, batch, 0.8).loss, 0.5 * 0.8 * std::log(0.5), 1e-14);
}

TEST(BcLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const PolicyNet policy = PolicyNet::initialized(rng, {8, 8});
    const auto batch = random_batch(rng, 5);
    const double eta = rng.uniform(0.05, 1.0);
    const auto analytic = bc_loss(policy, batch, eta);
    const auto numeric = oracle::numeric_gradient(
        [&](std::span<const double> p) {
          return bc_loss(PolicyNet(Mlp(policy.net().spec(), {p.begin(), p.end()})), batch, eta)
              .loss;
        },
        {policy.net().params().begin(), policy.net().params().end()});
    EXPECT_LT(oracle::max_relative_error(analytic.grad, numeric), 1e-4) << "seed " << seed;
  }
}

TEST(TrajectoryReward, ZeroAndConstantNetworks) {
  const auto demo = demo_corpus(4, 1, 0.0).front();
  EXPECT_EQ(trajectory_reward(RewardNet(Mlp(RewardNet::make_spec({4}))), demo), 0.0);
  EXPECT_NEAR(trajectory_reward(constant_reward(0.37), demo), 0.37, 1e-15);
}

TEST(TrajectoryReward, IsTheMeanOfStepRewardsAndBounded) {
  Rng rng(5);
  const RewardNet reward = RewardNet::initialized(rng, {8});
  for (const auto& demo : demo_corpus(6, 5, 0.01)) {
    const auto r = reward.rewards(demo);
    ASSERT_EQ(r.size(), demo.steps.size());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / r.size();
    EXPECT_NEAR(trajectory_reward(reward, demo), mean, 1e-15);
    EXPECT_GT(mean, -1.0);
    EXPECT_LT(mean, 1.0);
  }
}

TEST(Partition, SingleSampleFormula) {
  const double d = 0.004;
  const std::vector<double> returns = {0.0}, log_probs = {std::log(d)};
  EXPECT_NEAR(std::exp(log_partition_from_samples(returns, log_probs)), 1 / d, 1e-9);
}

TEST(Partition, DuplicationAndPermutationInvariance) {
  const std::vector<double> r = {0.3, -0.2, 0.8, 0.1}, lp = {-40.0, -38.5, -45.2, -41.0};
  const double base = log_partition_from_samples(r, lp);
  std::vector<double> r2 = r, lp2 = lp;
  r2.insert(r2.end(), r.begin(), r.end());
  lp2.insert(lp2.end(), lp.begin(), lp.end());
  EXPECT_NEAR(log_partition_from_samples(r2, lp2), base, 1e-12);
  const std::vector<double> rp = {0.8, 0.1, 0.3, -0.2}, lpp = {-45.2, -41.0, -40.0, -38.5};
  EXPECT_NEAR(log_partition_from_samples(rp, lpp), base, 1e-12);
}

TEST(Partition, ExtremeLogProbabilitiesStayFinite) {
  const std::vector<double> r = {0.5, -0.5}, lp = {-900.0, -1200.0};
  const double log_z = log_partition_from_samples(r, lp);
  EXPECT_TRUE(std::isfinite(log_z));
  EXPECT_NEAR(log_z, 1199.5 - std::log(2.0) + std::log1p(std::exp(-299.0)), 1e-9);
}

TEST(Partition, NonFiniteInputIsANumericalError) {
  const std::vector<double> r = {0.5, NAN}, lp = {-1.0, -2.0};
  EXPECT_THROW(log_partition_from_samples(r, lp), NumericalError);
}

TEST(Partition, DiscreteToyMatchesEnumeration) {
  const std::vector<double> r = {0.4, -0.3, 0.7};
  const std::vector<double> p = {0.5, 0.2, 0.3};
  const double exact = std::exp(0.4) + std::exp(-0.3) + std::exp(0.7);
  Rng rng(12);
  std::discrete_distribution<int> pick(p.begin(), p.end());
  std::vector<double> returns, log_probs;
  for (int j = 0; j < 100000; ++j) {
    const int a = pick(rng.engine());
    returns.push_back(r[a]);
    log_probs.push_back(std::log(p[a]));
  }
  const double z = std::exp(log_partition_from_samples(returns, log_probs));
  EXPECT_LT(std::fabs(z - exact) / exact, 0.02);
}

TEST(MaxEnt, ZeroRewardReducesToLogMeanInverseDensity) {
  const auto demos = demo_corpus(7, 2, 0.01);
  Rng rng(8);
  const PolicyNet policy = PolicyNet::initialized(rng, {8});
  const TaskConfig c = TaskConfig::defaults();
  std::vector<Trajectory> rollouts;
  std::vector<double> lp;
  for (int j = 0; j < 3; ++j) {
    rollouts.push_back(rollout(policy, reset(c, rng), c, rng, true));
    lp.push_back(trajectory_log_prob(policy, rollouts.back()));
  }
  const RewardNet zero(Mlp(RewardNet::make_spec({4})));
  // log mean exp(-lp), with the smallest log-probability factored out.
  const double min_lp = *std::min_element(lp.begin(), lp.end());
  double s2 = 0.0;
  for (double v : lp) s2 += std::exp(min_lp - v);
  const double stable = -min_lp + std::log(s2 / 3);
  EXPECT_NEAR(maxent_loss(zero, demos, rollouts, lp).loss, stable, 1e-9);
  EXPECT_NEAR(maxent_loss(zero, demos, rollouts, policy).loss, stable, 1e-9);
}

TEST(MaxEnt, GradientMatchesFiniteDifferences) {
  const TaskConfig c = TaskConfig::defaults();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const RewardNet reward = RewardNet::initialized(rng, {8, 8});
    const PolicyNet policy = PolicyNet::initialized(rng, {8});
    const auto demos = demo_corpus(seed + 100, 3, 0.01);
    std::vector<Trajectory> rollouts;
    std::vector<double> lp;
    for (int j = 0; j < 4; ++j) {
      rollouts.push_back(rollout(policy, reset(c, rng), c, rng, true));
      lp.push_back(trajectory_log_prob(policy, rollouts.back()));
    }
    const auto analytic = maxent_loss(reward, demos, rollouts, lp);
    const auto numeric = oracle::numeric_gradient(
        [&](std::span<const double> p) {
          return maxent_loss(RewardNet(Mlp(reward.net().spec(), {p.begin(), p.end()})), demos,
                             rollouts, lp)
              .loss;
        },
        {reward.net().params().begin(), reward.net().params().end()});
    EXPECT_LT(oracle::max_relative_error(analytic.grad, numeric), 1e-3) << "seed " << seed;
  }
}

TEST(TrajectoryLogProb, SumsPerStepDensities) {
  Rng rng(9);
  const PolicyNet policy = PolicyNet::initialized(rng, {8});
  const auto demo = demo_corpus(10, 1, 0.01).front();
  double total = 0.0;
  for (const Step& s : demo.steps) {
    const auto d = policy.act(s.state);
    total += gaussian_logpdf(s.action.position, d.mean, d.variance);
  }
  EXPECT_NEAR(trajectory_log_prob(policy, demo), total, 1e-9);
}

TEST(TrainStage2, BitReproducibleUnderSeed) {
  const auto demos = demo_corpus(11, 4, 0.01);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.rollouts = 4;
  cfg.hidden = {8};
  cfg.seed = 99;
  const auto a = train_stage2(demos, TaskConfig::defaults(), cfg);
  const auto b = train_stage2(demos, TaskConfig::defaults(), cfg);
  EXPECT_TRUE(std::equal(a.policy.net().params().begin(), a.policy.net().params().end(),
                         b.policy.net().params().begin()));
  EXPECT_TRUE(std::equal(a.reward.net().params().begin(), a.reward.net().params().end(),
                         b.reward.net().params().begin()));
  ASSERT_EQ(a.history.size(), 5u);  // epochs k = 0..K
  EXPECT_EQ(a.history.front().eta, cfg.eta_min);
  EXPECT_EQ(a.history.back().eta, cfg.eta_max);
}

TEST(TrainStage2, EmptyCorpusIsRejected) {
  EXPECT_THROW(train_stage2({}, TaskConfig::defaults(), TrainConfig{}), DomainError);
}

TEST(TrainStage2, OverfitsASmallCorpus) {
  const auto demos = demo_corpus(12, 5, 0.01);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.rollouts = 4;
  cfg.hidden = {32, 32};
  cfg.seed = 3;
  const auto result = train_stage2(demos, TaskConfig::defaults(), cfg);
  std::vector<Step> pairs;
  for (const auto& d : demos) pairs.insert(pairs.end(), d.steps.begin(), d.steps.end());
  Rng rng(cfg.seed);
  Rng init = rng.split();
  const PolicyNet initial = PolicyNet::initialized(init, cfg.hidden);
  const double before = bc_loss(initial, pairs, cfg.eta_max).loss;
  const double after = bc_loss(result.policy, pairs, cfg.eta_max).loss;
  EXPECT_GT(before, 0.0);
  EXPECT_LT(after, 0.1 * before);
}

// Desk-scale run with the default configuration, shared by the checks below.
class TrainedModels : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    TrainConfig cfg;
    cfg.seed = 0;
    result_ = new Stage2Result(train_stage2(demo_corpus(100, cfg.demos, cfg.demo_noise),
                                            TaskConfig::defaults(), cfg));
  }
  static void TearDownTestSuite() {
    delete result_;
    result_ = nullptr;
  }
  static Stage2Result* result_;
};

Stage2Result* TrainedModels::result_ = nullptr;

TEST_F(TrainedModels, PolicySucceedsFromHeldOutStarts) {
  const TaskConfig c = TaskConfig::defaults();
  Rng rng(999);
  int successes = 0;
  for (int i = 0; i < 10; ++i) {
    successes += task_success(rollout(result_->policy, reset(c, rng), c, rng, false), c);
  }
  EXPECT_GE(successes, 8);
}

TEST_F(TrainedModels, RewardPrefersDemonstrationsOverRandomMotion) {
  const TaskConfig c = TaskConfig::defaults();
  Rng rng(2025);
  int wins = 0;
  for (int i = 0; i < 100; ++i) {
    const EnvState start = reset(c, rng);
    const Trajectory demo = synth_demo(start, c, rng, 0.01);
    const Trajectory random = random_rollout(start, c, rng);
    wins += trajectory_reward(result_->reward, demo) > trajectory_reward(result_->reward, random);
  }
  EXPECT_GE(wins, 90);
}

TEST_F(TrainedModels, HistoryIsFinite) {
  ASSERT_EQ(result_->history.size(), 301u);
  for (const EpochStats& s : result_->history) {
    EXPECT_TRUE(std::isfinite(s.bc_loss));
    EXPECT_TRUE(std::isfinite(s.maxent_loss));
  }
}
