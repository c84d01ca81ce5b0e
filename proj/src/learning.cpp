#include "trustbeta/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trustbeta/diffnet/adam.hpp"
#include "trustbeta/diffnet/gaussian.hpp"
#include "trustbeta/logging.hpp"

namespace trustbeta {

using diffnet::ForwardCache;
using diffnet::PolicyNet;
using diffnet::RewardNet;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs K must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(eta_min > 0.0) || !(eta_min <= eta_max) || !std::isfinite(eta_max)) {
    throw ConfigError("need 0 < eta_min <= eta_max");
  }
  if (rollouts < 1) throw ConfigError("rollouts M must be >= 1");
  if (demos < 1) throw ConfigError("demos N must be >= 1");
  if (!(demo_noise >= 0.0)) throw ConfigError("demo noise must be >= 0");
  if (!(policy_learning_rate > 0.0) || !(reward_learning_rate > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (reward_steps_per_epoch < 0) {
    throw ConfigError("reward steps per epoch must be >= 0");
  }
  if (hidden.empty()) throw ConfigError("need at least one hidden layer");
}

double eta_schedule(int epoch, const TrainConfig& config) {
  if (epoch < 0 || epoch > config.epochs) {
    throw DomainError("epoch " + std::to_string(epoch) + " outside 0..K");
  }
  return config.eta_min + (static_cast<double>(epoch) / config.epochs) *
                              (config.eta_max - config.eta_min);
}

LossAndGrad bc_loss(const PolicyNet& policy, std::span<const Step> batch,
                    double eta) {
  if (batch.empty()) throw DomainError("behavior cloning batch is empty");
  const diffnet::Mlp& net = policy.net();
  LossAndGrad out;
  out.grad.assign(net.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<std::vector<double>> upstream(net.spec().heads.size());
  upstream[policy.mean_head()].assign(3, 0.0);
  upstream[policy.logvar_head()].assign(1, 0.0);

  double total = 0.0;
  for (const Step& step : batch) {
    const auto features = step.state.features();
    const ForwardCache cache = net.forward(features);
    const auto& mu = cache.heads[policy.mean_head()];
    const double logvar = cache.heads[policy.logvar_head()][0];
    const double inv_var = std::exp(-logvar);
    double sq = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double diff = step.action.position[i] - mu[i];
      sq += diff * diff;
      upstream[policy.mean_head()][i] = -diff * inv_var * scale;
    }
    total += eta * logvar + sq * inv_var;
    upstream[policy.logvar_head()][0] = 0.5 * (eta - sq * inv_var) * scale;
    net.backward(cache, upstream, out.grad);
  }
  out.loss = 0.5 * total * scale;
  return out;
}

double trajectory_reward(const RewardNet& reward, const Trajectory& trajectory) {
  if (trajectory.steps.empty()) throw DomainError("empty trajectory");
  double total = 0.0;
  for (const Step& step : trajectory.steps) {
    total += reward.reward(step.state, step.action);
  }
  return total / static_cast<double>(trajectory.steps.size());
}

double trajectory_log_prob(const PolicyNet& policy, const Trajectory& trajectory) {
  double total = 0.0;
  for (const Step& step : trajectory.steps) {
    const ActionDistribution dist = policy.act(step.state);
    total += diffnet::gaussian_logpdf(step.action.position, dist.mean,
                                      dist.variance);
  }
  return total;
}

double log_partition_from_samples(std::span<const double> returns,
                                  std::span<const double> log_probs) {
  if (returns.empty() || returns.size() != log_probs.size()) {
    throw DomainError("need matching, nonempty returns and log-probabilities");
  }
  std::vector<double> terms(returns.size());
  for (std::size_t j = 0; j < returns.size(); ++j) {
    terms[j] = returns[j] - log_probs[j];
    if (!std::isfinite(terms[j])) {
      throw NumericalError("non-finite importance term for rollout " +
                           std::to_string(j) + " (R=" +
                           std::to_string(returns[j]) + ", log p=" +
                           std::to_string(log_probs[j]) + ")");
    }
  }
  const double peak = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum) - std::log(static_cast<double>(terms.size()));
}

double PartitionEstimate::z() const { return std::exp(log_z); }

PartitionEstimate partition_estimate(const RewardNet& reward,
                                     const PolicyNet& policy,
                                     std::span<const Trajectory> rollouts) {
  if (rollouts.empty()) throw DomainError("need at least one rollout");
  PartitionEstimate est;
  for (const Trajectory& rollout : rollouts) {
    est.returns.push_back(trajectory_reward(reward, rollout));
    est.log_probs.push_back(trajectory_log_prob(policy, rollout));
  }
  est.log_z = log_partition_from_samples(est.returns, est.log_probs);
  return est;
}

namespace {

// Adds weight * dR(xi)/dpsi to grad and returns R(xi).
double accumulate_reward_grad(const RewardNet& reward,
                              const Trajectory& trajectory, double weight,
                              std::vector<double>& grad) {
  const diffnet::Mlp& net = reward.net();
  const double per_step = 1.0 / static_cast<double>(trajectory.steps.size());
  std::vector<std::vector<double>> upstream = {{weight * per_step}};
  double total = 0.0;
  for (const Step& step : trajectory.steps) {
    const auto features = diffnet::reward_features(step.state, step.action);
    const ForwardCache cache = net.forward(features);
    total += cache.heads[0][0];
    if (weight != 0.0) net.backward(cache, upstream, grad);
  }
  return total * per_step;
}

}  // namespace

LossAndGrad maxent_loss(const RewardNet& reward,
                        std::span<const Trajectory> demos,
                        std::span<const Trajectory> rollouts,
                        std::span<const double> rollout_log_probs) {
  if (demos.empty()) throw DomainError("MaxEnt loss needs demonstrations");
  if (rollouts.size() != rollout_log_probs.size()) {
    throw DomainError("one log-probability per rollout required");
  }
  LossAndGrad out;
  out.grad.assign(reward.net().parameter_count(), 0.0);

  const double demo_weight = -1.0 / static_cast<double>(demos.size());
  double demo_mean = 0.0;
  for (const Trajectory& demo : demos) {
    demo_mean -= demo_weight * accumulate_reward_grad(reward, demo, demo_weight,
                                                      out.grad);
  }

  std::vector<double> returns;
  returns.reserve(rollouts.size());
  for (const Trajectory& rollout : rollouts) {
    returns.push_back(trajectory_reward(reward, rollout));
  }
  const double log_z = log_partition_from_samples(returns, rollout_log_probs);
  // d log Z / d psi = sum_j w_j dR_j/dpsi with self-normalized weights.
  const double log_m = std::log(static_cast<double>(rollouts.size()));
  for (std::size_t j = 0; j < rollouts.size(); ++j) {
    const double w =
        std::exp(returns[j] - rollout_log_probs[j] - log_m - log_z);
    accumulate_reward_grad(reward, rollouts[j], w, out.grad);
  }
  out.loss = -demo_mean + log_z;
  return out;
}

LossAndGrad maxent_loss(const RewardNet& reward,
                        std::span<const Trajectory> demos,
                        std::span<const Trajectory> rollouts,
                        const PolicyNet& policy) {
  std::vector<double> log_probs;
  log_probs.reserve(rollouts.size());
  for (const Trajectory& rollout : rollouts) {
    log_probs.push_back(trajectory_log_prob(policy, rollout));
  }
  return maxent_loss(reward, demos, rollouts, log_probs);
}

Stage2Result train_stage2(std::span<const Trajectory> demos,
                          const TaskConfig& task, const TrainConfig& config) {
  config.validate();
  task.validate();
  if (demos.empty()) throw DomainError("training needs demonstrations");

  Rng rng(config.seed);
  Rng init_rng = rng.split();
  Stage2Result result{PolicyNet::initialized(init_rng, config.hidden),
                      RewardNet::initialized(init_rng, config.hidden),
                      {}};
  diffnet::Adam policy_opt(result.policy.net().parameter_count(),
                           {config.policy_learning_rate});
  diffnet::Adam reward_opt(result.reward.net().parameter_count(),
                           {config.reward_learning_rate});

  std::vector<Step> pairs;
  for (const Trajectory& demo : demos) {
    pairs.insert(pairs.end(), demo.steps.begin(), demo.steps.end());
  }
  if (pairs.empty()) throw DomainError("demonstrations contain no steps");

  Stage2Result last_good = result;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Step> batch;

  for (int k = 0; k <= config.epochs; ++k) {
    const double eta = eta_schedule(k, config);

    // (i) behavior cloning epoch over shuffled demo pairs
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(pairs[order[i]]);
      const LossAndGrad bc = bc_loss(result.policy, batch, eta);
      if (!std::isfinite(bc.loss)) {
        throw TrainingDivergence("behavior cloning loss diverged at epoch " +
                                     std::to_string(k),
                                 last_good);
      }
      policy_opt.step(result.policy.net().mutable_params(), bc.grad);
    }

    // (ii) fresh stochastic rollouts from demo start states
    std::vector<Trajectory> rollouts;
    rollouts.reserve(config.rollouts);
    for (int j = 0; j < config.rollouts; ++j) {
      const auto pick = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(demos.size()) - 1));
      rollouts.push_back(rollout(result.policy, demos[pick].steps.front().state,
                                 task, rng, /*stochastic=*/true));
    }
    std::vector<double> log_probs;
    log_probs.reserve(rollouts.size());
    for (const Trajectory& r : rollouts) {
      log_probs.push_back(trajectory_log_prob(result.policy, r));
    }

    // (iii) MaxEnt steps on the reward parameters
    EpochStats stats;
    stats.epoch = k;
    stats.eta = eta;
    for (int step = 0; step < config.reward_steps_per_epoch; ++step) {
      LossAndGrad me;
      try {
        me = maxent_loss(result.reward, demos, rollouts, log_probs);
      } catch (const NumericalError& e) {
        throw TrainingDivergence(std::string("MaxEnt loss diverged: ") + e.what(),
                                 last_good);
      }
      if (!std::isfinite(me.loss)) {
        throw TrainingDivergence("MaxEnt loss diverged at epoch " +
                                     std::to_string(k),
                                 last_good);
      }
      stats.maxent_loss = me.loss;
      reward_opt.step(result.reward.net().mutable_params(), me.grad);
    }

    stats.bc_loss = bc_loss(result.policy, pairs, eta).loss;
    double demo_r = 0.0;
    for (const Trajectory& demo : demos) demo_r += trajectory_reward(result.reward, demo);
    double rollout_r = 0.0;
    for (const Trajectory& r : rollouts) rollout_r += trajectory_reward(result.reward, r);
    stats.mean_demo_reward = demo_r / static_cast<double>(demos.size());
    stats.mean_rollout_reward = rollout_r / static_cast<double>(rollouts.size());
    if (!std::isfinite(stats.bc_loss)) {
      throw TrainingDivergence("behavior cloning loss diverged at epoch " +
                                   std::to_string(k),
                               last_good);
    }
    result.history.push_back(stats);
    if (k % 50 == 0 || k == config.epochs) {
      log::debug("epoch {:4d} eta={:.3f} bc={:.5f} maxent={:.5f} R_demo={:.3f} R_roll={:.3f}",
                 k, eta, stats.bc_loss, stats.maxent_loss,
                 stats.mean_demo_reward, stats.mean_rollout_reward);
    }
    last_good = result;
  }
  return result;
}

}  // namespace trustbeta
