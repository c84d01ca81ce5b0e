#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trustbeta/diffnet/nets.hpp"
#include "trustbeta/env.hpp"
#include "trustbeta/errors.hpp"

namespace trustbeta {

struct TrainConfig {
  int epochs = 300;  // K; epochs k = 0..K are run
  int batch_size = 64;
  double eta_min = 0.05;
  double eta_max = 1.00;
  int rollouts = 32;  // M
  int demos = 30;     // N, used when generating a corpus
  double demo_noise = 0.01;
  double policy_learning_rate = 1e-3;
  double reward_learning_rate = 3e-4;
  int reward_steps_per_epoch = 1;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// eta = eta_min + (k / K) * (eta_max - eta_min), for 0 <= k <= K.
double eta_schedule(int epoch, const TrainConfig& config);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// 0.5 * mean over pairs of eta * log var(s) + |a - mu(s)|^2 / var(s).
LossAndGrad bc_loss(const diffnet::PolicyNet& policy,
                    std::span<const Step> batch, double eta);

// Mean per-step reward over the trajectory.
double trajectory_reward(const diffnet::RewardNet& reward,
                         const Trajectory& trajectory);

// Sum over steps of log N(a_t; mu(s_t), var(s_t) I).
double trajectory_log_prob(const diffnet::PolicyNet& policy,
                           const Trajectory& trajectory);

// log of (1/M) sum_j exp(R_j) / p_j, computed with log-sum-exp. Throws
// NumericalError when any term is non-finite.
double log_partition_from_samples(std::span<const double> returns,
                                  std::span<const double> log_probs);

struct PartitionEstimate {
  double log_z = 0.0;
  std::vector<double> returns;    // R(xi_j)
  std::vector<double> log_probs;  // log p(xi_j)
  double z() const;
};

PartitionEstimate partition_estimate(const diffnet::RewardNet& reward,
                                     const diffnet::PolicyNet& policy,
                                     std::span<const Trajectory> rollouts);

// -mean R(demo) + log Z; gradient w.r.t. the reward parameters only, with the
// rollouts and their log-probabilities held fixed.
LossAndGrad maxent_loss(const diffnet::RewardNet& reward,
                        std::span<const Trajectory> demos,
                        std::span<const Trajectory> rollouts,
                        std::span<const double> rollout_log_probs);
LossAndGrad maxent_loss(const diffnet::RewardNet& reward,
                        std::span<const Trajectory> demos,
                        std::span<const Trajectory> rollouts,
                        const diffnet::PolicyNet& policy);

struct EpochStats {
  int epoch = 0;
  double eta = 0.0;
  double bc_loss = 0.0;
  double maxent_loss = 0.0;
  double mean_demo_reward = 0.0;
  double mean_rollout_reward = 0.0;
};

struct Stage2Result {
  diffnet::PolicyNet policy;
  diffnet::RewardNet reward;
  std::vector<EpochStats> history;
};

// Raised when a loss turns non-finite; carries the last finite parameters.
class TrainingDivergence : public TrainingError {
 public:
  TrainingDivergence(const std::string& what, Stage2Result last_good)
      : TrainingError(what), last_good_(std::move(last_good)) {}
  const Stage2Result& last_good() const { return last_good_; }

 private:
  Stage2Result last_good_;
};

// Alternates, for k = 0..K: one behavior-cloning epoch at eta(k), M fresh
// stochastic rollouts from the current policy, and reward-parameter steps on
// the MaxEnt loss.
Stage2Result train_stage2(std::span<const Trajectory> demos,
                          const TaskConfig& task, const TrainConfig& config);

}  // namespace trustbeta
