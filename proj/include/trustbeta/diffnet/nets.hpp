#pragma once

#include <array>
#include <vector>

#include "trustbeta/diffnet/mlp.hpp"
#include "trustbeta/env.hpp"

namespace trustbeta::diffnet {

inline constexpr std::size_t kRewardInputs = EnvState::kFeatureCount + 3;

std::array<double, kRewardInputs> reward_features(const EnvState& state,
                                                  const EnvAction& action);

// Gaussian policy: state -> mean action (linear head "mu") and one shared
// log-variance (linear head "logvar").
class PolicyNet : public Policy {
 public:
  static NetSpec make_spec(const std::vector<int>& hidden = {64, 64});

  PolicyNet() : PolicyNet(Mlp(make_spec())) {}
  explicit PolicyNet(Mlp net);
  static PolicyNet initialized(Rng& rng, const std::vector<int>& hidden = {64, 64});

  ActionDistribution act(const EnvState& state) const override;

  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  std::size_t mean_head() const { return mean_head_; }
  std::size_t logvar_head() const { return logvar_head_; }

 private:
  Mlp net_;
  std::size_t mean_head_ = 0;
  std::size_t logvar_head_ = 1;
};

// Per-step reward r(s, a) in (-1, 1) through a tanh head "r".
class RewardNet {
 public:
  static NetSpec make_spec(const std::vector<int>& hidden = {64, 64});

  RewardNet() : RewardNet(Mlp(make_spec())) {}
  explicit RewardNet(Mlp net);
  static RewardNet initialized(Rng& rng, const std::vector<int>& hidden = {64, 64});

  double reward(const EnvState& state, const EnvAction& action) const;
  std::vector<double> rewards(const Trajectory& trajectory) const;

  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

 private:
  Mlp net_;
};

}  // namespace trustbeta::diffnet
