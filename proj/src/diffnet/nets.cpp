#include "trustbeta/diffnet/nets.hpp"

#include <cmath>

#include "trustbeta/errors.hpp"

namespace trustbeta::diffnet {

std::array<double, kRewardInputs> reward_features(const EnvState& state,
                                                  const EnvAction& action) {
  const auto s = state.features();
  return {s[0], s[1], s[2], s[3], s[4],
          action.position[0], action.position[1], action.position[2]};
}

NetSpec PolicyNet::make_spec(const std::vector<int>& hidden) {
  NetSpec spec;
  spec.layer_sizes.push_back(static_cast<int>(EnvState::kFeatureCount));
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.heads = {{"mu", 3, Activation::kLinear},
                {"logvar", 1, Activation::kLinear}};
  return spec;
}

PolicyNet::PolicyNet(Mlp net) : net_(std::move(net)) {
  const NetSpec& spec = net_.spec();
  if (spec.input_size() != static_cast<int>(EnvState::kFeatureCount)) {
    throw SchemaError("policy network must take 5 state features");
  }
  mean_head_ = spec.head_index("mu");
  logvar_head_ = spec.head_index("logvar");
  if (spec.heads[mean_head_].size != 3 || spec.heads[logvar_head_].size != 1) {
    throw SchemaError("policy heads must be mu[3] and logvar[1]");
  }
}

PolicyNet PolicyNet::initialized(Rng& rng, const std::vector<int>& hidden) {
  return PolicyNet(Mlp::initialized(make_spec(hidden), rng));
}

ActionDistribution PolicyNet::act(const EnvState& state) const {
  const auto features = state.features();
  const ForwardCache cache = net_.forward(features);
  const auto& mu = cache.heads[mean_head_];
  return {{mu[0], mu[1], mu[2]}, std::exp(cache.heads[logvar_head_][0])};
}

NetSpec RewardNet::make_spec(const std::vector<int>& hidden) {
  NetSpec spec;
  spec.layer_sizes.push_back(static_cast<int>(kRewardInputs));
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.heads = {{"r", 1, Activation::kTanh}};
  return spec;
}

RewardNet::RewardNet(Mlp net) : net_(std::move(net)) {
  const NetSpec& spec = net_.spec();
  if (spec.input_size() != static_cast<int>(kRewardInputs) ||
      spec.heads.size() != 1 || spec.heads[0].size != 1 ||
      spec.heads[0].activation != Activation::kTanh) {
    throw SchemaError("reward network must map 8 inputs to one tanh output");
  }
}

RewardNet RewardNet::initialized(Rng& rng, const std::vector<int>& hidden) {
  return RewardNet(Mlp::initialized(make_spec(hidden), rng));
}

double RewardNet::reward(const EnvState& state, const EnvAction& action) const {
  const auto features = reward_features(state, action);
  return net_.forward(features).heads[0][0];
}

std::vector<double> RewardNet::rewards(const Trajectory& trajectory) const {
  std::vector<double> out;
  out.reserve(trajectory.steps.size());
  for (const Step& step : trajectory.steps) {
    out.push_back(reward(step.state, step.action));
  }
  return out;
}

}  // namespace trustbeta::diffnet
