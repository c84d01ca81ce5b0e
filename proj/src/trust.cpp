#include "trustbeta/trust.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trustbeta/errors.hpp"

namespace trustbeta {
namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double discounted_sum(const std::vector<double>& history, double gamma) {
  double total = 0.0;
  double weight = 1.0;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    total += weight * *it;
    weight *= gamma;
  }
  return total;
}

}  // namespace

std::array<double, TrustParams::kDimension> TrustParams::to_array() const {
  return {alpha0, beta0, omega_s, omega_f, epsilon, gamma};
}

TrustParams TrustParams::from_array(std::span<const double> values) {
  if (values.size() != kDimension) {
    throw DomainError("trust parameter vector must have 6 entries");
  }
  return {values[0], values[1], values[2], values[3], values[4], values[5]};
}

void TrustParams::validate() const {
  if (!positive_finite(alpha0) || !positive_finite(beta0)) {
    throw DomainError("alpha0 and beta0 must be positive");
  }
  if (!positive_finite(omega_s) || !positive_finite(omega_f)) {
    throw DomainError("success and failure weights must be positive");
  }
  if (!std::isfinite(epsilon) || epsilon < -1.0 || epsilon > 1.0) {
    throw DomainError("epsilon must lie in [-1, 1]");
  }
  if (!std::isfinite(gamma) || gamma <= 0.0 || gamma > 1.0) {
    throw DomainError("gamma must lie in (0, 1]");
  }
}

std::string_view to_string(UpdateBranch branch) {
  return branch == UpdateBranch::kSuccess ? "success" : "failure";
}

BetaTrustState init_state(const TrustParams& params) {
  params.validate();
  return {params.alpha0, params.beta0, 0, 0, 0};
}

UpdateBranch classify(double reward, const TrustParams& params) {
  return reward > params.epsilon ? UpdateBranch::kSuccess
                                 : UpdateBranch::kFailure;
}

BetaTrustState update(const BetaTrustState& state, double reward,
                      const TrustParams& params) {
  if (!std::isfinite(reward)) throw DomainError("reward must be finite");
  BetaTrustState next = state;
  next.alpha = params.gamma * state.alpha;
  next.beta = params.gamma * state.beta;
  if (classify(reward, params) == UpdateBranch::kSuccess) {
    next.alpha += params.omega_s * reward;
    ++next.n;
  } else {
    next.beta += params.omega_f * std::exp(std::abs(reward));
    ++next.m;
  }
  next.alpha = std::max(next.alpha, kBetaParamFloor);
  next.beta = std::max(next.beta, kBetaParamFloor);
  ++next.q;
  return next;
}

double trust_mean(const BetaTrustState& state) {
  return state.alpha / (state.alpha + state.beta);
}

double trust_variance(const BetaTrustState& state) {
  const double total = state.alpha + state.beta;
  return state.alpha * state.beta / (total * total * (total + 1.0));
}

TrustEstimate estimate(const BetaTrustState& state) {
  return {trust_mean(state), trust_variance(state)};
}

EpisodeReplay run_episode(const BetaTrustState& state,
                          std::span<const double> rewards,
                          const TrustParams& params) {
  EpisodeReplay replay;
  replay.estimates.reserve(rewards.size());
  replay.states.reserve(rewards.size());
  replay.branches.reserve(rewards.size());
  BetaTrustState current = state;
  for (double r : rewards) {
    replay.branches.push_back(classify(r, params));
    current = update(current, r, params);
    replay.states.push_back(current);
    replay.estimates.push_back(estimate(current));
  }
  replay.final_state = current;
  return replay;
}

std::array<double, BinaryTrustParams::kDimension> BinaryTrustParams::to_array()
    const {
  return {alpha0, beta0, omega_s, omega_f, gamma};
}

BinaryTrustParams BinaryTrustParams::from_array(std::span<const double> values) {
  if (values.size() != kDimension) {
    throw DomainError("binary trust parameter vector must have 5 entries");
  }
  return {values[0], values[1], values[2], values[3], values[4]};
}

void BinaryTrustParams::validate() const {
  if (!positive_finite(alpha0) || !positive_finite(beta0) ||
      !positive_finite(omega_s) || !positive_finite(omega_f)) {
    throw DomainError("binary trust parameters must be positive");
  }
  if (!std::isfinite(gamma) || gamma <= 0.0 || gamma > 1.0) {
    throw DomainError("gamma must lie in (0, 1]");
  }
}

BetaTrustState init_state(const BinaryTrustParams& params) {
  params.validate();
  return {params.alpha0, params.beta0, 0, 0, 0};
}

BetaTrustState baseline_binary_update(const BetaTrustState& state,
                                      bool task_succeeded,
                                      const BinaryTrustParams& params) {
  BetaTrustState next = state;
  next.alpha = params.gamma * state.alpha;
  next.beta = params.gamma * state.beta;
  if (task_succeeded) {
    next.alpha += params.omega_s;
    ++next.n;
  } else {
    next.beta += params.omega_f;
    ++next.m;
  }
  next.alpha = std::max(next.alpha, kBetaParamFloor);
  next.beta = std::max(next.beta, kBetaParamFloor);
  ++next.q;
  return next;
}

std::string_view to_string(AgingRule rule) {
  return rule == AgingRule::kRecurrence ? "recurrence" : "literal";
}

AgingRule aging_rule_from_string(std::string_view name) {
  if (name == "recurrence") return AgingRule::kRecurrence;
  if (name == "literal") return AgingRule::kLiteralSum;
  throw DomainError("unknown aging rule '" + std::string(name) + "'");
}

TrustReplayer::TrustReplayer(const TrustParams& params, AgingRule rule)
    : params_(params), rule_(rule), state_(init_state(params)) {
  alpha_history_.push_back(state_.alpha);
  beta_history_.push_back(state_.beta);
}

TrustReplayer::TrustReplayer(const TrustParams& params,
                             const BetaTrustState& state)
    : params_(params), rule_(AgingRule::kRecurrence), state_(state) {
  params_.validate();
}

UpdateBranch TrustReplayer::step(double reward) {
  const UpdateBranch branch = classify(reward, params_);
  if (rule_ == AgingRule::kRecurrence) {
    state_ = update(state_, reward, params_);
    return branch;
  }
  if (!std::isfinite(reward)) throw DomainError("reward must be finite");
  double alpha = discounted_sum(alpha_history_, params_.gamma);
  double beta = discounted_sum(beta_history_, params_.gamma);
  if (branch == UpdateBranch::kSuccess) {
    alpha += params_.omega_s * reward;
    ++state_.n;
  } else {
    beta += params_.omega_f * std::exp(std::abs(reward));
    ++state_.m;
  }
  state_.alpha = std::max(alpha, kBetaParamFloor);
  state_.beta = std::max(beta, kBetaParamFloor);
  ++state_.q;
  alpha_history_.push_back(state_.alpha);
  beta_history_.push_back(state_.beta);
  return branch;
}

}  // namespace trustbeta
