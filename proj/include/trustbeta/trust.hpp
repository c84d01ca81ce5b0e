#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "trustbeta/types.hpp"

namespace trustbeta {

// Lower bound applied to alpha and beta after every update.
inline constexpr double kBetaParamFloor = 1e-6;

// Trust dynamics parameters, in calibration-vector order
// (alpha0, beta0, omega_s, omega_f, epsilon, gamma).
struct TrustParams {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double omega_s = 1.0;  // success weight
  double omega_f = 1.0;  // failure weight
  double epsilon = 0.0;  // reward above epsilon counts as success
  double gamma = 0.9;    // aging factor in (0, 1]

  static constexpr std::size_t kDimension = 6;

  std::array<double, kDimension> to_array() const;
  static TrustParams from_array(std::span<const double> values);
  void validate() const;  // throws DomainError
  bool operator==(const TrustParams&) const = default;
};

// Live Beta(alpha, beta) reputation plus its evidence counters. n and m count
// timesteps, q counts every update across all tasks.
struct BetaTrustState {
  double alpha = 1.0;
  double beta = 1.0;
  std::int64_t n = 0;
  std::int64_t m = 0;
  std::int64_t q = 0;

  bool operator==(const BetaTrustState&) const = default;
};

enum class UpdateBranch { kSuccess, kFailure };
std::string_view to_string(UpdateBranch branch);

BetaTrustState init_state(const TrustParams& params);

// One timestep of weighted aging:
//   r >  eps: alpha' = g*alpha + w_s*r,        beta' = g*beta
//   r <= eps: alpha' = g*alpha,                beta' = g*beta + w_f*exp(|r|)
// followed by the floor clamp.
BetaTrustState update(const BetaTrustState& state, double reward,
                      const TrustParams& params);
UpdateBranch classify(double reward, const TrustParams& params);

double trust_mean(const BetaTrustState& state);
double trust_variance(const BetaTrustState& state);
TrustEstimate estimate(const BetaTrustState& state);

struct EpisodeReplay {
  BetaTrustState final_state;
  std::vector<TrustEstimate> estimates;  // one per reward, after its update
  std::vector<BetaTrustState> states;    // state after each update
  std::vector<UpdateBranch> branches;
};

// Folds update() over a task's reward stream.
EpisodeReplay run_episode(const BetaTrustState& state,
                          std::span<const double> rewards,
                          const TrustParams& params);

// Binary performance-based baseline, updated once per completed task.
struct BinaryTrustParams {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double omega_s = 1.0;
  double omega_f = 1.0;
  double gamma = 1.0;

  static constexpr std::size_t kDimension = 5;

  std::array<double, kDimension> to_array() const;
  static BinaryTrustParams from_array(std::span<const double> values);
  void validate() const;
  bool operator==(const BinaryTrustParams&) const = default;
};

BetaTrustState init_state(const BinaryTrustParams& params);
BetaTrustState baseline_binary_update(const BetaTrustState& state,
                                      bool task_succeeded,
                                      const BinaryTrustParams& params);

// Which reading of the weighted-aging rule drives a replay.
enum class AgingRule {
  kRecurrence,  // single-step recurrence (default)
  kLiteralSum,  // re-sum the whole discounted parameter history every step
};

std::string_view to_string(AgingRule rule);
AgingRule aging_rule_from_string(std::string_view name);

// Stateful replay that supports both aging rules. With kLiteralSum the new
// parameter is sum_{i} g^i * history[len-1-i] (+ increment), where history
// holds every earlier value of that parameter starting at its prior.
class TrustReplayer {
 public:
  TrustReplayer(const TrustParams& params, AgingRule rule);
  TrustReplayer(const TrustParams& params, const BetaTrustState& state);

  UpdateBranch step(double reward);
  const BetaTrustState& state() const { return state_; }
  AgingRule rule() const { return rule_; }

 private:
  TrustParams params_;
  AgingRule rule_;
  BetaTrustState state_;
  std::vector<double> alpha_history_;
  std::vector<double> beta_history_;
};

}  // namespace trustbeta
