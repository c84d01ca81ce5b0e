#pragma once

#include <optional>
#include <span>
#include <vector>

#include "trustbeta/differential_evolution.hpp"
#include "trustbeta/trust.hpp"
#include "trustbeta/types.hpp"

namespace trustbeta {

// Reported trust values are clamped into this range before scoring so the
// Beta density stays finite at the ends of the scale.
inline constexpr double kReportClampLow = 0.01;
inline constexpr double kReportClampHigh = 0.99;
// Returned in place of a non-finite negative log-likelihood term.
inline constexpr double kNllPenalty = 1e6;

// Episodes with a full reward stream and an end-of-task trust report, in the
// order they were experienced.
struct CalibrationSet {
  std::vector<ExperimentLog> episodes;

  void validate(int horizon) const;  // throws SchemaError
};

// Minimal view of one episode as seen by the likelihood.
struct EpisodeEvidence {
  std::span<const double> rewards;
  double reported_trust = 0.5;  // on [0, 1]
  bool success_flag = false;
};

std::vector<EpisodeEvidence> evidence_of(const CalibrationSet& set);

double beta_log_pdf(double x, double alpha, double beta);

// Sum over episodes of -log Beta(clamp(report); alpha_end, beta_end), with the
// trust state carried across episodes starting from init_state(params).
double nll(const TrustParams& params, std::span<const EpisodeEvidence> episodes);
double nll(const TrustParams& params, const CalibrationSet& set);

// Same likelihood for the binary baseline, scored after each end-of-task
// update.
double baseline_nll(const BinaryTrustParams& params,
                    std::span<const EpisodeEvidence> episodes);

// Search box for the six trust parameters.
struct TrustBounds {
  std::vector<double> lower = {0.1, 0.1, 0.01, 0.01, -1.0, 0.5};
  std::vector<double> upper = {50.0, 50.0, 20.0, 20.0, 1.0, 1.0};
};

// Optimizer settings shared by both models; bounds are filled per model.
struct CalibrationConfig {
  int population = 48;
  double differential_weight = 0.7;
  double crossover_rate = 0.9;
  int generations = 300;
  std::uint64_t seed = 0;
  TrustBounds bounds;

  DEConfig de_config() const;  // six-parameter granular model
  DEConfig baseline_de_config() const;  // five parameters, epsilon dropped
};

struct CalibrationResult {
  TrustParams params;
  double nll = 0.0;
  DEResult search;
};

struct BaselineCalibrationResult {
  BinaryTrustParams params;
  double nll = 0.0;
  DEResult search;
};

CalibrationResult calibrate(const CalibrationSet& set,
                            const CalibrationConfig& config,
                            const std::optional<TrustParams>& warm_start = {});

BaselineCalibrationResult calibrate_baseline(const CalibrationSet& set,
                                             const CalibrationConfig& config);

// Replays every episode under `params` from init_state, returning the state
// at the end of each episode.
std::vector<BetaTrustState> replay_episode_ends(
    const TrustParams& params, std::span<const EpisodeEvidence> episodes);

}  // namespace trustbeta
