#include "trustbeta/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trustbeta/errors.hpp"

namespace trustbeta {
namespace {

double clamp_report(double trust) {
  return std::clamp(trust, kReportClampLow, kReportClampHigh);
}

double episode_term(double reported, const BetaTrustState& state) {
  const double term = -beta_log_pdf(clamp_report(reported), state.alpha,
                                     state.beta);
  return std::isfinite(term) ? term : kNllPenalty;
}

}  // namespace

void CalibrationSet::validate(int horizon) const {
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const ExperimentLog& log = episodes[e];
    const std::string where = "calibration episode " + std::to_string(e);
    if (static_cast<int>(log.rewards.size()) != horizon) {
      throw SchemaError(where + " does not have T rewards");
    }
    if (!log.report) throw SchemaError(where + " has no trust report");
    for (double r : log.rewards) {
      if (!std::isfinite(r) || r < -1.0 || r > 1.0) {
        throw SchemaError(where + " has a reward outside [-1, 1]");
      }
    }
  }
}

std::vector<EpisodeEvidence> evidence_of(const CalibrationSet& set) {
  std::vector<EpisodeEvidence> out;
  out.reserve(set.episodes.size());
  for (const ExperimentLog& log : set.episodes) {
    if (!log.report) throw SchemaError("episode without a trust report");
    out.push_back({log.rewards, log.report->percent / 100.0, log.success_flag});
  }
  return out;
}

double beta_log_pdf(double x, double alpha, double beta) {
  return (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) +
         std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
}

double nll(const TrustParams& params, std::span<const EpisodeEvidence> episodes) {
  BetaTrustState state = init_state(params);
  double total = 0.0;
  for (const EpisodeEvidence& episode : episodes) {
    for (double r : episode.rewards) state = update(state, r, params);
    total += episode_term(episode.reported_trust, state);
  }
  return total;
}

double nll(const TrustParams& params, const CalibrationSet& set) {
  const auto evidence = evidence_of(set);
  return nll(params, evidence);
}

double baseline_nll(const BinaryTrustParams& params,
                    std::span<const EpisodeEvidence> episodes) {
  BetaTrustState state = init_state(params);
  double total = 0.0;
  for (const EpisodeEvidence& episode : episodes) {
    state = baseline_binary_update(state, episode.success_flag, params);
    total += episode_term(episode.reported_trust, state);
  }
  return total;
}

DEConfig CalibrationConfig::de_config() const {
  DEConfig de;
  de.population = population;
  de.differential_weight = differential_weight;
  de.crossover_rate = crossover_rate;
  de.generations = generations;
  de.seed = seed;
  de.lower = bounds.lower;
  de.upper = bounds.upper;
  return de;
}

DEConfig CalibrationConfig::baseline_de_config() const {
  DEConfig de = de_config();
  // Drop the epsilon coordinate (index 4).
  de.lower.erase(de.lower.begin() + 4);
  de.upper.erase(de.upper.begin() + 4);
  return de;
}

CalibrationResult calibrate(const CalibrationSet& set,
                            const CalibrationConfig& config,
                            const std::optional<TrustParams>& warm_start) {
  if (set.episodes.empty()) throw DomainError("calibration set is empty");
  const auto evidence = evidence_of(set);
  const Objective objective = [&evidence](std::span<const double> x) {
    return nll(TrustParams::from_array(x), evidence);
  };
  std::optional<std::span<const double>> seed_member;
  std::array<double, TrustParams::kDimension> warm{};
  if (warm_start) {
    warm = warm_start->to_array();
    seed_member = std::span<const double>(warm);
  }
  CalibrationResult result;
  result.search = differential_evolution(objective, config.de_config(), seed_member);
  result.params = TrustParams::from_array(result.search.best);
  result.nll = result.search.best_value;
  return result;
}

BaselineCalibrationResult calibrate_baseline(const CalibrationSet& set,
                                             const CalibrationConfig& config) {
  if (set.episodes.empty()) throw DomainError("calibration set is empty");
  const auto evidence = evidence_of(set);
  const Objective objective = [&evidence](std::span<const double> x) {
    return baseline_nll(BinaryTrustParams::from_array(x), evidence);
  };
  BaselineCalibrationResult result;
  result.search = differential_evolution(objective, config.baseline_de_config());
  result.params = BinaryTrustParams::from_array(result.search.best);
  result.nll = result.search.best_value;
  return result;
}

std::vector<BetaTrustState> replay_episode_ends(
    const TrustParams& params, std::span<const EpisodeEvidence> episodes) {
  std::vector<BetaTrustState> ends;
  ends.reserve(episodes.size());
  BetaTrustState state = init_state(params);
  for (const EpisodeEvidence& episode : episodes) {
    for (double r : episode.rewards) state = update(state, r, params);
    ends.push_back(state);
  }
  return ends;
}

}  // namespace trustbeta
