#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace trustbeta {

struct DEConfig {
  int population = 48;
  double differential_weight = 0.7;  // F
  double crossover_rate = 0.9;       // CR
  int generations = 300;
  std::vector<double> lower;
  std::vector<double> upper;
  std::uint64_t seed = 0;

  std::size_t dimension() const { return lower.size(); }
  void validate() const;  // throws ConfigError
};

struct DEResult {
  std::vector<double> best;
  double best_value = 0.0;
  // history[g] is the best objective after generation g; history[0] is the
  // initial population.
  std::vector<double> history;
  std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

// DE/rand/1/bin with clipping to bounds and greedy one-to-one selection.
// Non-finite objective values lose every comparison. When `seed_member` is
// given it replaces population member 0 (warm start), clipped to bounds.
DEResult differential_evolution(
    const Objective& objective, const DEConfig& config,
    std::optional<std::span<const double>> seed_member = std::nullopt);

}  // namespace trustbeta
