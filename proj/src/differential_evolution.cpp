#include "trustbeta/differential_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trustbeta/errors.hpp"
#include "trustbeta/rng.hpp"

namespace trustbeta {
namespace {

double sanitize(double value) {
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

}  // namespace

void DEConfig::validate() const {
  if (population < 4) throw ConfigError("DE population must be >= 4");
  if (!(differential_weight > 0.0 && differential_weight <= 2.0)) {
    throw ConfigError("DE differential weight F must lie in (0, 2]");
  }
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw ConfigError("DE crossover rate must lie in [0, 1]");
  }
  if (generations < 0) throw ConfigError("DE generations must be >= 0");
  if (lower.empty() || lower.size() != upper.size()) {
    throw ConfigError("DE bounds must be nonempty and of equal length");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) ||
        !(lower[i] < upper[i])) {
      throw ConfigError("DE bounds must be finite with lower < upper");
    }
  }
}

DEResult differential_evolution(const Objective& objective,
                                const DEConfig& config,
                                std::optional<std::span<const double>> seed_member) {
  config.validate();
  const std::size_t dim = config.dimension();
  const int pop = config.population;
  Rng rng(config.seed);

  std::vector<std::vector<double>> members(pop, std::vector<double>(dim));
  for (auto& member : members) {
    for (std::size_t d = 0; d < dim; ++d) {
      member[d] = rng.uniform(config.lower[d], config.upper[d]);
    }
  }
  if (seed_member) {
    if (seed_member->size() != dim) {
      throw ConfigError("warm-start vector has the wrong dimension");
    }
    for (std::size_t d = 0; d < dim; ++d) {
      members[0][d] =
          std::clamp((*seed_member)[d], config.lower[d], config.upper[d]);
    }
  }

  DEResult result;
  std::vector<double> fitness(pop);
  for (int i = 0; i < pop; ++i) fitness[i] = sanitize(objective(members[i]));
  result.evaluations = pop;

  auto best_index = [&] {
    return static_cast<std::size_t>(
        std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
  };
  if (!std::isfinite(fitness[best_index()])) {
    throw OptimizationError(
        "objective is non-finite on the entire initial population");
  }
  result.history.push_back(fitness[best_index()]);

  std::vector<double> trial(dim);
  for (int gen = 0; gen < config.generations; ++gen) {
    // Trials are built from the current generation only; survivors replace
    // it once every member has been challenged.
    std::vector<std::vector<double>> next = members;
    std::vector<double> next_fitness = fitness;
    for (int i = 0; i < pop; ++i) {
      int r1, r2, r3;
      do r1 = static_cast<int>(rng.uniform_int(0, pop - 1)); while (r1 == i);
      do r2 = static_cast<int>(rng.uniform_int(0, pop - 1)); while (r2 == i || r2 == r1);
      do r3 = static_cast<int>(rng.uniform_int(0, pop - 1));
      while (r3 == i || r3 == r1 || r3 == r2);
      const auto forced = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(dim) - 1));
      for (std::size_t d = 0; d < dim; ++d) {
        if (d == forced || rng.uniform() < config.crossover_rate) {
          const double mutant =
              members[r1][d] +
              config.differential_weight * (members[r2][d] - members[r3][d]);
          trial[d] = std::clamp(mutant, config.lower[d], config.upper[d]);
        } else {
          trial[d] = members[i][d];
        }
      }
      const double value = sanitize(objective(trial));
      ++result.evaluations;
      if (value <= fitness[i]) {
        next[i] = trial;
        next_fitness[i] = value;
      }
    }
    members = std::move(next);
    fitness = std::move(next_fitness);
    result.history.push_back(fitness[best_index()]);
  }

  const std::size_t best = best_index();
  result.best = members[best];
  result.best_value = fitness[best];
  return result;
}

}  // namespace trustbeta
