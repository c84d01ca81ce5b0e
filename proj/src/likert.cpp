#include "trustbeta/likert.hpp"

#include <cmath>
#include <string>

#include "trustbeta/errors.hpp"

namespace trustbeta {
namespace {

constexpr std::array<std::string_view, LikertScale::kLevels> kLabels = {
    "High Distrust", "Moderate Distrust", "Slight Distrust", "Neutral",
    "Slight Trust",  "Moderate Trust",    "High Trust"};

void check_level(int level) {
  if (level < 1 || level > LikertScale::kLevels) {
    throw DomainError("Likert level must be in 1..7, got " +
                      std::to_string(level));
  }
}

void check_mapping(const LikertScale::Mapping& mapping) {
  for (int i = 0; i < LikertScale::kLevels; ++i) {
    if (!std::isfinite(mapping[i]) || mapping[i] < 0.0 || mapping[i] > 100.0) {
      throw ConfigError("Likert mapping values must lie in [0, 100]");
    }
    if (i > 0 && !(mapping[i] > mapping[i - 1])) {
      throw ConfigError("Likert mapping must be strictly increasing");
    }
  }
  if (mapping[3] != 50.0) {
    throw ConfigError("Likert mapping must send the neutral level to 50%");
  }
}

}  // namespace

LikertScale::LikertScale() : mapping_(kDefaultMapping) {}

LikertScale::LikertScale(const Mapping& mapping) : mapping_(mapping) {
  check_mapping(mapping_);
}

double LikertScale::to_percent(int level) const {
  check_level(level);
  return mapping_[level - 1];
}

LikertLevel LikertScale::make_level(int level) const {
  return LikertLevel{level, to_percent(level)};
}

int LikertScale::nearest_level(double percent) const {
  if (!std::isfinite(percent)) {
    throw DomainError("cannot quantize a non-finite percent");
  }
  int best = 1;
  double best_gap = std::abs(percent - mapping_[0]);
  for (int level = 2; level <= kLevels; ++level) {
    const double gap = std::abs(percent - mapping_[level - 1]);
    if (gap < best_gap) {
      best = level;
      best_gap = gap;
    }
  }
  return best;
}

std::string_view LikertScale::label(int level) {
  check_level(level);
  return kLabels[level - 1];
}

double likert_to_percent(int level, const LikertScale::Mapping& mapping) {
  return LikertScale(mapping).to_percent(level);
}

}  // namespace trustbeta
