#pragma once

#include <array>
#include <string_view>

#include "trustbeta/types.hpp"

namespace trustbeta {

// 7-point trust questionnaire mapped onto a percent scale. The mapping must be
// strictly increasing with the neutral level (4) at exactly 50%.
class LikertScale {
 public:
  static constexpr int kLevels = 7;
  using Mapping = std::array<double, kLevels>;

  static constexpr Mapping kDefaultMapping = {2.0,  18.0, 34.0, 50.0,
                                              66.0, 82.0, 98.0};

  LikertScale();
  explicit LikertScale(const Mapping& mapping);

  double to_percent(int level) const;
  LikertLevel make_level(int level) const;
  // Level whose percent is closest to `percent`; ties go to the lower level.
  int nearest_level(double percent) const;

  const Mapping& mapping() const { return mapping_; }

  static std::string_view label(int level);

 private:
  Mapping mapping_;
};

// Free-function form of LikertScale::to_percent.
double likert_to_percent(int level, const LikertScale::Mapping& mapping);

}  // namespace trustbeta
