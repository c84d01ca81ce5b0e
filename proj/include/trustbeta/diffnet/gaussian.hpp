#pragma once

#include "trustbeta/types.hpp"

namespace trustbeta::diffnet {

// Log density of N(mean, variance * I_3) at `action`.
double gaussian_logpdf(const Vec3& action, const Vec3& mean, double variance);

struct GaussianLogpdfGrad {
  double value = 0.0;
  Vec3 d_action{};
  Vec3 d_mean{};
  double d_variance = 0.0;
};

GaussianLogpdfGrad gaussian_logpdf_grad(const Vec3& action, const Vec3& mean,
                                        double variance);

}  // namespace trustbeta::diffnet
