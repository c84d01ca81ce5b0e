#include "trustbeta/diffnet/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "trustbeta/errors.hpp"

namespace trustbeta::diffnet {
namespace {

void check_variance(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw DomainError("Gaussian variance must be positive and finite");
  }
}

}  // namespace

double gaussian_logpdf(const Vec3& action, const Vec3& mean, double variance) {
  check_variance(variance);
  const Vec3 diff = action - mean;
  return -0.5 * (3.0 * std::log(2.0 * std::numbers::pi * variance) +
                 dot(diff, diff) / variance);
}

GaussianLogpdfGrad gaussian_logpdf_grad(const Vec3& action, const Vec3& mean,
                                        double variance) {
  GaussianLogpdfGrad out;
  out.value = gaussian_logpdf(action, mean, variance);
  const Vec3 diff = action - mean;
  out.d_mean = (1.0 / variance) * diff;
  out.d_action = (-1.0 / variance) * diff;
  out.d_variance = -1.5 / variance + 0.5 * dot(diff, diff) / (variance * variance);
  return out;
}

}  // namespace trustbeta::diffnet
