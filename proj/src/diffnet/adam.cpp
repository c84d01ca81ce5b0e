#include "trustbeta/diffnet/adam.hpp"

#include <cmath>

#include "trustbeta/errors.hpp"

namespace trustbeta::diffnet {

Adam::Adam(std::size_t parameter_count, AdamConfig config)
    : config_(config),
      first_moment_(parameter_count, 0.0),
      second_moment_(parameter_count, 0.0) {
  if (!(config_.learning_rate > 0.0)) {
    throw ConfigError("learning rate must be positive");
  }
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != first_moment_.size() || grad.size() != params.size()) {
    throw DomainError("Adam step size mismatch");
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_moment_[i] = b1 * first_moment_[i] + (1.0 - b1) * grad[i];
    second_moment_[i] = b2 * second_moment_[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = first_moment_[i] / correction1;
    const double v_hat = second_moment_[i] / correction2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace trustbeta::diffnet
