#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trustbeta::diffnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter adaptive steps from bias-corrected moment estimates.
class Adam {
 public:
  Adam(std::size_t parameter_count, AdamConfig config = {});

  void step(std::span<double> params, std::span<const double> grad);

  std::size_t steps_taken() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
  std::size_t steps_ = 0;
};

}  // namespace trustbeta::diffnet
