#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trustbeta/rng.hpp"

namespace trustbeta::diffnet {

enum class Activation { kLinear, kTanh, kSoftplus };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

struct HeadSpec {
  std::string name;
  int size = 1;
  Activation activation = Activation::kLinear;

  bool operator==(const HeadSpec&) const = default;
};

// Fully connected trunk with tanh hidden units and one or more output heads
// reading the last hidden layer. layer_sizes = {inputs, hidden_1, ...}.
struct NetSpec {
  std::vector<int> layer_sizes;
  Activation hidden_activation = Activation::kTanh;
  std::vector<HeadSpec> heads;

  int input_size() const { return layer_sizes.front(); }
  std::size_t parameter_count() const;
  std::size_t head_index(std::string_view name) const;
  void validate() const;  // throws ConfigError

  bool operator==(const NetSpec&) const = default;
};

// Intermediate values of one forward pass, consumed by backward().
struct ForwardCache {
  std::vector<std::vector<double>> layers;  // layers[0] is the input
  std::vector<std::vector<double>> heads;   // post-activation outputs
  std::vector<std::vector<double>> head_pre;
};

// Parameters are one flat vector: per hidden layer the row-major weight
// matrix then the bias, followed by the same pair for each head.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(NetSpec spec);  // all-zero parameters
  Mlp(NetSpec spec, std::vector<double> params);

  // Uniform fan-in scaled initialization.
  static Mlp initialized(NetSpec spec, Rng& rng);

  ForwardCache forward(std::span<const double> input) const;

  // Accumulates d(loss)/d(params) into param_grad and, when non-empty, writes
  // d(loss)/d(input) into input_grad. upstream[h] is d(loss)/d(head h output).
  void backward(const ForwardCache& cache,
                std::span<const std::vector<double>> upstream,
                std::span<double> param_grad,
                std::span<double> input_grad = {}) const;

  const NetSpec& spec() const { return spec_; }
  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

 private:
  NetSpec spec_;
  std::vector<double> params_;
};

}  // namespace trustbeta::diffnet
