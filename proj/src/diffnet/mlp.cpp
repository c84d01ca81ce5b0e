#include "trustbeta/diffnet/mlp.hpp"

#include <cmath>
#include <string>

#include "trustbeta/errors.hpp"

namespace trustbeta::diffnet {
namespace {

double activate(Activation activation, double x) {
  switch (activation) {
    case Activation::kLinear:
      return x;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kSoftplus:
      return x > 30.0 ? x : std::log1p(std::exp(x));
  }
  return x;
}

// Derivative expressed through the pre-activation x and output y.
double activation_slope(Activation activation, double x, double y) {
  switch (activation) {
    case Activation::kLinear:
      return 1.0;
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kSoftplus:
      return 1.0 / (1.0 + std::exp(-x));
  }
  return 1.0;
}

// out = W * in + b with W stored row-major at params[offset].
void affine(std::span<const double> params, std::size_t offset,
            std::span<const double> in, std::vector<double>& out) {
  const std::size_t rows = out.size();
  const std::size_t cols = in.size();
  const double* w = params.data() + offset;
  const double* b = w + rows * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

// Given d(loss)/d(out) for out = W * in + b, accumulates parameter gradients
// and adds d(loss)/d(in) to in_grad.
void affine_backward(std::span<const double> params, std::size_t offset,
                     std::span<const double> in, std::span<const double> delta,
                     std::span<double> param_grad, std::span<double> in_grad) {
  const std::size_t rows = delta.size();
  const std::size_t cols = in.size();
  const double* w = params.data() + offset;
  double* gw = param_grad.data() + offset;
  double* gb = gw + rows * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    const double d = delta[r];
    if (d == 0.0) continue;
    gb[r] += d;
    double* grow = gw + r * cols;
    const double* wrow = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      grow[c] += d * in[c];
      in_grad[c] += d * wrow[c];
    }
  }
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kLinear:
      return "linear";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSoftplus:
      return "softplus";
  }
  return "linear";
}

Activation activation_from_string(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "tanh") return Activation::kTanh;
  if (name == "softplus") return Activation::kSoftplus;
  throw SchemaError("unknown activation '" + std::string(name) + "'");
}

std::size_t NetSpec::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    count += static_cast<std::size_t>(layer_sizes[l]) *
             (static_cast<std::size_t>(layer_sizes[l - 1]) + 1);
  }
  for (const HeadSpec& head : heads) {
    count += static_cast<std::size_t>(head.size) *
             (static_cast<std::size_t>(layer_sizes.back()) + 1);
  }
  return count;
}

std::size_t NetSpec::head_index(std::string_view name) const {
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (heads[h].name == name) return h;
  }
  throw DomainError("network has no head named '" + std::string(name) + "'");
}

void NetSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw ConfigError("network needs an input size and >= 1 hidden layer");
  }
  for (int size : layer_sizes) {
    if (size < 1) throw ConfigError("layer sizes must be >= 1");
  }
  if (hidden_activation != Activation::kTanh) {
    throw ConfigError("hidden layers use tanh");
  }
  if (heads.empty()) throw ConfigError("network needs at least one head");
  for (const HeadSpec& head : heads) {
    if (head.size < 1) throw ConfigError("head sizes must be >= 1");
  }
}

Mlp::Mlp(NetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  params_.assign(spec_.parameter_count(), 0.0);
}

Mlp::Mlp(NetSpec spec, std::vector<double> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.size() != spec_.parameter_count()) {
    throw SchemaError("weight vector has " + std::to_string(params_.size()) +
                      " entries, network expects " +
                      std::to_string(spec_.parameter_count()));
  }
}

Mlp Mlp::initialized(NetSpec spec, Rng& rng) {
  Mlp net(std::move(spec));
  std::size_t offset = 0;
  auto fill_layer = [&](int fan_in, int fan_out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const std::size_t weights = static_cast<std::size_t>(fan_in) * fan_out;
    for (std::size_t i = 0; i < weights; ++i) {
      net.params_[offset + i] = rng.uniform(-bound, bound);
    }
    offset += weights + fan_out;  // biases start at zero
  };
  const auto& sizes = net.spec_.layer_sizes;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    fill_layer(sizes[l - 1], sizes[l]);
  }
  for (const HeadSpec& head : net.spec_.heads) fill_layer(sizes.back(), head.size);
  return net;
}

ForwardCache Mlp::forward(std::span<const double> input) const {
  if (input.size() != static_cast<std::size_t>(spec_.input_size())) {
    throw DomainError("network input has " + std::to_string(input.size()) +
                      " values, expected " +
                      std::to_string(spec_.input_size()));
  }
  const auto& sizes = spec_.layer_sizes;
  ForwardCache cache;
  cache.layers.reserve(sizes.size());
  cache.layers.emplace_back(input.begin(), input.end());
  std::size_t offset = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    std::vector<double> out(sizes[l]);
    affine(params_, offset, cache.layers.back(), out);
    for (double& v : out) v = activate(spec_.hidden_activation, v);
    offset += static_cast<std::size_t>(sizes[l]) * (sizes[l - 1] + 1);
    cache.layers.push_back(std::move(out));
  }
  for (const HeadSpec& head : spec_.heads) {
    std::vector<double> pre(head.size);
    affine(params_, offset, cache.layers.back(), pre);
    std::vector<double> out(head.size);
    for (int i = 0; i < head.size; ++i) out[i] = activate(head.activation, pre[i]);
    offset += static_cast<std::size_t>(head.size) * (sizes.back() + 1);
    cache.head_pre.push_back(std::move(pre));
    cache.heads.push_back(std::move(out));
  }
  return cache;
}

void Mlp::backward(const ForwardCache& cache,
                   std::span<const std::vector<double>> upstream,
                   std::span<double> param_grad,
                   std::span<double> input_grad) const {
  if (upstream.size() != spec_.heads.size()) {
    throw DomainError("need one upstream gradient per head");
  }
  if (param_grad.size() != params_.size()) {
    throw DomainError("parameter gradient buffer has the wrong size");
  }
  const auto& sizes = spec_.layer_sizes;
  const std::size_t depth = sizes.size() - 1;

  std::vector<std::size_t> layer_offsets(depth);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    layer_offsets[l - 1] = offset;
    offset += static_cast<std::size_t>(sizes[l]) * (sizes[l - 1] + 1);
  }

  // d(loss)/d(last hidden output)
  std::vector<double> grad_hidden(sizes.back(), 0.0);
  for (std::size_t h = 0; h < spec_.heads.size(); ++h) {
    const HeadSpec& head = spec_.heads[h];
    if (upstream[h].size() != static_cast<std::size_t>(head.size)) {
      throw DomainError("upstream gradient for head '" + head.name +
                        "' has the wrong size");
    }
    std::vector<double> delta(head.size);
    for (int i = 0; i < head.size; ++i) {
      delta[i] = upstream[h][i] * activation_slope(head.activation,
                                                   cache.head_pre[h][i],
                                                   cache.heads[h][i]);
    }
    affine_backward(params_, offset, cache.layers.back(), delta, param_grad,
                    grad_hidden);
    offset += static_cast<std::size_t>(head.size) * (sizes.back() + 1);
  }

  for (std::size_t l = depth; l >= 1; --l) {
    const std::vector<double>& out = cache.layers[l];
    std::vector<double> delta(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      delta[i] = grad_hidden[i] * (1.0 - out[i] * out[i]);
    }
    std::vector<double> grad_in(sizes[l - 1], 0.0);
    affine_backward(params_, layer_offsets[l - 1], cache.layers[l - 1], delta,
                    param_grad, grad_in);
    grad_hidden = std::move(grad_in);
  }
  if (!input_grad.empty()) {
    if (input_grad.size() != grad_hidden.size()) {
      throw DomainError("input gradient buffer has the wrong size");
    }
    std::copy(grad_hidden.begin(), grad_hidden.end(), input_grad.begin());
  }
}

}  // namespace trustbeta::diffnet
