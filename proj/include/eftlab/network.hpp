#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eftlab/errors.hpp"
#include "eftlab/rng.hpp"

namespace eftlab {

enum class Activation { kRelu, kTanh, kIdentity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw ParseError("unknown activation '" + s + "'");
}

// Scratch buffers for forward/backward so hot loops never allocate.
struct NetWorkspace {
  std::vector<double> acts;    // post-activations, all layers concatenated
  std::vector<double> pre;     // pre-activations, hidden + output layers
  std::vector<double> delta;   // back-propagated errors, two ping-pong rows
};

// Dense feed-forward network with a fixed hidden activation and output
// activation. Parameters live in one flat vector: for each layer, the weight
// matrix in row-major [out][in] order followed by the bias vector. Evaluation
// never mutates the network; gradients are exact (ReLU subgradient at 0 is 0).
class DenseNetwork {
 public:
  DenseNetwork() = default;

  DenseNetwork(std::vector<int> layer_sizes, Activation hidden,
               Activation output)
      : layer_sizes_(std::move(layer_sizes)),
        hidden_activation_(hidden),
        output_activation_(output) {
    if (layer_sizes_.size() < 2)
      throw ShapeError("network needs at least input and output layers");
    for (int s : layer_sizes_)
      if (s <= 0) throw ShapeError("layer sizes must be positive");
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
      layer_offsets_.push_back(count);
      count += static_cast<std::size_t>(layer_sizes_[l + 1]) *
                   static_cast<std::size_t>(layer_sizes_[l]) +
               static_cast<std::size_t>(layer_sizes_[l + 1]);
    }
    params_.assign(count, 0.0);
  }

  // Uniform init in +-1/sqrt(fan_in) for weights and biases, consumed from
  // the rng layer by layer (weights row-major, then bias).
  static DenseNetwork random_init(std::vector<int> layer_sizes,
                                  Activation hidden, Activation output,
                                  SeededRng& rng) {
    DenseNetwork net(std::move(layer_sizes), hidden, output);
    for (std::size_t l = 0; l + 1 < net.layer_sizes_.size(); ++l) {
      double bound = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes_[l]));
      std::size_t n = net.layer_param_count(l);
      double* p = net.params_.data() + net.layer_offsets_[l];
      for (std::size_t k = 0; k < n; ++k) p[k] = rng.uniform(-bound, bound);
    }
    return net;
  }

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  Activation hidden_activation() const { return hidden_activation_; }
  Activation output_activation() const { return output_activation_; }
  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  std::size_t num_layers() const { return layer_sizes_.size() - 1; }
  std::size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  bool same_architecture(const DenseNetwork& other) const {
    return layer_sizes_ == other.layer_sizes_ &&
           hidden_activation_ == other.hidden_activation_ &&
           output_activation_ == other.output_activation_;
  }

  void forward(std::span<const double> input, std::span<double> output,
               NetWorkspace& ws) const {
    check_input(input);
    if (output.size() != static_cast<std::size_t>(output_size()))
      throw ShapeError("output buffer size mismatch");
    run_forward(input, ws);
    const double* last = ws.acts.data() + act_offset(num_layers());
    for (int i = 0; i < output_size(); ++i) output[i] = last[i];
  }

  // Forward pass that leaves its intermediate state in ws so a subsequent
  // backward over the same input can skip recomputation. Returns a view of
  // the output activations (valid until ws is reused).
  std::span<const double> forward_prepared(std::span<const double> input,
                                           NetWorkspace& ws) const {
    check_input(input);
    run_forward(input, ws);
    return {ws.acts.data() + act_offset(num_layers()),
            static_cast<std::size_t>(output_size())};
  }

  std::vector<double> forward(std::span<const double> input) const {
    NetWorkspace ws;
    std::vector<double> out(static_cast<std::size_t>(output_size()));
    forward(input, out, ws);
    return out;
  }

  // Gradients of sum_k output[k]*output_grad[k] with respect to parameters
  // (accumulated into param_grad) and the input (overwrites input_grad).
  void backward(std::span<const double> input,
                std::span<const double> output_grad,
                std::span<double> param_grad, std::span<double> input_grad,
                NetWorkspace& ws, bool workspace_prepared = false) const {
    check_input(input);
    if (output_grad.size() != static_cast<std::size_t>(output_size()))
      throw ShapeError("output_grad size mismatch");
    if (param_grad.size() != params_.size())
      throw ShapeError("param_grad size mismatch");
    if (input_grad.size() != static_cast<std::size_t>(input_size()))
      throw ShapeError("input_grad size mismatch");

    if (!workspace_prepared) run_forward(input, ws);
    const std::size_t n_layers = num_layers();
    std::size_t max_width = 0;
    for (int s : layer_sizes_)
      max_width = std::max(max_width, static_cast<std::size_t>(s));
    ws.delta.resize(2 * max_width);
    double* cur = ws.delta.data();
    double* next = ws.delta.data() + max_width;

    // Output layer delta.
    {
      const int out_n = layer_sizes_.back();
      const double* pre = ws.pre.data() + pre_offset(n_layers - 1);
      for (int i = 0; i < out_n; ++i)
        cur[i] = output_grad[i] *
                 activation_derivative(output_activation_, pre[i]);
    }

    for (std::size_t l = n_layers; l-- > 0;) {
      const int in_n = layer_sizes_[l];
      const int out_n = layer_sizes_[l + 1];
      const double* w = params_.data() + layer_offsets_[l];
      double* gw = param_grad.data() + layer_offsets_[l];
      double* gb = gw + static_cast<std::size_t>(out_n) * in_n;
      const double* prev_act = ws.acts.data() + act_offset(l);

      for (int i = 0; i < out_n; ++i) {
        const double d = cur[i];
        double* gw_row = gw + static_cast<std::size_t>(i) * in_n;
        for (int j = 0; j < in_n; ++j) gw_row[j] += d * prev_act[j];
        gb[i] += d;
      }

      // Back-propagate into the previous layer (or the input).
      double* dst = (l == 0) ? input_grad.data() : next;
      for (int j = 0; j < in_n; ++j) dst[j] = 0.0;
      for (int i = 0; i < out_n; ++i) {
        const double d = cur[i];
        const double* w_row = w + static_cast<std::size_t>(i) * in_n;
        for (int j = 0; j < in_n; ++j) dst[j] += d * w_row[j];
      }
      if (l > 0) {
        const double* pre = ws.pre.data() + pre_offset(l - 1);
        for (int j = 0; j < in_n; ++j)
          dst[j] *= activation_derivative(hidden_activation_, pre[j]);
        std::swap(cur, next);
      }
    }
  }

  // Input gradient only; skips the weight-gradient accumulation entirely.
  void backward_input_only(std::span<const double> input,
                           std::span<const double> output_grad,
                           std::span<double> input_grad, NetWorkspace& ws,
                           bool workspace_prepared = false) const {
    check_input(input);
    if (output_grad.size() != static_cast<std::size_t>(output_size()))
      throw ShapeError("output_grad size mismatch");
    if (input_grad.size() != static_cast<std::size_t>(input_size()))
      throw ShapeError("input_grad size mismatch");
    if (!workspace_prepared) run_forward(input, ws);

    const std::size_t n_layers = num_layers();
    std::size_t max_width = 0;
    for (int s : layer_sizes_)
      max_width = std::max(max_width, static_cast<std::size_t>(s));
    ws.delta.resize(2 * max_width);
    double* cur = ws.delta.data();
    double* next = ws.delta.data() + max_width;
    {
      const int out_n = layer_sizes_.back();
      const double* pre = ws.pre.data() + pre_offset(n_layers - 1);
      for (int i = 0; i < out_n; ++i)
        cur[i] = output_grad[i] *
                 activation_derivative(output_activation_, pre[i]);
    }
    for (std::size_t l = n_layers; l-- > 0;) {
      const int in_n = layer_sizes_[l];
      const int out_n = layer_sizes_[l + 1];
      const double* w = params_.data() + layer_offsets_[l];
      double* dst = (l == 0) ? input_grad.data() : next;
      for (int j = 0; j < in_n; ++j) dst[j] = 0.0;
      for (int i = 0; i < out_n; ++i) {
        const double d = cur[i];
        const double* w_row = w + static_cast<std::size_t>(i) * in_n;
        for (int j = 0; j < in_n; ++j) dst[j] += d * w_row[j];
      }
      if (l > 0) {
        const double* pre = ws.pre.data() + pre_offset(l - 1);
        for (int j = 0; j < in_n; ++j)
          dst[j] *= activation_derivative(hidden_activation_, pre[j]);
        std::swap(cur, next);
      }
    }
  }

  // Convenience allocating variant; returns (param_grad, input_grad).
  std::pair<std::vector<double>, std::vector<double>> backward(
      std::span<const double> input,
      std::span<const double> output_grad) const {
    NetWorkspace ws;
    std::vector<double> pg(params_.size(), 0.0);
    std::vector<double> ig(static_cast<std::size_t>(input_size()), 0.0);
    backward(input, output_grad, pg, ig, ws);
    return {std::move(pg), std::move(ig)};
  }

  std::size_t layer_offset(std::size_t l) const { return layer_offsets_[l]; }
  std::size_t layer_param_count(std::size_t l) const {
    return static_cast<std::size_t>(layer_sizes_[l + 1]) *
               static_cast<std::size_t>(layer_sizes_[l]) +
           static_cast<std::size_t>(layer_sizes_[l + 1]);
  }

 private:
  void check_input(std::span<const double> input) const {
    if (input.size() != static_cast<std::size_t>(input_size()))
      throw ShapeError("input size " + std::to_string(input.size()) +
                       " != expected " + std::to_string(input_size()));
  }

  std::size_t act_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
      off += static_cast<std::size_t>(layer_sizes_[l]);
    return off;
  }

  std::size_t pre_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
      off += static_cast<std::size_t>(layer_sizes_[l + 1]);
    return off;
  }

  static double activation_apply(Activation a, double z) {
    switch (a) {
      case Activation::kRelu: return z > 0.0 ? z : 0.0;
      case Activation::kTanh: return std::tanh(z);
      case Activation::kIdentity: return z;
    }
    return z;
  }

  static double activation_derivative(Activation a, double z) {
    switch (a) {
      case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
      case Activation::kTanh: {
        double t = std::tanh(z);
        return 1.0 - t * t;
      }
      case Activation::kIdentity: return 1.0;
    }
    return 1.0;
  }

  void run_forward(std::span<const double> input, NetWorkspace& ws) const {
    std::size_t total_acts = 0;
    for (int s : layer_sizes_) total_acts += static_cast<std::size_t>(s);
    ws.acts.resize(total_acts);
    ws.pre.resize(total_acts - static_cast<std::size_t>(layer_sizes_[0]));

    double* a0 = ws.acts.data();
    for (int j = 0; j < layer_sizes_[0]; ++j) a0[j] = input[j];

    for (std::size_t l = 0; l < num_layers(); ++l) {
      const int in_n = layer_sizes_[l];
      const int out_n = layer_sizes_[l + 1];
      const double* w = params_.data() + layer_offsets_[l];
      const double* b = w + static_cast<std::size_t>(out_n) * in_n;
      const double* src = ws.acts.data() + act_offset(l);
      double* pre = ws.pre.data() + pre_offset(l);
      double* dst = ws.acts.data() + act_offset(l + 1);
      const Activation act =
          (l == num_layers() - 1) ? output_activation_ : hidden_activation_;
      for (int i = 0; i < out_n; ++i) {
        const double* w_row = w + static_cast<std::size_t>(i) * in_n;
        double z = b[i];
        for (int j = 0; j < in_n; ++j) z += w_row[j] * src[j];
        pre[i] = z;
        dst[i] = activation_apply(act, z);
      }
    }
  }

  std::vector<int> layer_sizes_;
  Activation hidden_activation_ = Activation::kRelu;
  Activation output_activation_ = Activation::kIdentity;
  std::vector<double> params_;
  std::vector<std::size_t> layer_offsets_;
};

// target <- tau*source + (1-tau)*target, element-wise over all parameters.
inline void soft_update(DenseNetwork& target, const DenseNetwork& source,
                        double tau) {
  if (!target.same_architecture(source))
    throw ShapeError("soft_update: architecture mismatch");
  auto t = target.params();
  auto s = source.params();
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = tau * s[i] + (1.0 - tau) * t[i];
}

}  // namespace eftlab
