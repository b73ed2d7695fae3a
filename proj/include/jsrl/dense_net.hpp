#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jsrl/matrix.hpp"

namespace jsrl {

enum class Activation { kTanh, kRelu, kIdentity };

Activation activation_from_string(std::string_view name);
std::string_view to_string(Activation a);

/// Fully-connected net. Hidden layers share one activation; the output layer
/// is always linear.
struct DenseNet {
  std::vector<int> layer_sizes;  // input, hidden..., output
  Activation activation = Activation::kTanh;
  std::vector<Mat> weights;  // weights[l] is (layer_sizes[l+1] x layer_sizes[l])
  std::vector<Vec> biases;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  int param_count() const;
};

/// Zero-mean uniform weights scaled by 1/sqrt(fan_in), zero biases.
DenseNet init_dense(std::vector<int> layer_sizes, Activation activation, uint64_t seed);

/// Intermediate values of one forward pass, needed by backward().
struct ForwardCache {
  Vec input;
  std::vector<Vec> pre;   // pre-activation per layer
  std::vector<Vec> post;  // post-activation per layer; post.back() is the output
};

/// Returns the network output. Pass a cache to enable backward().
Vec forward(const DenseNet& net, std::span<const double> input, ForwardCache* cache = nullptr);

struct NetGrads {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  Vec input;  // gradient w.r.t. the input vector

  void scale(double a);
  void add(const NetGrads& other);  // elementwise +=, input grads included
  double squared_norm() const;      // parameter grads only
};

NetGrads make_zero_grads(const DenseNet& net);

/// Accumulates (+=) the gradients of L = <out_grad, net(input)> into `grads`.
void backward_into(const DenseNet& net, const ForwardCache& cache, std::span<const double> out_grad,
                   NetGrads& grads);
NetGrads backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> out_grad);

enum class UpdateMode { kSgd, kAdam };

UpdateMode update_mode_from_string(std::string_view name);
std::string_view to_string(UpdateMode m);

struct AdamState {
  std::vector<Mat> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  long step = 0;
};

AdamState make_adam_state(const DenseNet& net);

/// One optimizer step (descent). Adam uses beta1=0.9, beta2=0.999, eps=1e-8
/// with bias correction. Throws on non-finite gradient values.
void apply_update(DenseNet& net, const NetGrads& grads, AdamState& state, double lr,
                  UpdateMode mode);

struct GradCheckReport {
  double max_rel_error = 0.0;
  int checked = 0;
  bool pass = false;
};

/// Compares backward() against central finite differences (h=1e-5) for every
/// parameter and every input coordinate, under a random linear loss.
/// Relative error is |a-f| / max(1, |a|, |f|).
GradCheckReport check_gradients(const DenseNet& net, std::span<const double> input,
                                double tolerance, uint64_t seed = 12345);

}  // namespace jsrl
