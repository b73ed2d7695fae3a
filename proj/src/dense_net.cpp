#include "jsrl/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jsrl/rng.hpp"

namespace jsrl {

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  throw std::logic_error("bad activation enum");
}

UpdateMode update_mode_from_string(std::string_view name) {
  if (name == "sgd") return UpdateMode::kSgd;
  if (name == "adam") return UpdateMode::kAdam;
  throw std::invalid_argument("unknown update mode: " + std::string(name));
}

std::string_view to_string(UpdateMode m) {
  return m == UpdateMode::kSgd ? "sgd" : "adam";
}

int DenseNet::param_count() const {
  int n = 0;
  for (const Mat& w : weights) n += w.rows * w.cols;
  for (const Vec& b : biases) n += static_cast<int>(b.size());
  return n;
}

DenseNet init_dense(std::vector<int> layer_sizes, Activation activation, uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("init_dense: need at least two layers");
  for (int s : layer_sizes)
    if (s < 1) throw std::invalid_argument("init_dense: layer size must be positive");
  DenseNet net;
  net.layer_sizes = std::move(layer_sizes);
  net.activation = activation;
  std::mt19937_64 rng(seed);
  for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int fan_in = net.layer_sizes[l];
    const int fan_out = net.layer_sizes[l + 1];
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Mat w(fan_out, fan_in);
    for (double& x : w.data) x = (2.0 * unit_uniform(rng) - 1.0) * limit;
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(fan_out, 0.0);
  }
  return net;
}

static double activate(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: return std::tanh(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kIdentity: return x;
  }
  return x;
}

// Derivative expressed through pre- and post-activation values.
static double activate_grad(Activation a, double pre, double post) {
  switch (a) {
    case Activation::kTanh: return 1.0 - post * post;
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

Vec forward(const DenseNet& net, std::span<const double> input, ForwardCache* cache) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::invalid_argument("forward: input size " + std::to_string(input.size()) +
                                " != expected " + std::to_string(net.input_dim()));
  if (cache) {
    cache->input.assign(input.begin(), input.end());
    cache->pre.assign(net.layer_count(), {});
    cache->post.assign(net.layer_count(), {});
  }
  Vec cur(input.begin(), input.end());
  for (int l = 0; l < net.layer_count(); ++l) {
    const Mat& w = net.weights[l];
    Vec pre(w.rows);
    for (int r = 0; r < w.rows; ++r) pre[r] = net.biases[l][r] + dot(w.row(r), cur);
    const bool last = l == net.layer_count() - 1;
    Vec post(w.rows);
    for (int r = 0; r < w.rows; ++r) post[r] = last ? pre[r] : activate(net.activation, pre[r]);
    if (cache) {
      cache->pre[l] = pre;
      cache->post[l] = post;
    }
    cur = std::move(post);
  }
  return cur;
}

void NetGrads::scale(double a) {
  for (Mat& w : weights)
    for (double& x : w.data) x *= a;
  for (Vec& b : biases)
    for (double& x : b) x *= a;
  for (double& x : input) x *= a;
}

void NetGrads::add(const NetGrads& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    for (size_t i = 0; i < weights[l].data.size(); ++i) weights[l].data[i] += other.weights[l].data[i];
    for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
  for (size_t i = 0; i < input.size(); ++i) input[i] += other.input[i];
}

double NetGrads::squared_norm() const {
  double s = 0.0;
  for (const Mat& w : weights)
    for (double x : w.data) s += x * x;
  for (const Vec& b : biases)
    for (double x : b) s += x * x;
  return s;
}

NetGrads make_zero_grads(const DenseNet& net) {
  NetGrads g;
  for (int l = 0; l < net.layer_count(); ++l) {
    g.weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
    g.biases.emplace_back(net.biases[l].size(), 0.0);
  }
  g.input.assign(net.input_dim(), 0.0);
  return g;
}

void backward_into(const DenseNet& net, const ForwardCache& cache,
                   std::span<const double> out_grad, NetGrads& grads) {
  if (static_cast<int>(out_grad.size()) != net.output_dim())
    throw std::invalid_argument("backward: out_grad size mismatch");
  if (static_cast<int>(cache.post.size()) != net.layer_count())
    throw std::invalid_argument("backward: cache does not match net");
  Vec delta(out_grad.begin(), out_grad.end());  // d L / d post[l]
  for (int l = net.layer_count() - 1; l >= 0; --l) {
    const Mat& w = net.weights[l];
    Vec dpre(w.rows);
    const bool last = l == net.layer_count() - 1;
    for (int r = 0; r < w.rows; ++r)
      dpre[r] = last ? delta[r]
                     : delta[r] * activate_grad(net.activation, cache.pre[l][r], cache.post[l][r]);
    const Vec& below = l == 0 ? cache.input : cache.post[l - 1];
    Mat& dw = grads.weights[l];
    for (int r = 0; r < w.rows; ++r) axpy(dpre[r], below, dw.row(r));
    for (int r = 0; r < w.rows; ++r) grads.biases[l][r] += dpre[r];
    Vec next(w.cols, 0.0);
    for (int r = 0; r < w.rows; ++r) axpy(dpre[r], w.row(r), next);
    delta = std::move(next);
  }
  for (size_t i = 0; i < delta.size(); ++i) grads.input[i] += delta[i];
}

NetGrads backward(const DenseNet& net, const ForwardCache& cache,
                  std::span<const double> out_grad) {
  NetGrads g = make_zero_grads(net);
  backward_into(net, cache, out_grad, g);
  return g;
}

AdamState make_adam_state(const DenseNet& net) {
  AdamState s;
  for (int l = 0; l < net.layer_count(); ++l) {
    s.m_w.emplace_back(net.weights[l].rows, net.weights[l].cols);
    s.v_w.emplace_back(net.weights[l].rows, net.weights[l].cols);
    s.m_b.emplace_back(net.biases[l].size(), 0.0);
    s.v_b.emplace_back(net.biases[l].size(), 0.0);
  }
  return s;
}

static constexpr double kBeta1 = 0.9;
static constexpr double kBeta2 = 0.999;
static constexpr double kAdamEps = 1e-8;

static void adam_tensor(std::span<double> p, std::span<const double> g, std::span<double> m,
                        std::span<double> v, double lr, double bc1, double bc2) {
  for (size_t i = 0; i < p.size(); ++i) {
    m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
    v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    p[i] -= lr * mh / (std::sqrt(vh) + kAdamEps);
  }
}

void apply_update(DenseNet& net, const NetGrads& grads, AdamState& state, double lr,
                  UpdateMode mode) {
  for (int l = 0; l < net.layer_count(); ++l) {
    if (!all_finite(grads.weights[l]) || !all_finite(grads.biases[l]))
      throw std::runtime_error("apply_update: non-finite gradient in layer " + std::to_string(l));
  }
  if (mode == UpdateMode::kSgd) {
    for (int l = 0; l < net.layer_count(); ++l) {
      for (size_t i = 0; i < net.weights[l].data.size(); ++i)
        net.weights[l].data[i] -= lr * grads.weights[l].data[i];
      for (size_t i = 0; i < net.biases[l].size(); ++i)
        net.biases[l][i] -= lr * grads.biases[l][i];
    }
    return;
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  for (int l = 0; l < net.layer_count(); ++l) {
    adam_tensor(net.weights[l].data, grads.weights[l].data, state.m_w[l].data, state.v_w[l].data,
                lr, bc1, bc2);
    adam_tensor(net.biases[l], grads.biases[l], state.m_b[l], state.v_b[l], lr, bc1, bc2);
  }
}

static double rel_error(double a, double f) {
  return std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
}

GradCheckReport check_gradients(const DenseNet& net, std::span<const double> input,
                                double tolerance, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vec out_grad(net.output_dim());
  for (double& x : out_grad) x = 2.0 * unit_uniform(rng) - 1.0;

  ForwardCache cache;
  forward(net, input, &cache);
  NetGrads analytic = backward(net, cache, out_grad);

  DenseNet probe = net;
  Vec probe_input(input.begin(), input.end());
  const double h = 1e-5;
  auto loss = [&]() { return dot(forward(probe, probe_input), out_grad); };

  GradCheckReport report;
  auto check_one = [&](double& slot, double analytic_g) {
    const double keep = slot;
    slot = keep + h;
    const double up = loss();
    slot = keep - h;
    const double down = loss();
    slot = keep;
    const double fd = (up - down) / (2.0 * h);
    report.max_rel_error = std::max(report.max_rel_error, rel_error(analytic_g, fd));
    report.checked += 1;
  };

  for (int l = 0; l < net.layer_count(); ++l) {
    for (size_t i = 0; i < probe.weights[l].data.size(); ++i)
      check_one(probe.weights[l].data[i], analytic.weights[l].data[i]);
    for (size_t i = 0; i < probe.biases[l].size(); ++i)
      check_one(probe.biases[l][i], analytic.biases[l][i]);
  }
  for (size_t i = 0; i < probe_input.size(); ++i)
    check_one(probe_input[i], analytic.input[i]);

  report.pass = report.max_rel_error < tolerance;
  return report;
}

}  // namespace jsrl
