#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "jsrl/dense_net.hpp"
#include "jsrl/rng.hpp"

using namespace jsrl;

namespace {

// 2-4-3 tanh net with fixed parameters, evaluated longhand below.
DenseNet fixed_net(Activation act) {
  DenseNet net = init_dense({2, 4, 3}, act, 7);
  double w0 = 0.05;
  for (auto& w : net.weights)
    for (double& v : w.data) v = (w0 += 0.07) * ((int(w0 * 100) % 2) ? 1.0 : -1.0);
  double b0 = -0.2;
  for (auto& b : net.biases)
    for (double& v : b) v = (b0 += 0.11);
  return net;
}

}  // namespace

TEST_CASE("init_dense shapes, bounds and determinism") {
  DenseNet net = init_dense({3, 5, 2}, Activation::kTanh, 42);
  REQUIRE(net.layer_count() == 2);
  CHECK(net.input_dim() == 3);
  CHECK(net.output_dim() == 2);
  REQUIRE(net.weights[0].rows == 5);
  REQUIRE(net.weights[0].cols == 3);
  REQUIRE(net.weights[1].rows == 2);
  REQUIRE(net.weights[1].cols == 5);

  // uniform, zero-mean, scaled by 1/sqrt(fan_in); biases start at zero
  for (double v : net.weights[0].data) CHECK(std::abs(v) <= 1.0 / std::sqrt(3.0));
  for (double v : net.weights[1].data) CHECK(std::abs(v) <= 1.0 / std::sqrt(5.0));
  for (const Vec& b : net.biases)
    for (double v : b) CHECK(v == 0.0);

  CHECK(init_dense({3, 5, 2}, Activation::kTanh, 42).weights[0] == net.weights[0]);
  CHECK(init_dense({3, 5, 2}, Activation::kTanh, 43).weights[0] != net.weights[0]);

  CHECK_THROWS(init_dense({3}, Activation::kTanh, 0));
  CHECK_THROWS(init_dense({3, 0, 2}, Activation::kTanh, 0));
}

TEST_CASE("forward matches a longhand matrix chain") {
  for (Activation act : {Activation::kIdentity, Activation::kTanh, Activation::kRelu}) {
    CAPTURE(to_string(act));
    DenseNet net = fixed_net(act);
    Vec x{0.3, -0.8};
    Vec out = forward(net, x);

    Vec hidden(4);
    for (int i = 0; i < 4; ++i) {
      double s = net.biases[0][i];
      for (int j = 0; j < 2; ++j) s += net.weights[0](i, j) * x[j];
      if (act == Activation::kTanh) s = std::tanh(s);
      if (act == Activation::kRelu) s = s > 0 ? s : 0.0;
      hidden[i] = s;
    }
    REQUIRE(out.size() == 3);
    for (int i = 0; i < 3; ++i) {
      double s = net.biases[1][i];  // output layer stays linear
      for (int j = 0; j < 4; ++j) s += net.weights[1](i, j) * hidden[j];
      CHECK(out[i] == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward matches finite differences") {
  auto rng = make_rng(99);
  for (int c = 0; c < 10; ++c) {
    std::vector<int> sizes{1 + bounded_int(rng, 4), 1 + bounded_int(rng, 5),
                           1 + bounded_int(rng, 4)};
    DenseNet net = init_dense(sizes, c % 2 ? Activation::kTanh : Activation::kIdentity,
                              derive_seed(99, 1, c));
    Vec input(sizes[0]);
    for (double& v : input) v = 2.0 * unit_uniform(rng) - 1.0;
    GradCheckReport r = check_gradients(net, input, 1e-4, derive_seed(99, 2, c));
    CAPTURE(r.max_rel_error);
    CHECK(r.pass);
    CHECK(r.checked > 0);
  }
}

TEST_CASE("relu backward, hand-computed away from the kink") {
  // 2-2-1 relu net; first hidden unit active, second inactive.
  DenseNet net = init_dense({2, 2, 1}, Activation::kRelu, 0);
  net.weights[0](0, 0) = 1.0;
  net.weights[0](0, 1) = 2.0;
  net.weights[0](1, 0) = -1.0;
  net.weights[0](1, 1) = 0.5;
  net.biases[0] = {0.5, -3.0};
  net.weights[1](0, 0) = 2.0;
  net.weights[1](0, 1) = -1.5;
  net.biases[1] = {0.25};

  Vec x{1.0, 1.0};  // pre: [3.5, -3.5] -> post: [3.5, 0] -> out 0.25 + 7 = 7.25
  ForwardCache cache;
  Vec out = forward(net, x, &cache);
  REQUIRE(out[0] == doctest::Approx(7.25).epsilon(1e-15));

  NetGrads g = backward(net, cache, Vec{1.0});
  // d out / d W1 = post-activations; d out / d b1 = 1
  CHECK(g.weights[1](0, 0) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(g.weights[1](0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.biases[1][0] == doctest::Approx(1.0).epsilon(1e-15));
  // hidden grad: [2.0, -1.5] gated by relu mask [1, 0]
  CHECK(g.biases[0][0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g.biases[0][1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.weights[0](0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g.weights[0](0, 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g.weights[0](1, 0) == doctest::Approx(0.0).epsilon(1e-15));
  // input grad: W0^T (gated hidden grad) = [2*1 + 0, 2*2 + 0]
  CHECK(g.input[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g.input[1] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("sgd update is plain arithmetic") {
  DenseNet net = init_dense({1, 1}, Activation::kIdentity, 3);
  net.weights[0](0, 0) = 2.0;
  net.biases[0][0] = -1.0;
  NetGrads g = make_zero_grads(net);
  g.weights[0](0, 0) = 0.5;
  g.biases[0][0] = -2.0;
  AdamState state = make_adam_state(net);
  apply_update(net, g, state, 0.1, UpdateMode::kSgd);
  CHECK(net.weights[0](0, 0) == doctest::Approx(2.0 - 0.1 * 0.5).epsilon(1e-15));
  CHECK(net.biases[0][0] == doctest::Approx(-1.0 + 0.1 * 2.0).epsilon(1e-15));
}

TEST_CASE("adam first step moves each parameter by about lr") {
  DenseNet net = init_dense({2, 2}, Activation::kIdentity, 3);
  DenseNet before = net;
  NetGrads g = make_zero_grads(net);
  g.weights[0](0, 0) = 0.3;
  g.weights[0](1, 1) = -4.0;
  AdamState state = make_adam_state(net);
  apply_update(net, g, state, 0.001, UpdateMode::kAdam);
  // bias-corrected m=g, v=g^2, so the step is lr * g/(|g| + eps) = ±lr
  CHECK(net.weights[0](0, 0) ==
        doctest::Approx(before.weights[0](0, 0) - 0.001).epsilon(1e-6));
  CHECK(net.weights[0](1, 1) ==
        doctest::Approx(before.weights[0](1, 1) + 0.001).epsilon(1e-6));
  CHECK(net.weights[0](0, 1) == before.weights[0](0, 1));  // zero grad, zero move
}

TEST_CASE("apply_update rejects non-finite gradients") {
  DenseNet net = init_dense({1, 1}, Activation::kIdentity, 3);
  NetGrads g = make_zero_grads(net);
  g.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState state = make_adam_state(net);
  CHECK_THROWS_WITH_AS(apply_update(net, g, state, 0.1, UpdateMode::kSgd),
                       doctest::Contains("non-finite"), std::runtime_error);
}
