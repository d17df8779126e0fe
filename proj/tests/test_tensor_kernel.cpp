#include <doctest.h>

#include <cmath>

#include "xmexp/errors.hpp"
#include "xmexp/gradcheck.hpp"
#include "xmexp/layers.hpp"
#include "xmexp/rng.hpp"
#include "xmexp/tensor.hpp"

using namespace xmexp;

namespace {

double sum_all(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.data) acc += v;
  return acc;
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

double mse(const Tensor& out, const Tensor& target) {
  double acc = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double d = out.data[i] - target.data[i];
    acc += 0.5 * d * d;
  }
  return acc;
}

Tensor mse_grad(const Tensor& out, const Tensor& target) {
  Tensor g(out.shape);
  for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] = out.data[i] - target.data[i];
  return g;
}

}  // namespace

TEST_SUITE_BEGIN("tensor_kernel");

TEST_CASE("tensor shape/data invariants") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor({0, 3}), ConfigError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ConfigError);
  CHECK_THROWS_AS(t.reshaped({5}), ConfigError);
  CHECK(t.reshaped({3, 2}).shape == std::vector<int>{3, 2});
}

TEST_CASE("conv2d: 2x2 ones kernel over 3x3 ones, valid") {
  Conv2d conv(1, 1, 2, 2, Padding::valid);
  conv.params.weights.fill(1.0);
  const Tensor out = conv.forward(Tensor::full({1, 3, 3}, 1.0));
  CHECK(out.shape == std::vector<int>{1, 2, 2});
  for (double v : out.data) CHECK(v == doctest::Approx(4.0));
}

TEST_CASE("conv2d: 1x1 identity kernel, same padding") {
  Conv2d conv(1, 1, 1, 1, Padding::same);
  conv.params.weights.data[0] = 1.0;
  Rng rng(7);
  const Tensor input = random_tensor({1, 4, 5}, rng);
  const Tensor out = conv.forward(input);
  CHECK(out.shape == input.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    CHECK(out.data[i] == doctest::Approx(input.data[i]));
  }
}

TEST_CASE("conv2d: same padding preserves spatial dims for odd kernels") {
  Rng rng(11);
  for (int k : {1, 3, 5, 7}) {
    Conv2d conv(2, 3, k, k, Padding::same);
    conv.params.init_glorot(rng);
    const Tensor out = conv.forward(random_tensor({2, 9, 7}, rng));
    CHECK(out.shape == std::vector<int>{3, 9, 7});
  }
}

TEST_CASE("conv2d: shape mismatch reports offending dims") {
  Conv2d conv(2, 4, 3, 3, Padding::same);
  CHECK_THROWS_WITH_AS(conv.forward(Tensor({3, 8, 8})),
                       doctest::Contains("channel mismatch"), ConfigError);
}

TEST_CASE("conv2d: analytic gradients match central finite differences") {
  Rng rng(42);
  Conv2d conv(2, 4, 3, 3, Padding::same);
  conv.params.init_glorot(rng);
  Tensor input = random_tensor({2, 8, 8}, rng);
  const Tensor target = random_tensor({4, 8, 8}, rng);
  Tensor input_grad(input.shape);

  auto fwd = [&] { return mse(conv.forward(input), target); };
  auto fwd_bwd = [&] {
    const Tensor out = conv.forward(input);
    input_grad = conv.backward(mse_grad(out, target));
    return mse(out, target);
  };
  auto blocks = param_blocks("conv", conv.params);
  blocks.push_back({"conv.input", &input, &input_grad});
  const auto report = gradcheck(blocks, fwd, fwd_bwd, 1e-5, 1e-4);
  CHECK(report.passed());
  CHECK(report.worst_error() < 1e-4);
}

TEST_CASE("maxpool2x2: max of four") {
  MaxPool2x2 pool;
  const Tensor out = pool.forward(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  CHECK(out.shape == std::vector<int>{1, 1, 1});
  CHECK(out.data[0] == doctest::Approx(4.0));
}

TEST_CASE("maxpool2x2: ceil mode on a width-5 row") {
  MaxPool2x2 pool;
  const Tensor out = pool.forward(Tensor({1, 1, 5}, {1, 2, 3, 4, 5}));
  CHECK(out.shape == std::vector<int>{1, 1, 3});
  CHECK(out.data[0] == doctest::Approx(2.0));
  CHECK(out.data[1] == doctest::Approx(4.0));
  CHECK(out.data[2] == doctest::Approx(5.0));
}

TEST_CASE("maxpool2x2: gradient is 1 at each selected max, 0 elsewhere") {
  Rng rng(5);
  MaxPool2x2 pool;
  Tensor input = random_tensor({2, 5, 4}, rng);
  const Tensor out = pool.forward(input);
  const Tensor grad_in = pool.backward(Tensor::full(out.shape, 1.0));

  int ones = 0;
  for (double v : grad_in.data) {
    CHECK((v == 0.0 || v == 1.0));
    ones += v == 1.0;
  }
  CHECK(ones == static_cast<int>(out.numel()));

  // And the same via central differences on sum(output).
  Tensor input_grad(input.shape);
  auto fwd = [&] { return sum_all(pool.forward(input)); };
  auto fwd_bwd = [&] {
    const Tensor o = pool.forward(input);
    input_grad = pool.backward(Tensor::full(o.shape, 1.0));
    return sum_all(o);
  };
  const auto report = gradcheck({{"pool.input", &input, &input_grad}}, fwd, fwd_bwd, 1e-5, 1e-4);
  CHECK(report.passed());
}

TEST_CASE("upsample2x: nearest-neighbour repeat") {
  Upsample2x up;
  const Tensor out = up.forward(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  const Tensor expected({1, 4, 4}, {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});
  CHECK(out.shape == expected.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    CHECK(out.data[i] == doctest::Approx(expected.data[i]));
  }
}

TEST_CASE("maxpool2x2 after upsample2x is the identity") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor input = random_tensor({static_cast<int>(1 + rng.below(3)),
                                        static_cast<int>(1 + rng.below(6)),
                                        static_cast<int>(1 + rng.below(6))},
                                       rng);
    Upsample2x up;
    MaxPool2x2 pool;
    const Tensor out = pool.forward(up.forward(input));
    REQUIRE(out.shape == input.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
      CHECK(out.data[i] == doctest::Approx(input.data[i]));
    }
  }
}

TEST_CASE("upsample2x: gradient check") {
  Rng rng(17);
  Upsample2x up;
  Tensor input = random_tensor({2, 3, 3}, rng);
  const Tensor target = random_tensor({2, 6, 6}, rng);
  Tensor input_grad(input.shape);
  auto fwd = [&] { return mse(up.forward(input), target); };
  auto fwd_bwd = [&] {
    const Tensor out = up.forward(input);
    input_grad = up.backward(mse_grad(out, target));
    return mse(out, target);
  };
  CHECK(gradcheck({{"up.input", &input, &input_grad}}, fwd, fwd_bwd, 1e-5, 1e-4).passed());
}

TEST_CASE("dense: identity weights") {
  Dense dense(3, 3);
  for (int i = 0; i < 3; ++i) dense.params.weights.data[i * 3 + i] = 1.0;
  const Tensor out = dense.forward(Tensor({3}, {1.5, -2.0, 0.25}));
  CHECK(out.data[0] == doctest::Approx(1.5));
  CHECK(out.data[1] == doctest::Approx(-2.0));
  CHECK(out.data[2] == doctest::Approx(0.25));
}

TEST_CASE("dense: W=[[1,1]], b=[0.5], x=[2,3] -> [5.5]") {
  Dense dense(1, 2);
  dense.params.weights.fill(1.0);
  dense.params.biases.data[0] = 0.5;
  CHECK(dense.forward(Tensor({2}, {2.0, 3.0})).data[0] == doctest::Approx(5.5));
}

TEST_CASE("dense: dim mismatch") {
  Dense dense(4, 8);
  CHECK_THROWS_AS(dense.forward(Tensor({7})), ConfigError);
}

TEST_CASE("dense: gradient check on a random 16->8 layer") {
  Rng rng(23);
  Dense dense(8, 16);
  dense.params.init_glorot(rng);
  Tensor input = random_tensor({16}, rng);
  const Tensor target = random_tensor({8}, rng);
  Tensor input_grad(input.shape);
  auto fwd = [&] { return mse(dense.forward(input), target); };
  auto fwd_bwd = [&] {
    const Tensor out = dense.forward(input);
    input_grad = dense.backward(mse_grad(out, target));
    return mse(out, target);
  };
  auto blocks = param_blocks("dense", dense.params);
  blocks.push_back({"dense.input", &input, &input_grad});
  const auto report = gradcheck(blocks, fwd, fwd_bwd, 1e-5, 1e-4);
  CHECK(report.passed());
}

TEST_CASE("activations: pointwise values") {
  CHECK(relu(Tensor({2}, {-1.0, 2.0})).data[0] == doctest::Approx(0.0));
  CHECK(relu(Tensor({2}, {-1.0, 2.0})).data[1] == doctest::Approx(2.0));
  CHECK(sigmoid(Tensor({1}, {0.0})).data[0] == doctest::Approx(0.5));
  const Tensor s = sigmoid(Tensor({3}, {-30.0, 0.0, 30.0}));
  for (double v : s.data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("activations: gradient checks") {
  Rng rng(29);
  for (bool use_relu : {true, false}) {
    Relu relu_layer;
    SigmoidLayer sig_layer;
    Tensor input = random_tensor({10}, rng, -2.0, 2.0);
    const Tensor target = random_tensor({10}, rng);
    Tensor input_grad(input.shape);
    auto run = [&](const Tensor& x) {
      return use_relu ? relu_layer.forward(x) : sig_layer.forward(x);
    };
    auto fwd = [&] { return mse(run(input), target); };
    auto fwd_bwd = [&] {
      const Tensor out = run(input);
      const Tensor g = mse_grad(out, target);
      input_grad = use_relu ? relu_layer.backward(g) : sig_layer.backward(g);
      return mse(out, target);
    };
    CHECK(gradcheck({{"act.input", &input, &input_grad}}, fwd, fwd_bwd, 1e-5, 1e-4).passed());
  }
}

TEST_CASE("forward ops on finite inputs produce finite outputs") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Conv2d conv(2, 3, 3, 3, Padding::same);
    conv.params.init_glorot(rng);
    MaxPool2x2 pool;
    Upsample2x up;
    Dense dense(4, 12);
    dense.params.init_glorot(rng);

    const Tensor input = random_tensor({2, 7, 7}, rng, -100.0, 100.0);
    Tensor t = pool.forward(relu(conv.forward(input)));   // [3,4,4]
    CHECK(t.all_finite());
    t = up.forward(t);                                    // [3,8,8]
    CHECK(t.all_finite());
    t = pool.forward(pool.forward(t));                    // [3,2,2]
    CHECK(t.all_finite());
    CHECK(sigmoid(dense.forward(t.reshaped({12}))).all_finite());
  }
}

TEST_CASE("sgd_step: lr=0 is the identity on parameters") {
  Rng rng(37);
  Dense dense(3, 3);
  dense.params.init_glorot(rng);
  const std::vector<double> before = dense.params.weights.data;
  dense.params.weight_grad.fill(1.0);
  dense.params.bias_grad.fill(1.0);
  dense.params.grad_ready = true;
  sgd_step({&dense.params}, 0.0);
  CHECK(dense.params.weights.data == before);
  CHECK(dense.params.weight_grad.data[0] == 0.0);   // accumulators zeroed
}

TEST_CASE("sgd_step: scalar update w=1, grad=2, lr=0.1 -> 0.8") {
  LayerParams p = LayerParams::make_dense(1, 1);
  p.weights.data[0] = 1.0;
  p.weight_grad.data[0] = 2.0;
  p.grad_ready = true;
  sgd_step({&p}, 0.1);
  CHECK(p.weights.data[0] == doctest::Approx(0.8));
}

TEST_CASE("sgd_step: before backward is a state error") {
  LayerParams p = LayerParams::make_dense(2, 2);
  CHECK_THROWS_AS(sgd_step({&p}, 0.1), StateError);
}

TEST_CASE("sgd_step: 50 steps on (w-3)^2 converge geometrically") {
  // Oracle: w - 3 contracts by 0.8 per step, so |w50 - 3| = 3 * 0.8^50.
  const double expected_gap = 3.0 * std::pow(0.8, 50);

  LayerParams p = LayerParams::make_dense(1, 1);
  p.weights.data[0] = 0.0;
  for (int step = 0; step < 50; ++step) {
    p.weight_grad.data[0] = 2.0 * (p.weights.data[0] - 3.0);
    p.grad_ready = true;
    sgd_step({&p}, 0.1);
  }
  const double gap = std::fabs(p.weights.data[0] - 3.0);
  CHECK(gap == doctest::Approx(expected_gap).epsilon(1e-9));
  CHECK(gap < 1e-3);
}

TEST_CASE("gradcheck: linear map is exact to machine-epsilon scale") {
  Rng rng(41);
  Dense dense(4, 4);
  dense.params.init_glorot(rng);
  Tensor input = random_tensor({4}, rng);
  const Tensor target = random_tensor({4}, rng);

  // Loss linear in each weight: L = sum(out).
  auto fwd = [&] { return sum_all(dense.forward(input)); };
  auto fwd_bwd = [&] {
    const Tensor out = dense.forward(input);
    dense.backward(Tensor::full(out.shape, 1.0));
    return sum_all(out);
  };
  const auto report = gradcheck(param_blocks("lin", dense.params), fwd, fwd_bwd, 1e-5, 1e-4);
  CHECK(report.worst_error() < 1e-8);
}

TEST_CASE("gradcheck: doubled gradient reported near 1/3 and flagged") {
  Rng rng(43);
  Dense dense(3, 3);
  dense.params.init_glorot(rng);
  Tensor input = random_tensor({3}, rng);
  const Tensor target = random_tensor({3}, rng);

  auto fwd = [&] { return mse(dense.forward(input), target); };
  auto fwd_bwd = [&] {
    const Tensor out = dense.forward(input);
    dense.backward(mse_grad(out, target));
    for (double& g : dense.params.weight_grad.data) g *= 2.0;   // injected bug
    for (double& g : dense.params.bias_grad.data) g *= 2.0;
    return mse(out, target);
  };
  const auto report = gradcheck(param_blocks("bugged", dense.params), fwd, fwd_bwd, 1e-5, 1e-4);
  CHECK_FALSE(report.passed());
  CHECK(report.first_failure() == "bugged.weights");
  CHECK(report.worst_error() == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
}

TEST_SUITE_END();
