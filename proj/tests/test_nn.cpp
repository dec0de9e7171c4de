#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include "evlog/nn/checkpoint.hpp"
#include "evlog/nn/layers.hpp"
#include "evlog/nn/model.hpp"
#include "evlog/nn/optim.hpp"
#include "evlog/prng.hpp"
#include "oracles.hpp"

using namespace evlog;
using nn::Matrix;
using nn::Tensor3;

namespace {

constexpr double kFdStep = 1e-4;
constexpr double kGradTol = 1e-4;

Tensor3 random_tensor(Prng& rng, size_t b, size_t c, size_t t,
                      double margin = 0.0) {
  Tensor3 x(b, c, t);
  for (auto& v : x.data) {
    v = rng.uniform(-1.0, 1.0);
    // Keep values away from the ReLU kink so finite differences stay smooth.
    if (margin > 0.0 && std::abs(v) < margin) v = v < 0 ? -margin : margin;
  }
  return x;
}

// J = sum(c .* y) for fixed random c: linear in the layer output, so the
// finite-difference curvature comes from the layer alone.
struct LinearObjective {
  std::vector<double> c;

  explicit LinearObjective(Prng& rng, size_t n) : c(n) {
    for (auto& v : c) v = rng.uniform(-1.0, 1.0);
  }
  double value(const std::vector<double>& y) const {
    double acc = 0.0;
    for (size_t i = 0; i < y.size(); ++i) acc += c[i] * y[i];
    return acc;
  }
};

}  // namespace

TEST_CASE("conv: hand cross-correlation [1,2,3] * [1,0,-1] with pad 1") {
  nn::Conv1d conv(1, 1, 3, 1);
  conv.weight = {1.0, 0.0, -1.0};
  conv.bias = {0.0};
  Tensor3 x(1, 1, 3);
  x.data = {1.0, 2.0, 3.0};
  const Tensor3 y = conv.forward(x);
  CHECK(y.data[0] == doctest::Approx(-2.0));
  CHECK(y.data[1] == doctest::Approx(-2.0));
  CHECK(y.data[2] == doctest::Approx(2.0));
}

TEST_CASE("conv: identity kernel passes the input through") {
  nn::Conv1d conv(1, 1, 3, 1);
  conv.weight = {0.0, 1.0, 0.0};
  conv.bias = {0.0};
  Prng rng(2);
  Tensor3 x = random_tensor(rng, 2, 1, 9);
  const Tensor3 y = conv.forward(x);
  for (size_t i = 0; i < x.data.size(); ++i) {
    CHECK(y.data[i] == doctest::Approx(x.data[i]));
  }
}

TEST_CASE("conv rejects a channel mismatch") {
  nn::Conv1d conv(4, 8);
  Tensor3 x(1, 3, 5);
  CHECK_THROWS_AS(conv.forward(x), ShapeError);
}

TEST_CASE("conv gradients match central finite differences") {
  Prng rng(3);
  nn::Conv1d conv(3, 4, 3, 1);
  conv.init(rng);
  Tensor3 x = random_tensor(rng, 2, 3, 8);
  LinearObjective obj(rng, 2 * 4 * 8);

  auto forward_value = [&]() {
    nn::Conv1d probe = conv;
    return obj.value(probe.forward(x).data);
  };

  // Analytic gradients.
  Tensor3 grad_out(2, 4, 8);
  grad_out.data = obj.c;
  conv.zero_grad();
  (void)conv.forward(x);
  const Tensor3 gx = conv.backward(grad_out);

  const auto fd_w = oracle::finite_difference(forward_value, conv.weight.data(),
                                              conv.weight.size(), kFdStep);
  CHECK(oracle::max_rel_error(conv.grad_weight, fd_w) < kGradTol);
  const auto fd_b = oracle::finite_difference(forward_value, conv.bias.data(),
                                              conv.bias.size(), kFdStep);
  CHECK(oracle::max_rel_error(conv.grad_bias, fd_b) < kGradTol);

  auto input_value = [&]() {
    nn::Conv1d probe = conv;
    return obj.value(probe.forward(x).data);
  };
  const auto fd_x = oracle::finite_difference(input_value, x.data.data(),
                                              x.data.size(), kFdStep);
  CHECK(oracle::max_rel_error(gx.data, fd_x) < kGradTol);
}

TEST_CASE("batchnorm train mode standardizes each channel") {
  Prng rng(4);
  nn::BatchNorm1d bn(3);
  Tensor3 x = random_tensor(rng, 4, 3, 6);
  const Tensor3 y = bn.forward(x, /*train=*/true);
  for (size_t c = 0; c < 3; ++c) {
    double total = 0.0, sq = 0.0;
    for (size_t b = 0; b < 4; ++b) {
      for (size_t t = 0; t < 6; ++t) {
        total += y.at(b, c, t);
        sq += y.at(b, c, t) * y.at(b, c, t);
      }
    }
    const double n = 24.0;
    CHECK(std::abs(total / n) < 1e-6);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("batchnorm applies gamma and beta after standardizing") {
  Prng rng(5);
  nn::BatchNorm1d bn(2);
  bn.gamma = {2.0, 2.0};
  bn.beta = {3.0, 3.0};
  Tensor3 x = random_tensor(rng, 3, 2, 10);
  const Tensor3 y = bn.forward(x, true);
  for (size_t c = 0; c < 2; ++c) {
    double total = 0.0, sq = 0.0;
    for (size_t b = 0; b < 3; ++b) {
      for (size_t t = 0; t < 10; ++t) total += y.at(b, c, t);
    }
    const double mean = total / 30.0;
    for (size_t b = 0; b < 3; ++b) {
      for (size_t t = 0; t < 10; ++t) {
        const double d = y.at(b, c, t) - mean;
        sq += d * d;
      }
    }
    CHECK(mean == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(std::sqrt(sq / 30.0) == doctest::Approx(2.0).epsilon(1e-4));
  }
}

TEST_CASE("batchnorm eval mode uses running statistics") {
  nn::BatchNorm1d bn(1);
  Prng rng(6);
  // Feed several training batches so the running stats settle.
  for (int i = 0; i < 200; ++i) {
    Tensor3 x(4, 1, 8);
    for (auto& v : x.data) v = 5.0 + 2.0 * rng.gaussian();
    (void)bn.forward(x, true);
  }
  Tensor3 probe(1, 1, 2);
  probe.data = {5.0, 7.0};
  const Tensor3 y = bn.forward(probe, /*train=*/false);
  CHECK(y.data[0] == doctest::Approx(0.0).epsilon(0.1));
  CHECK(y.data[1] == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("batchnorm train mode requires more than one element per channel") {
  nn::BatchNorm1d bn(1);
  Tensor3 x(1, 1, 1);
  CHECK_THROWS_AS(bn.forward(x, true), ShapeError);
  CHECK_NOTHROW(bn.forward(x, false));
}

TEST_CASE("batchnorm gradients match central finite differences") {
  Prng rng(7);
  nn::BatchNorm1d bn(3);
  for (auto& g : bn.gamma) g = rng.uniform(0.5, 1.5);
  for (auto& b : bn.beta) b = rng.uniform(-0.5, 0.5);
  Tensor3 x = random_tensor(rng, 2, 3, 5);
  LinearObjective obj(rng, 2 * 3 * 5);

  auto value = [&]() {
    nn::BatchNorm1d probe = bn;
    return obj.value(probe.forward(x, true).data);
  };

  Tensor3 grad_out(2, 3, 5);
  grad_out.data = obj.c;
  bn.zero_grad();
  (void)bn.forward(x, true);
  const Tensor3 gx = bn.backward(grad_out);

  const auto fd_gamma = oracle::finite_difference(value, bn.gamma.data(),
                                                  bn.gamma.size(), kFdStep);
  CHECK(oracle::max_rel_error(bn.grad_gamma, fd_gamma) < kGradTol);
  const auto fd_beta = oracle::finite_difference(value, bn.beta.data(),
                                                 bn.beta.size(), kFdStep);
  CHECK(oracle::max_rel_error(bn.grad_beta, fd_beta) < kGradTol);
  const auto fd_x = oracle::finite_difference(value, x.data.data(),
                                              x.data.size(), kFdStep);
  CHECK(oracle::max_rel_error(gx.data, fd_x) < kGradTol);
}

TEST_CASE("relu identities") {
  Prng rng(8);
  Tensor3 x = random_tensor(rng, 2, 2, 7);
  nn::Relu relu_pos, relu_neg;
  Tensor3 neg = x;
  for (auto& v : neg.data) v = -v;
  const Tensor3 a = relu_pos.forward(x);
  const Tensor3 b = relu_neg.forward(neg);
  for (size_t i = 0; i < x.data.size(); ++i) {
    CHECK(a.data[i] + b.data[i] == doctest::Approx(std::abs(x.data[i])));
    CHECK(a.data[i] >= 0.0);
  }
}

TEST_CASE("pool: constant channel pools to the constant; backward spreads evenly") {
  Tensor3 x(2, 3, 5);
  for (size_t b = 0; b < 2; ++b) {
    for (size_t c = 0; c < 3; ++c) {
      for (size_t t = 0; t < 5; ++t) x.at(b, c, t) = 2.5 * (c + 1);
    }
  }
  const Matrix y = nn::adaptive_avg_pool(x);
  for (size_t b = 0; b < 2; ++b) {
    for (size_t c = 0; c < 3; ++c) {
      CHECK(y.at(b, c) == doctest::Approx(2.5 * (c + 1)));
    }
  }
  Matrix g(2, 3);
  g.at(0, 0) = 5.0;
  const Tensor3 gx = nn::adaptive_avg_pool_backward(g, 5);
  CHECK(gx.at(0, 0, 3) == doctest::Approx(1.0));
  CHECK(gx.at(1, 2, 0) == doctest::Approx(0.0));
}

TEST_CASE("linear gradients match central finite differences") {
  Prng rng(9);
  nn::Linear fc(6, 3);
  fc.init(rng);
  Matrix x(4, 6);
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  LinearObjective obj(rng, 4 * 3);

  auto value = [&]() {
    nn::Linear probe = fc;
    return obj.value(probe.forward(x).data);
  };
  Matrix grad_out(4, 3);
  grad_out.data = obj.c;
  fc.zero_grad();
  (void)fc.forward(x);
  const Matrix gx = fc.backward(grad_out);

  const auto fd_w = oracle::finite_difference(value, fc.weight.data(),
                                              fc.weight.size(), kFdStep);
  CHECK(oracle::max_rel_error(fc.grad_weight, fd_w) < kGradTol);
  const auto fd_b = oracle::finite_difference(value, fc.bias.data(),
                                              fc.bias.size(), kFdStep);
  CHECK(oracle::max_rel_error(fc.grad_bias, fd_b) < kGradTol);
  const auto fd_x = oracle::finite_difference(value, x.data.data(),
                                              x.data.size(), kFdStep);
  CHECK(oracle::max_rel_error(gx.data, fd_x) < kGradTol);
}

TEST_CASE("cross entropy: uniform logits cost ln 3; confident logits cost ~0") {
  Matrix logits(2, 3);
  const std::vector<int> labels{0, 2};
  auto res = nn::cross_entropy(logits, labels);
  CHECK(res.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  Matrix confident(1, 3);
  confident.at(0, 1) = 200.0;
  const std::vector<int> one{1};
  CHECK(nn::cross_entropy(confident, one).loss < 1e-12);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
  Matrix logits(1, 3);
  const std::vector<int> bad{3};
  CHECK_THROWS_AS(nn::cross_entropy(logits, bad), ShapeError);
  const std::vector<int> neg{-1};
  CHECK_THROWS_AS(nn::cross_entropy(logits, neg), ShapeError);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  Prng rng(10);
  Matrix logits(3, 3);
  for (auto& v : logits.data) v = rng.uniform(-2.0, 2.0);
  const std::vector<int> labels{0, 1, 2};

  auto value = [&]() { return nn::cross_entropy(logits, labels).loss; };
  const auto res = nn::cross_entropy(logits, labels);
  const auto fd = oracle::finite_difference(value, logits.data.data(),
                                            logits.data.size(), kFdStep);
  CHECK(oracle::max_rel_error(res.grad.data, fd, 1e-4) < 1e-5);
}

TEST_CASE("softmax rows sum to one") {
  Prng rng(11);
  Matrix logits(8, 3);
  for (auto& v : logits.data) v = rng.uniform(-30.0, 30.0);
  const std::vector<int> labels(8, 0);
  const auto res = nn::cross_entropy(logits, labels);
  for (size_t r = 0; r < 8; ++r) {
    double total = 0.0;
    for (size_t c = 0; c < 3; ++c) total += res.probs.at(r, c);
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("adam first step moves by ~lr against the gradient sign") {
  nn::Adam adam(0.9, 0.98, 1e-9);
  std::vector<double> p{1.0};
  std::vector<double> g{0.5};
  std::vector<nn::ParamRef> refs{{p.data(), g.data(), 1}};
  adam.step(refs, 1e-3);
  // Bias corrections cancel at t=1: delta = -lr * g/|g| up to eps.
  CHECK(p[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
}

TEST_CASE("adam leaves parameters alone on a zero gradient") {
  nn::Adam adam;
  std::vector<double> p{0.7, -0.3};
  std::vector<double> g{0.0, 0.0};
  std::vector<nn::ParamRef> refs{{p.data(), g.data(), 2}};
  adam.step(refs, 1e-3);
  adam.step(refs, 1e-3);
  CHECK(p[0] == 0.7);
  CHECK(p[1] == -0.3);
}

TEST_CASE("adam two steps match the scalar oracle to 1e-12") {
  nn::Adam adam(0.9, 0.98, 1e-9);
  oracle::ScalarAdam ora{0.9, 0.98, 1e-9};
  double p = 0.2;
  double want = 0.2;
  const double grads[2] = {0.5, 0.25};
  for (const double g : grads) {
    double grad = g;
    std::vector<nn::ParamRef> refs{{&p, &grad, 1}};
    adam.step(refs, 1e-3);
    want = ora.step(want, g, 1e-3);
    CHECK(std::abs(p - want) < 1e-12);
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  nn::Adam adam;
  double p = 0.0, g = std::numeric_limits<double>::quiet_NaN();
  std::vector<nn::ParamRef> refs{{&p, &g, 1}};
  CHECK_THROWS_AS(adam.step(refs, 1e-3), ShapeError);
}

TEST_CASE("step scheduler halves every three epochs") {
  nn::StepLr sched(1e-3, 3, 0.5);
  for (const int e : {0, 1, 2}) CHECK(sched.lr(e) == 0.001);
  for (const int e : {3, 4, 5}) CHECK(sched.lr(e) == 0.0005);
  CHECK(sched.lr(9) == 0.000125);
}

TEST_CASE("full model shape walk: (8,64,32) -> logits (8,3)") {
  nn::CnnConfig cfg;
  cfg.in_channels = 64;
  nn::Cnn1d model(cfg);
  model.init(1);
  Prng rng(12);
  Tensor3 x = random_tensor(rng, 8, 64, 32);

  // Intermediate shapes forced by the layer definitions.
  const Tensor3 h1 = model.conv1.forward(x);
  CHECK(h1.batch == 8);
  CHECK(h1.channels == 64);
  CHECK(h1.time == 32);
  const Tensor3 h2 = model.conv2.forward(h1);
  CHECK(h2.channels == 32);
  CHECK(h2.time == 32);
  const Matrix pooled = nn::adaptive_avg_pool(h2);
  CHECK(pooled.rows == 8);
  CHECK(pooled.cols == 32);

  const Matrix logits = model.forward(x, /*train=*/true);
  CHECK(logits.rows == 8);
  CHECK(logits.cols == 3);
}

TEST_CASE("fresh model on balanced random labels scores about ln 3") {
  Prng rng(13);
  nn::CnnConfig cfg;
  cfg.in_channels = 8;
  nn::Cnn1d model(cfg);
  model.init(99);
  Tensor3 x = random_tensor(rng, 30, 8, 12);
  std::vector<int> labels(30);
  for (size_t i = 0; i < 30; ++i) labels[i] = static_cast<int>(i % 3);
  const Matrix logits = model.forward(x, /*train=*/false);
  const auto res = nn::cross_entropy(logits, labels);
  CHECK(std::abs(res.loss - std::log(3.0)) < 0.15);
}

TEST_CASE("whole-model gradients survive a finite-difference audit") {
  // End-to-end: loss(model(x)) against FD over every parameter block, both
  // layer orderings.
  for (const bool relu_first : {true, false}) {
    CAPTURE(relu_first);
    Prng rng(14);
    nn::CnnConfig cfg;
    cfg.in_channels = 3;
    cfg.conv1_filters = 5;
    cfg.conv2_filters = 4;
    cfg.relu_before_bn = relu_first;
    nn::Cnn1d model(cfg);
    model.init(3);
    Tensor3 x = random_tensor(rng, 3, 3, 7, /*margin=*/0.0);
    const std::vector<int> labels{0, 1, 2};

    auto value = [&]() {
      nn::Cnn1d probe = model;
      return nn::cross_entropy(probe.forward(x, true), labels).loss;
    };

    model.zero_grad();
    const auto res = nn::cross_entropy(model.forward(x, true), labels);
    model.backward(res.grad);

    for (auto& block : model.params()) {
      const auto fd =
          oracle::finite_difference(value, block.value, block.n, kFdStep);
      std::vector<double> got(block.grad, block.grad + block.n);
      CHECK(oracle::max_rel_error(got, fd, 1e-3) < kGradTol);
    }
  }
}

TEST_CASE("training memorizes a separable toy set within 50 epochs") {
  // Three channel-dominant patterns plus noise.
  Prng rng(15);
  const size_t n = 30;
  Tensor3 x(n, 3, 10);
  std::vector<int> labels(n);
  for (size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 3);
    labels[i] = cls;
    for (size_t c = 0; c < 3; ++c) {
      for (size_t t = 0; t < 10; ++t) {
        x.at(i, c, t) = 0.1 * rng.gaussian() +
                        (static_cast<int>(c) == cls ? 1.0 : 0.0);
      }
    }
  }
  nn::CnnConfig cfg;
  cfg.in_channels = 3;
  nn::Cnn1d model(cfg);
  model.init(7);
  nn::Adam adam(0.9, 0.98, 1e-9);
  nn::StepLr sched(1e-3, 3, 0.5);
  bool converged = false;
  for (int epoch = 0; epoch < 50 && !converged; ++epoch) {
    const auto res = nn::cross_entropy(model.forward(x, true), labels);
    model.zero_grad();
    model.backward(res.grad);
    adam.step(model.params(), sched.lr(epoch));
    const auto preds = nn::predict(model.forward(x, false));
    converged = true;
    for (size_t i = 0; i < n; ++i) {
      if (preds[i] != labels[i]) converged = false;
    }
  }
  CHECK(converged);
}

TEST_CASE("eval-mode forward is a pure function of state and input") {
  Prng rng(16);
  nn::CnnConfig cfg;
  cfg.in_channels = 4;
  nn::Cnn1d model(cfg);
  model.init(11);
  Tensor3 x = random_tensor(rng, 2, 4, 9);
  const Matrix a = model.forward(x, false);
  const Matrix b = model.forward(x, false);
  CHECK(a.data == b.data);
}

TEST_CASE("checkpoints restore the exact model and metadata") {
  nn::CnnConfig cfg;
  cfg.in_channels = 5;
  nn::Cnn1d model(cfg);
  model.init(21);
  Prng rng(17);
  Tensor3 x = random_tensor(rng, 3, 5, 8);
  (void)model.forward(x, true);  // move running stats off their defaults

  const auto ckpt = nn::snapshot_model(model, {1.0, 2.0}, {3.0, 4.0}, "audio", 8);
  const auto dir = std::filesystem::temp_directory_path() / "evlog_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";
  nn::save_checkpoint(path, ckpt);
  const auto loaded = nn::load_checkpoint(path);
  CHECK(loaded.modality == "audio");
  CHECK(loaded.vib_decimate == 8);
  CHECK(loaded.norm_mean == std::vector<double>{1.0, 2.0});
  CHECK(loaded.norm_std == std::vector<double>{3.0, 4.0});

  auto restored = nn::restore_model(loaded);
  const Matrix want = model.forward(x, false);
  const Matrix got = restored.forward(x, false);
  for (size_t i = 0; i < want.data.size(); ++i) {
    CHECK(got.data[i] == want.data[i]);
  }
  std::filesystem::remove_all(dir);
}
