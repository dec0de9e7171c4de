#include "evlog/nn/model.hpp"

namespace evlog::nn {

Cnn1d::Cnn1d(const CnnConfig& cfg)
    : conv1(cfg.in_channels, cfg.conv1_filters, cfg.kernel, cfg.kernel / 2),
      bn1(cfg.conv1_filters),
      conv2(cfg.conv1_filters, cfg.conv2_filters, cfg.kernel, cfg.kernel / 2),
      bn2(cfg.conv2_filters),
      fc(cfg.conv2_filters, cfg.classes),
      cfg_(cfg) {}

void Cnn1d::init(uint64_t seed) {
  Prng rng(derive_seed(seed, 0x77));
  conv1.init(rng);
  conv2.init(rng);
  fc.init(rng);
}

Matrix Cnn1d::forward(const Tensor3& x, bool train) {
  Tensor3 h = conv1.forward(x);
  if (cfg_.relu_before_bn) {
    h = relu1_.forward(h);
    h = bn1.forward(h, train);
  } else {
    h = bn1.forward(h, train);
    h = relu1_.forward(h);
  }
  h = conv2.forward(h);
  if (cfg_.relu_before_bn) {
    h = relu2_.forward(h);
    h = bn2.forward(h, train);
  } else {
    h = bn2.forward(h, train);
    h = relu2_.forward(h);
  }
  cached_time_ = h.time;
  Matrix pooled = adaptive_avg_pool(h);
  return fc.forward(pooled);
}

void Cnn1d::backward(const Matrix& grad_logits) {
  Matrix gpool = fc.backward(grad_logits);
  Tensor3 g = adaptive_avg_pool_backward(gpool, cached_time_);
  if (cfg_.relu_before_bn) {
    g = bn2.backward(g);
    g = relu2_.backward(g);
  } else {
    g = relu2_.backward(g);
    g = bn2.backward(g);
  }
  g = conv2.backward(g);
  if (cfg_.relu_before_bn) {
    g = bn1.backward(g);
    g = relu1_.backward(g);
  } else {
    g = relu1_.backward(g);
    g = bn1.backward(g);
  }
  conv1.backward(g);
}

void Cnn1d::zero_grad() {
  conv1.zero_grad();
  bn1.zero_grad();
  conv2.zero_grad();
  bn2.zero_grad();
  fc.zero_grad();
}

std::vector<ParamRef> Cnn1d::params() {
  std::vector<ParamRef> out;
  auto append = [&out](std::vector<ParamRef> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(conv1.params());
  append(bn1.params());
  append(conv2.params());
  append(bn2.params());
  append(fc.params());
  return out;
}

std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(logits.rows, 0);
  for (size_t r = 0; r < logits.rows; ++r) {
    const double* row = logits.row(r);
    int best = 0;
    for (size_t c = 1; c < logits.cols; ++c) {
      if (row[c] > row[best]) best = static_cast<int>(c);
    }
    out[r] = best;
  }
  return out;
}

}  // namespace evlog::nn
