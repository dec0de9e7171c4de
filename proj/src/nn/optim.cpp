#include "evlog/nn/optim.hpp"

#include <cmath>
#include <string>

#include "evlog/kern/kernels.hpp"

namespace evlog::nn {

void Adam::step(const std::vector<ParamRef>& params, double lr) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].n, 0.0);
      v_[i].assign(params[i].n, 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw ShapeError("Adam: parameter block count changed between steps");
  }
  for (const auto& p : params) {
    for (size_t i = 0; i < p.n; ++i) {
      if (!std::isfinite(p.grad[i])) {
        throw ShapeError("Adam: non-finite gradient");
      }
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto& k = kern::active();
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (m_[i].size() != p.n) {
      throw ShapeError("Adam: parameter block size changed between steps");
    }
    k.adam_update(p.value, p.grad, m_[i].data(), v_[i].data(), p.n, lr, beta1_,
                  beta2_, eps_, c1, c2);
  }
}

StepLr::StepLr(double initial_lr, int step_size, double gamma)
    : initial_lr_(initial_lr), step_size_(step_size), gamma_(gamma) {
  if (initial_lr <= 0.0) throw ShapeError("StepLr: lr must be positive");
  if (step_size < 1) throw ShapeError("StepLr: step_size must be >= 1");
  if (gamma <= 0.0 || gamma > 1.0) {
    throw ShapeError("StepLr: gamma must be in (0, 1]");
  }
}

double StepLr::lr(int epoch) const {
  if (epoch < 0) throw ShapeError("StepLr: negative epoch");
  return initial_lr_ * std::pow(gamma_, static_cast<double>(epoch / step_size_));
}

}  // namespace evlog::nn
