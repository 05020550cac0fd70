#include "vabal/adam.hpp"

#include <cmath>

#include "vabal/error.hpp"

namespace vabal {

Adam::Adam(std::vector<Tensor*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* p : params_) {
    if (!p->requires_grad) throw ContractError("Adam: parameter without requires_grad");
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = *params_[pi];
    if (p.grad.size() != p.data.size())
      throw ContractError("Adam: gradient buffer size mismatch");
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.data[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace vabal
