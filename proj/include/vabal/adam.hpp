#pragma once

#include <cstdint>
#include <vector>

#include "vabal/tensor.hpp"

namespace vabal {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed set of parameter tensors. Moment
/// buffers are shaped like their parameters; step() reads each tensor's grad
/// buffer and is deterministic given the gradient sequence.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig config = {});

  void zero_grad();
  void step();

  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor*> params_;
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace vabal
