#pragma once

#include <string>
#include <vector>

#include "spadi/tensor.hpp"

namespace spadi {

// Classic momentum SGD: v <- momentum*v + (g + wd*p); p <- p - lr*v.
// Momentum buffers persist across steps, keyed by parameter order.
class SgdOptimizer {
 public:
  SgdOptimizer(float momentum, float weight_decay)
      : momentum_(momentum), weight_decay_(weight_decay) {}

  // `decay_mask[i]` disables weight decay for parameter i (biases, kernel
  // scalars). Empty mask applies decay everywhere.
  void step(std::vector<Tensor>& params, float lr,
            const std::vector<bool>& decay_mask = {});

  float momentum() const { return momentum_; }
  float weight_decay() const { return weight_decay_; }

 private:
  float momentum_;
  float weight_decay_;
  std::vector<std::vector<float>> velocity_;
};

}  // namespace spadi
