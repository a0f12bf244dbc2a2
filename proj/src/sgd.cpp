#include "spadi/sgd.hpp"

namespace spadi {

void SgdOptimizer::step(std::vector<Tensor>& params, float lr,
                        const std::vector<bool>& decay_mask) {
  if (velocity_.empty()) {
    velocity_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i)
      velocity_[i].assign(size_t(params[i].numel()), 0.0f);
  }
  SPADI_CHECK(velocity_.size() == params.size(),
              "sgd_step: parameter count changed between steps");
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    SPADI_CHECK(velocity_[i].size() == size_t(p.numel()),
                "sgd_step: shape changed for parameter ", i);
    const bool decay =
        weight_decay_ != 0.0f && (decay_mask.empty() || decay_mask[i]);
    const float* g = p.grad();
    float* v = velocity_[i].data();
    float* w = p.data();
    for (long long j = 0, n = p.numel(); j < n; ++j) {
      float grad = g[j] + (decay ? weight_decay_ * w[j] : 0.0f);
      v[j] = momentum_ * v[j] + grad;
      w[j] -= lr * v[j];
    }
  }
}

}  // namespace spadi
