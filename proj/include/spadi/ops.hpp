#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "spadi/rng.hpp"
#include "spadi/tensor.hpp"

namespace spadi {

// Reverse-mode tape. Ops push one backward closure per recorded node;
// backward() replays them in reverse recording order exactly once.
class Tape {
 public:
  void record(std::function<void()> backward_fn);
  void backward(const Tensor& loss);

  bool frozen() const { return frozen_; }
  size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
  bool frozen_ = false;
};

// All ops take an optional tape; passing nullptr runs forward-only.

Tensor add(const Tensor& a, const Tensor& b, Tape* tape);
Tensor sub(const Tensor& a, const Tensor& b, Tape* tape);
Tensor mul(const Tensor& a, const Tensor& b, Tape* tape);

// Broadcast multiply of a (N,C,H,W) tensor by a (N,1,H,W) map.
Tensor bmul(const Tensor& x, const Tensor& m, Tape* tape);

// Elementwise max; gradient routes to `a` where a >= b, else to `b`.
Tensor max2(const Tensor& a, const Tensor& b, Tape* tape);

Tensor scale(const Tensor& x, float s, Tape* tape);
Tensor add_scalar(const Tensor& x, float s, Tape* tape);
Tensor relu(const Tensor& x, Tape* tape);
Tensor exp(const Tensor& x, Tape* tape);
Tensor log(const Tensor& x, Tape* tape);
Tensor abs(const Tensor& x, Tape* tape);
Tensor clamp_min(const Tensor& x, float lo, Tape* tape);

// 1/(x+eps), with 0 output where x+eps == 0 (empty interpolation windows).
Tensor safe_recip(const Tensor& x, float eps, Tape* tape);

// Stable two-class softmax: returns (e^a, e^b) / (e^a + e^b).
std::pair<Tensor, Tensor> softmax2(const Tensor& a, const Tensor& b,
                                   Tape* tape);

Tensor sum(const Tensor& x, Tape* tape);   // -> (1,1,1,1)
Tensor mean(const Tensor& x, Tape* tape);  // -> (1,1,1,1)

Tensor slice_channels(const Tensor& x, int c0, int count, Tape* tape);
Tensor global_avg_pool(const Tensor& x, Tape* tape);
Tensor avg_pool2x2(const Tensor& x, Tape* tape);  // even H and W required

// out[i] = s.item() * pattern[i]; differentiable w.r.t. the scalar only.
Tensor scalar_expand(const Tensor& s, const Tensor& pattern, Tape* tape);

// Zero-padded 1-D correlations along H / W with odd-length kernels
// shaped (1,1,L,1) / (1,1,1,L); differentiable in both arguments.
Tensor corr1d_h(const Tensor& x, const Tensor& k, Tape* tape);
Tensor corr1d_w(const Tensor& x, const Tensor& k, Tape* tape);

// Depthwise zero-padded 2-D correlation with one (1,1,L,L) kernel shared
// across channels.
Tensor corr2d(const Tensor& x, const Tensor& k, Tape* tape);

// Mean softmax cross-entropy over channel dim. labels has N entries for
// (N,K,1,1) logits and N*H*W entries (row-major) for (N,K,H,W).
Tensor softmax_ce_loss(const Tensor& logits, const std::vector<int>& labels,
                       Tape* tape);

Tensor gaussian(const Shape& s, Rng& rng, float stddev, bool requires_grad = false);

}  // namespace spadi
