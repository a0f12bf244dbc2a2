#pragma once

#include <vector>

#include "spadi/conv.hpp"
#include "spadi/ops.hpp"
#include "spadi/rng.hpp"

namespace spadi {

struct SamplerConfig {
  float tau0 = 1.0f;       // initial temperature
  float alpha = 0.999f;    // per-iteration decay factor
  float tau_final = 0.01f; // target temperature at the end of training
  float threshold = 0.5f;  // inference binarization cutoff
  int grid_stride = 0;     // 0 disables the grid prior
  uint64_t seed = 0;

  void validate() const;
};

// tau(iter) = alpha^iter * tau0
float temperature_at(const SamplerConfig& cfg, long long iter);
// alpha such that alpha^total_iters * tau0 == tau_final
float alpha_for(long long total_iters, float tau0, float tau_final);

// Two-class probabilities per position, each channel (N,1,H,W).
// pi1 is the sampling-probability channel.
struct ConfidenceMap {
  Tensor pi0;
  Tensor pi1;
};

enum class MaskMode { soft, hard };

struct SamplingMask {
  Tensor m;  // (N,1,H,W)
  MaskMode mode = MaskMode::soft;
  float threshold = 0.5f;  // used for the soft sparsity accounting

  // Fraction of zeros (hard) or of values below threshold (soft).
  double sparsity() const;
  long long sampled_count() const;  // complement, in positions
};

// 3x3 two-channel conv + two-class softmax over the layer input.
ConfidenceMap predict_confidence(const Tensor& x, const ConvParams& conv,
                                 Tape* tape);

// i.i.d. standard Gumbel noise.
Tensor gumbel_noise(const Shape& s, Rng& rng);

// Two-class Gumbel-Softmax relaxation of the sampling decision. Noise is a
// constant in the backward pass (reparameterization estimator).
SamplingMask gumbel_softmax_mask(const ConfidenceMap& pi, float tau, Rng& rng,
                                 Tape* tape);

// Same relaxation with the noise removed.
SamplingMask deterministic_mask(const ConfidenceMap& pi, float tau,
                                Tape* tape);

// ReLU-gated confidence (one-channel conv); values >= 0, not bounded above.
SamplingMask relu_gate_mask(const Tensor& x, const ConvParams& conv,
                            Tape* tape);

// Equal-interval hard mask, ones at (i*stride, j*stride) anchored at (0,0).
SamplingMask grid_prior_mask(int n, int h, int w, int stride);

// Elementwise max; gradient flows through ms where it attains the max.
SamplingMask combine_masks(const SamplingMask& ms, const SamplingMask& mg,
                           Tape* tape);

// 1 where m >= threshold, else 0. Ties sample.
SamplingMask binarize(const SamplingMask& soft, float threshold);

// Sum of all pi1 entries across layers and positions (L1 of non-negative
// maps).
Tensor sparse_loss(const std::vector<Tensor>& pi1s, Tape* tape);

}  // namespace spadi
