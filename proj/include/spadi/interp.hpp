#pragma once

#include "spadi/ops.hpp"
#include "spadi/sampler.hpp"

namespace spadi {

enum class InterpVariant { rbf, plain_conv, avg_pool };

// Reconstruction kernel over a Chebyshev window of the given radius.
// The query position itself never contributes (center weight is zero).
struct InterpKernel {
  InterpVariant variant = InterpVariant::rbf;
  int radius = 7;
  float epsilon = 1e-5f;  // denominator constant; set 0 when the grid prior
                          // guarantees nonempty windows
  Tensor lambda;   // (1,1,1,1) learnable sharpness, rbf only
  Tensor weights;  // (1,1,2r+1,2r+1) learnable, plain_conv only
};

InterpKernel make_rbf_kernel(int radius, float lambda0 = 3.0f,
                             float epsilon = 1e-5f);
InterpKernel make_plain_conv_kernel(int radius, float init = 1.0f,
                                    float epsilon = 1e-5f);
InterpKernel make_avg_pool_kernel(int radius, float epsilon = 1e-5f);

// W_I(p1,p2) = exp(-lambda^2 * |p1-p2|^2), distances in pixels.
double rbf_weight(double dy, double dx, double lambda);

// Normalized weighted reconstruction C(Ys) at every position:
//   C(p) = sum_q W(q-p) Ys(q) / (sum_q W(q-p) M(q) + eps)
// with q ranging over the in-bounds window around p, excluding p itself.
// For hard masks this is exactly the windowed interpolation from samples;
// for soft masks it is the relaxation used during training.
Tensor interp_reconstruct(const Tensor& ys, const Tensor& mask,
                          const InterpKernel& kern, Tape* tape);

// Full composition: (1-M) .* C(Ys) + M .* Ys. With a hard mask this is the
// passthrough-at-samples / reconstruct-elsewhere map.
Tensor interpolate(const Tensor& ys, const SamplingMask& m,
                   const InterpKernel& kern, Tape* tape);

// Plain-convolution kernel variant: signed weights in the numerator,
// absolute weights in the denominator.
Tensor plainconv_interpolate(const Tensor& ys, const SamplingMask& m,
                             const Tensor& weights, int radius, float epsilon,
                             Tape* tape);

// M .* Ys + (1-M) .* X
Tensor reuse_features_baseline(const Tensor& x, const Tensor& ys,
                               const SamplingMask& m, Tape* tape);

// M .* Ys
Tensor fill_zeros_baseline(const Tensor& ys, const SamplingMask& m,
                           Tape* tape);

}  // namespace spadi
