#pragma once

#include "spadi/ops.hpp"
#include "spadi/rng.hpp"
#include "spadi/tensor.hpp"

namespace spadi {

struct ConvParams {
  Tensor weight;  // (C_out, C_in, k, k)
  Tensor bias;    // (1, C_out, 1, 1), optional (undefined when absent)
  int stride = 1;
  int padding = 0;

  int out_channels() const { return weight.shape().n; }
  int in_channels() const { return weight.shape().c; }
  int ksize() const { return weight.shape().h; }
  bool has_bias() const { return bias.defined(); }
};

// Kaiming-uniform fan-in weights, zero bias.
ConvParams make_conv(int c_in, int c_out, int k, int stride, int padding,
                     bool bias, Rng& rng);

// Validates kernel/stride/padding compatibility and returns the output shape.
Shape conv_output_shape(const Shape& in, const ConvParams& p);

// im2col + GEMM convolution, differentiable w.r.t. input, weight and bias.
Tensor conv2d(const Tensor& x, const ConvParams& p, Tape* tape);

// Naive loop reference, forward only. Kept as the independent oracle for the
// GEMM path and as the "dense direct" benchmark arm.
Tensor conv2d_direct(const Tensor& x, const ConvParams& p);

// Internals shared with the sparse executor and the benchmark harness.
namespace convdet {
// Fills one im2col row (length k*k*C_in) for output position (oy,ox) of
// image n. Column order is (c_in, ky, kx), matching the weight layout.
void fill_patch_row(const Tensor& x, int n, int oy, int ox, int k, int stride,
                    int padding, float* row);
// Dense im2col forward for a row range [row_begin,row_end) of the output
// plane of image n; used by the multithreaded benchmark arm.
void im2col_rows(const Tensor& x, int n, int k, int stride, int padding,
                 int out_w, long long row_begin, long long row_end,
                 float* cols);
}  // namespace convdet

}  // namespace spadi
