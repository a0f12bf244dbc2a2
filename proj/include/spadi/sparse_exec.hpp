#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spadi/conv.hpp"
#include "spadi/sampler.hpp"

namespace spadi {

// Row-major list of the 1-positions of a hard mask; the coordinates index
// convolution OUTPUT positions.
struct SamplePlan {
  Shape mask_shape;  // (N,1,H,W)
  std::vector<std::array<int, 3>> indices;  // (n, y, x)

  long long count() const { return (long long)indices.size(); }
};

SamplePlan plan_from_mask(const SamplingMask& m);

// Gather/GEMM/scatter convolution evaluated only at the planned points;
// all other outputs are exactly zero. Forward only.
Tensor sparse_conv2d(const Tensor& x, const ConvParams& p,
                     const SamplePlan& plan);

struct FlopsEntry {
  std::string layer;
  uint64_t dense_macs = 0;
  uint64_t sparse_macs = 0;
  uint64_t mask_macs = 0;
  uint64_t interp_macs = 0;
};

struct FlopsLedger {
  std::vector<FlopsEntry> entries;

  void add(FlopsEntry e) { entries.push_back(std::move(e)); }
  void merge(const FlopsLedger& o);

  uint64_t total_dense() const;
  uint64_t total_adaptive() const;  // sparse + mask + interp
  double theoretical_speedup() const;
};

uint64_t conv_dense_macs(int k, int c_in, int c_out, int out_h, int out_w);
uint64_t conv_sparse_macs(int k, int c_in, int c_out, long long sampled);

// Total number of in-window samples over all unsampled positions of a hard
// mask, Chebyshev radius r, windows clipped at the borders. Computed with a
// 2-D prefix sum.
uint64_t window_sample_total(const SamplingMask& mask, int radius);

// interp cost: one MAC per (in-window sample x channel) plus one weight
// evaluation per in-window sample.
uint64_t interp_macs(const SamplingMask& mask, int radius, int channels);

}  // namespace spadi
