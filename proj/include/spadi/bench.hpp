#pragma once

#include <string>

#include "spadi/sparse_exec.hpp"

namespace spadi {

struct BenchTiming {
  double median_ms = 0.0;
  double mad_ms = 0.0;
};

struct BenchReport {
  Shape in_shape;
  int k = 0;
  int c_out = 0;
  double sparsity = 0.0;  // fraction of unsampled outputs
  int threads = 1;
  BenchTiming dense_im2col;
  BenchTiming dense_direct;  // zeroed when the direct arm is skipped
  BenchTiming sparse;
  double theo_speedup = 0.0;  // dense_macs / sparse_macs from the ledger
  double real_speedup = 0.0;  // dense_im2col.median / sparse.median

  static std::string csv_header();
  std::string csv_row() const;
};

// Times the dense im2col, dense direct and sparse gather/scatter paths for
// one layer. Warm-up calls are excluded; median and MAD over `repetitions`.
// threads > 1 splits output rows across a worker pool in every arm.
BenchReport bench_conv(const Tensor& x, const ConvParams& p,
                       const SamplePlan& plan, int repetitions, int threads,
                       bool include_direct = true);

// Row-parallel variants used by the benchmark (deterministic output,
// nondeterministic timing only).
Tensor conv2d_im2col_mt(const Tensor& x, const ConvParams& p, int threads);
Tensor sparse_conv2d_mt(const Tensor& x, const ConvParams& p,
                        const SamplePlan& plan, int threads);

}  // namespace spadi
