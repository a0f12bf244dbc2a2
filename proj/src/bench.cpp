#include "spadi/bench.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>
#include <vector>

namespace spadi {

using RowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

void parallel_ranges(long long total, int threads,
                     const std::function<void(long long, long long)>& fn) {
  if (threads <= 1 || total < 2 * threads) {
    fn(0, total);
    return;
  }
  std::vector<std::thread> pool;
  const long long chunk = (total + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long long lo = t * chunk;
    const long long hi = std::min(total, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

BenchTiming time_calls(const std::function<void()>& call, int repetitions,
                       int warmup) {
  for (int i = 0; i < warmup; ++i) call();
  std::vector<double> ms(size_t(repetitions));
  for (int i = 0; i < repetitions; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    call();
    auto t1 = std::chrono::steady_clock::now();
    ms[size_t(i)] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  std::vector<double> dev(ms.size());
  for (size_t i = 0; i < ms.size(); ++i) dev[i] = std::fabs(ms[i] - median);
  std::sort(dev.begin(), dev.end());
  return {median, dev[dev.size() / 2]};
}

}  // namespace

Tensor conv2d_im2col_mt(const Tensor& x, const ConvParams& p, int threads) {
  const Shape out_shape = conv_output_shape(x.shape(), p);
  const int k = p.ksize();
  const int c_out = p.out_channels();
  const long long K = 1LL * k * k * p.in_channels();
  const long long P = 1LL * out_shape.h * out_shape.w;
  Tensor out = Tensor::zeros(out_shape);
  std::vector<float> cols(size_t(P * K));
  for (int n = 0; n < x.shape().n; ++n) {
    parallel_ranges(P, threads, [&](long long lo, long long hi) {
      convdet::im2col_rows(x, n, k, p.stride, p.padding, out_shape.w, lo, hi,
                           cols.data() + lo * K);
    });
    float* obase = out.data() + 1LL * n * c_out * P;
    parallel_ranges(P, threads, [&](long long lo, long long hi) {
      Eigen::Map<const RowMat> Cm(cols.data() + lo * K, hi - lo, K);
      Eigen::Map<const RowMat> Wm(p.weight.data(), c_out, K);
      // output is (C_out, P) row-major; compute the P-slice per thread via a
      // strided map
      Eigen::Map<RowMat, 0, Eigen::OuterStride<>> Om(
          obase + lo, c_out, hi - lo, Eigen::OuterStride<>(Eigen::Index(P)));
      Om.noalias() = Wm * Cm.transpose();
    });
    if (p.has_bias()) {
      Eigen::Map<RowMat> Om(obase, c_out, P);
      Eigen::Map<const Eigen::VectorXf> bv(p.bias.data(), c_out);
      Om.colwise() += bv;
    }
  }
  return out;
}

Tensor sparse_conv2d_mt(const Tensor& x, const ConvParams& p,
                        const SamplePlan& plan, int threads) {
  const Shape out_shape = conv_output_shape(x.shape(), p);
  const int k = p.ksize();
  const int c_out = p.out_channels();
  const long long K = 1LL * k * k * p.in_channels();
  const long long P = 1LL * out_shape.h * out_shape.w;
  Tensor out = Tensor::zeros(out_shape);
  const long long count = plan.count();
  if (count == 0) return out;
  std::vector<float> rows(size_t(count * K));
  std::vector<float> gemm_out(size_t(count * c_out));
  parallel_ranges(count, threads, [&](long long lo, long long hi) {
    for (long long i = lo; i < hi; ++i) {
      const auto& [n, y, xq] = plan.indices[size_t(i)];
      convdet::fill_patch_row(x, n, y, xq, k, p.stride, p.padding,
                              rows.data() + i * K);
    }
  });
  parallel_ranges(count, threads, [&](long long lo, long long hi) {
    Eigen::Map<const RowMat> Rm(rows.data() + lo * K, hi - lo, K);
    Eigen::Map<const RowMat> Wm(p.weight.data(), c_out, K);
    Eigen::Map<RowMat> Om(gemm_out.data() + lo * c_out, hi - lo, c_out);
    Om.noalias() = Rm * Wm.transpose();
  });
  float* op = out.data();
  const float* bp = p.has_bias() ? p.bias.data() : nullptr;
  for (long long i = 0; i < count; ++i) {
    const auto& [n, y, xq] = plan.indices[size_t(i)];
    for (int co = 0; co < c_out; ++co)
      op[(1LL * n * c_out + co) * P + 1LL * y * out_shape.w + xq] =
          gemm_out[size_t(i * c_out + co)] + (bp ? bp[co] : 0.0f);
  }
  return out;
}

std::string BenchReport::csv_header() {
  return "n,c_in,h,w,k,c_out,sparsity,threads,dense_ms,direct_ms,sparse_ms,"
         "theo_speedup,real_speedup";
}

std::string BenchReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%d,%d,%d,%d,%d,%d,%.4f,%d,%.4f,%.4f,%.4f,%.4f,%.4f",
                in_shape.n, in_shape.c, in_shape.h, in_shape.w, k, c_out,
                sparsity, threads, dense_im2col.median_ms,
                dense_direct.median_ms, sparse.median_ms, theo_speedup,
                real_speedup);
  return buf;
}

BenchReport bench_conv(const Tensor& x, const ConvParams& p,
                       const SamplePlan& plan, int repetitions, int threads,
                       bool include_direct) {
  BenchReport rep;
  rep.in_shape = x.shape();
  rep.k = p.ksize();
  rep.c_out = p.out_channels();
  rep.threads = threads;
  const Shape out_shape = conv_output_shape(x.shape(), p);
  const long long total = 1LL * out_shape.n * out_shape.h * out_shape.w;
  rep.sparsity = 1.0 - double(plan.count()) / double(total);

  const int warmup = 2;
  volatile float sink = 0.0f;  // keep the calls alive
  rep.dense_im2col = time_calls(
      [&] {
        Tensor y = conv2d_im2col_mt(x, p, threads);
        sink = sink + y.data()[0];
      },
      repetitions, warmup);
  if (include_direct)
    rep.dense_direct = time_calls(
        [&] {
          Tensor y = conv2d_direct(x, p);
          sink = sink + y.data()[0];
        },
        repetitions, warmup);
  rep.sparse = time_calls(
      [&] {
        Tensor y = sparse_conv2d_mt(x, p, plan, threads);
        sink = sink + y.data()[0];
      },
      repetitions, warmup);

  const uint64_t dense = conv_dense_macs(rep.k, p.in_channels(), rep.c_out,
                                         out_shape.h, out_shape.w) *
                         uint64_t(out_shape.n);
  const uint64_t sparse =
      conv_sparse_macs(rep.k, p.in_channels(), rep.c_out, plan.count());
  rep.theo_speedup = sparse == 0 ? 0.0 : double(dense) / double(sparse);
  rep.real_speedup = rep.sparse.median_ms == 0.0
                         ? 0.0
                         : rep.dense_im2col.median_ms / rep.sparse.median_ms;
  return rep;
}

}  // namespace spadi
