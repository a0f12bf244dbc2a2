#include "spadi/sparse_exec.hpp"

#include <Eigen/Core>

namespace spadi {

using RowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

SamplePlan plan_from_mask(const SamplingMask& m) {
  SPADI_CHECK(m.mode == MaskMode::hard,
              "plan_from_mask: soft mask rejected; binarize first");
  const Shape& s = m.m.shape();
  SamplePlan plan;
  plan.mask_shape = s;
  const float* p = m.m.data();
  for (int n = 0; n < s.n; ++n)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x)
        if (p[(1LL * n * s.h + y) * s.w + x] != 0.0f)
          plan.indices.push_back({n, y, x});
  return plan;
}

Tensor sparse_conv2d(const Tensor& x, const ConvParams& p,
                     const SamplePlan& plan) {
  const Shape out_shape = conv_output_shape(x.shape(), p);
  const int k = p.ksize();
  const int c_out = p.out_channels();
  const long long K = 1LL * k * k * p.in_channels();
  const long long P = 1LL * out_shape.h * out_shape.w;
  Tensor out = Tensor::zeros(out_shape);
  if (plan.indices.empty()) return out;

  for (const auto& [n, y, xq] : plan.indices)
    SPADI_CHECK(n >= 0 && n < out_shape.n && y >= 0 && y < out_shape.h &&
                    xq >= 0 && xq < out_shape.w,
                "sparse_conv2d: plan entry (", n, ",", y, ",", xq,
                ") out of bounds for output ", to_string(out_shape));

  const long long count = plan.count();
  std::vector<float> rows(size_t(count * K));
  for (long long i = 0; i < count; ++i) {
    const auto& [n, y, xq] = plan.indices[size_t(i)];
    convdet::fill_patch_row(x, n, y, xq, k, p.stride, p.padding,
                            rows.data() + i * K);
  }
  Eigen::Map<const RowMat> Rm(rows.data(), count, K);
  Eigen::Map<const RowMat> Wm(p.weight.data(), c_out, K);
  RowMat Om(count, c_out);
  Om.noalias() = Rm * Wm.transpose();

  float* op = out.data();
  const float* bp = p.has_bias() ? p.bias.data() : nullptr;
  for (long long i = 0; i < count; ++i) {
    const auto& [n, y, xq] = plan.indices[size_t(i)];
    for (int co = 0; co < c_out; ++co)
      op[(1LL * n * c_out + co) * P + 1LL * y * out_shape.w + xq] =
          Om(i, co) + (bp ? bp[co] : 0.0f);
  }
  return out;
}

void FlopsLedger::merge(const FlopsLedger& o) {
  for (const auto& e : o.entries) entries.push_back(e);
}

uint64_t FlopsLedger::total_dense() const {
  uint64_t t = 0;
  for (const auto& e : entries) t += e.dense_macs;
  return t;
}

uint64_t FlopsLedger::total_adaptive() const {
  uint64_t t = 0;
  for (const auto& e : entries) t += e.sparse_macs + e.mask_macs + e.interp_macs;
  return t;
}

double FlopsLedger::theoretical_speedup() const {
  const uint64_t a = total_adaptive();
  return a == 0 ? 0.0 : double(total_dense()) / double(a);
}

uint64_t conv_dense_macs(int k, int c_in, int c_out, int out_h, int out_w) {
  return uint64_t(k) * k * c_in * c_out * out_h * out_w;
}

uint64_t conv_sparse_macs(int k, int c_in, int c_out, long long sampled) {
  return uint64_t(k) * k * c_in * c_out * uint64_t(sampled);
}

uint64_t window_sample_total(const SamplingMask& mask, int radius) {
  SPADI_CHECK(mask.mode == MaskMode::hard,
              "window_sample_total: hard mask required");
  const Shape& s = mask.m.shape();
  const float* p = mask.m.data();
  uint64_t total = 0;
  std::vector<uint64_t> prefix(size_t((s.h + 1) * (s.w + 1)));
  for (int n = 0; n < s.n; ++n) {
    const float* mp = p + 1LL * n * s.h * s.w;
    // inclusive 2-D prefix sums with a zero border row/column
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        uint64_t v = mp[1LL * y * s.w + x] != 0.0f ? 1 : 0;
        prefix[size_t((y + 1) * (s.w + 1) + (x + 1))] =
            v + prefix[size_t(y * (s.w + 1) + (x + 1))] +
            prefix[size_t((y + 1) * (s.w + 1) + x)] -
            prefix[size_t(y * (s.w + 1) + x)];
      }
    auto rect = [&](int y0, int x0, int y1, int x1) {  // inclusive corners
      return prefix[size_t((y1 + 1) * (s.w + 1) + (x1 + 1))] -
             prefix[size_t(y0 * (s.w + 1) + (x1 + 1))] -
             prefix[size_t((y1 + 1) * (s.w + 1) + x0)] +
             prefix[size_t(y0 * (s.w + 1) + x0)];
    };
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        if (mp[1LL * y * s.w + x] != 0.0f) continue;  // sampled: passthrough
        const int y0 = std::max(0, y - radius), y1 = std::min(s.h - 1, y + radius);
        const int x0 = std::max(0, x - radius), x1 = std::min(s.w - 1, x + radius);
        total += rect(y0, x0, y1, x1);
      }
  }
  return total;
}

uint64_t interp_macs(const SamplingMask& mask, int radius, int channels) {
  return window_sample_total(mask, radius) * uint64_t(channels + 1);
}

}  // namespace spadi
