#include "spadi/conv.hpp"

#include <Eigen/Core>

#include <cmath>

namespace spadi {

using RowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ConvParams make_conv(int c_in, int c_out, int k, int stride, int padding,
                     bool bias, Rng& rng) {
  SPADI_CHECK(k % 2 == 1, "conv kernel size must be odd, got ", k);
  ConvParams p;
  p.stride = stride;
  p.padding = padding;
  p.weight = Tensor::zeros({c_out, c_in, k, k}, /*requires_grad=*/true);
  const float bound = std::sqrt(6.0f / float(c_in * k * k));
  float* w = p.weight.data();
  for (long long i = 0, n = p.weight.numel(); i < n; ++i)
    w[i] = rng.uniform(-bound, bound);
  if (bias) p.bias = Tensor::zeros({1, c_out, 1, 1}, /*requires_grad=*/true);
  return p;
}

Shape conv_output_shape(const Shape& in, const ConvParams& p) {
  const int k = p.ksize();
  SPADI_CHECK(in.c == p.in_channels(), "conv2d: input shape ", to_string(in),
              " incompatible with weight shape ", to_string(p.weight.shape()));
  const int eh = in.h + 2 * p.padding - k;
  const int ew = in.w + 2 * p.padding - k;
  SPADI_CHECK(eh >= 0 && ew >= 0 && eh % p.stride == 0 && ew % p.stride == 0,
              "conv2d: spatial size ", in.h, "x", in.w,
              " not compatible with k=", k, " stride=", p.stride,
              " padding=", p.padding);
  return {in.n, p.out_channels(), eh / p.stride + 1, ew / p.stride + 1};
}

namespace convdet {

void fill_patch_row(const Tensor& x, int n, int oy, int ox, int k, int stride,
                    int padding, float* row) {
  const Shape& s = x.shape();
  const float* xp = x.data();
  long long idx = 0;
  for (int ci = 0; ci < s.c; ++ci) {
    const float* base = xp + (1LL * n * s.c + ci) * s.h * s.w;
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * stride - padding + ky;
      if (iy < 0 || iy >= s.h) {
        for (int kx = 0; kx < k; ++kx) row[idx++] = 0.0f;
        continue;
      }
      const float* src = base + 1LL * iy * s.w;
      for (int kx = 0; kx < k; ++kx) {
        const int ix = ox * stride - padding + kx;
        row[idx++] = (ix < 0 || ix >= s.w) ? 0.0f : src[ix];
      }
    }
  }
}

void im2col_rows(const Tensor& x, int n, int k, int stride, int padding,
                 int out_w, long long row_begin, long long row_end,
                 float* cols) {
  const long long K = 1LL * k * k * x.shape().c;
  for (long long r = row_begin; r < row_end; ++r) {
    const int oy = int(r / out_w);
    const int ox = int(r % out_w);
    fill_patch_row(x, n, oy, ox, k, stride, padding, cols + (r - row_begin) * K);
  }
}

namespace {

// Scatter-add of an im2col gradient back onto the input image.
void col2im_add(Tensor& gx_t, float* gx, int n, int k, int stride, int padding,
                int out_h, int out_w, const float* gcols) {
  const Shape& s = gx_t.shape();
  const long long K = 1LL * k * k * s.c;
  for (long long r = 0; r < 1LL * out_h * out_w; ++r) {
    const int oy = int(r / out_w);
    const int ox = int(r % out_w);
    const float* grow = gcols + r * K;
    long long idx = 0;
    for (int ci = 0; ci < s.c; ++ci) {
      float* base = gx + (1LL * n * s.c + ci) * s.h * s.w;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * stride - padding + ky;
        if (iy < 0 || iy >= s.h) {
          idx += k;
          continue;
        }
        float* dst = base + 1LL * iy * s.w;
        for (int kx = 0; kx < k; ++kx, ++idx) {
          const int ix = ox * stride - padding + kx;
          if (ix >= 0 && ix < s.w) dst[ix] += grow[idx];
        }
      }
    }
  }
}

}  // namespace
}  // namespace convdet

Tensor conv2d(const Tensor& x, const ConvParams& p, Tape* tape) {
  const Shape out_shape = conv_output_shape(x.shape(), p);
  const int k = p.ksize();
  const int c_out = p.out_channels();
  const long long K = 1LL * k * k * p.in_channels();
  const long long P = 1LL * out_shape.h * out_shape.w;

  Tensor out = Tensor::zeros(out_shape);
  std::vector<float> cols(size_t(P * K));
  Eigen::Map<const RowMat> Wm(p.weight.data(), c_out, K);
  for (int n = 0; n < x.shape().n; ++n) {
    convdet::im2col_rows(x, n, k, p.stride, p.padding, out_shape.w, 0, P,
                         cols.data());
    Eigen::Map<const RowMat> Cm(cols.data(), P, K);
    Eigen::Map<RowMat> Om(out.data() + 1LL * n * c_out * P, c_out, P);
    Om.noalias() = Wm * Cm.transpose();
    if (p.has_bias()) {
      Eigen::Map<const Eigen::VectorXf> bv(p.bias.data(), c_out);
      Om.colwise() += bv;
    }
  }

  bool need = tape && (x.needs_grad() || p.weight.needs_grad() ||
                       (p.has_bias() && p.bias.needs_grad()));
  if (need) {
    out.mark_needs_grad();
    Tensor xc = x, wc = p.weight, oc = out;
    Tensor bc = p.bias;
    const int stride = p.stride, padding = p.padding;
    tape->record([xc, wc, bc, oc, k, stride, padding, K, P, c_out]() mutable {
      const int out_h = oc.shape().h, out_w = oc.shape().w;
      std::vector<float> cols(size_t(P * K));
      std::vector<float> gcols;
      const bool need_x = xc.needs_grad();
      const bool need_w = wc.needs_grad();
      const bool need_b = bc.defined() && bc.needs_grad();
      if (need_x) gcols.resize(size_t(P * K));
      Eigen::Map<const RowMat> Wm(wc.data(), c_out, K);
      for (int n = 0; n < xc.shape().n; ++n) {
        Eigen::Map<const RowMat> Gm(oc.grad() + 1LL * n * c_out * P, c_out, P);
        if (need_w || need_x)
          convdet::im2col_rows(xc, n, k, stride, padding, out_w, 0, P,
                               cols.data());
        if (need_w) {
          Eigen::Map<const RowMat> Cm(cols.data(), P, K);
          Eigen::Map<RowMat> dWm(wc.grad(), c_out, K);
          dWm.noalias() += Gm * Cm;
        }
        if (need_b) {
          Eigen::Map<Eigen::VectorXf> dbv(bc.grad(), c_out);
          dbv.noalias() += Gm.rowwise().sum();
        }
        if (need_x) {
          Eigen::Map<RowMat> dCm(gcols.data(), P, K);
          dCm.noalias() = Gm.transpose() * Wm;
          convdet::col2im_add(xc, xc.grad(), n, k, stride, padding, out_h,
                              out_w, gcols.data());
        }
      }
    });
  }
  return out;
}

Tensor conv2d_direct(const Tensor& x, const ConvParams& p) {
  const Shape out_shape = conv_output_shape(x.shape(), p);
  const Shape& s = x.shape();
  const int k = p.ksize();
  const int r_lo = -p.padding;
  Tensor out = Tensor::zeros(out_shape);
  const float* xp = x.data();
  const float* wp = p.weight.data();
  float* op = out.data();
  for (int n = 0; n < s.n; ++n)
    for (int co = 0; co < out_shape.c; ++co) {
      const float bias = p.has_bias() ? p.bias.data()[co] : 0.0f;
      for (int oy = 0; oy < out_shape.h; ++oy)
        for (int ox = 0; ox < out_shape.w; ++ox) {
          double acc = bias;
          for (int ci = 0; ci < s.c; ++ci)
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * p.stride + r_lo + ky;
              if (iy < 0 || iy >= s.h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * p.stride + r_lo + kx;
                if (ix < 0 || ix >= s.w) continue;
                acc += double(wp[((1LL * co * s.c + ci) * k + ky) * k + kx]) *
                       xp[((1LL * n * s.c + ci) * s.h + iy) * s.w + ix];
              }
            }
          op[((1LL * n * out_shape.c + co) * out_shape.h + oy) * out_shape.w +
             ox] = float(acc);
        }
    }
  return out;
}

}  // namespace spadi
